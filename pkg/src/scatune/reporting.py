"""Report emission: delimited data files plus rendered figures.

Every report path writes CSV next to a matplotlib PNG so that results can be
consumed by scripts and eyeballed directly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .campaign import CampaignReport, ComparisonSummary
from .cpa import CpaResult
from .power import TracePool


def write_success_csv(report: CampaignReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_traces", "successes", "trials"])
        for n, successes in report.success_curve:
            writer.writerow([n, successes, report.trials])


def plot_success_curve(reports: list[CampaignReport], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for report in reports:
        ns = [n for n, _ in report.success_curve]
        rates = [s / report.trials for _, s in report.success_curve]
        label = report.scenario_label
        if report.ttd is None:
            label += " (not disclosed)"
        ax.plot(ns, rates, marker="o", markersize=3, label=label)
    ax.axhline(reports[0].confidence, color="gray", linestyle="--", linewidth=1)
    ax.set_xlabel("traces available")
    ax.set_ylabel("full-key success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    ax.set_title("CPA success rate vs. trace budget")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_power_csv(pool: TracePool, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trace", "power"])
        for i, p in enumerate(pool.powers):
            writer.writerow([i, repr(float(p))])


def plot_power_histogram(pools: list[TracePool], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for pool in pools:
        ax.hist(pool.powers, bins=80, alpha=0.55, label=pool.scenario_label)
    ax.set_xlabel("peak power (model units)")
    ax.set_ylabel("traces")
    ax.legend(fontsize=8)
    ax.set_title("Power profile histogram")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_pcc_csv(result: CpaResult, path: str | Path, top: int = 5) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["byte", "rank", "guess", "pcc", "margin"])
        for b in range(16):
            for rank in range(top):
                guess = int(result.ranking[b, rank])
                writer.writerow(
                    [b, rank, f"0x{guess:02x}",
                     repr(float(result.pcc[b, guess])),
                     repr(float(result.margins[b]))]
                )


def plot_pcc_ranks(result: CpaResult, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    abs_pcc = np.abs(result.pcc)
    for b in range(16):
        ax.plot(np.sort(abs_pcc[b])[::-1][:32], linewidth=0.9, alpha=0.8)
    ax.set_xlabel("candidate rank (top 32)")
    ax.set_ylabel("|pcc|")
    ax.set_title("Candidate separation per key byte")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_comparison_csv(summary: ComparisonSummary, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "campaigns", "undisclosed", "ttd_min", "ttd_median",
             "ttd_max", "pool_size"]
        )
        for s in summary.stats:
            writer.writerow(
                [s.label, s.campaigns, s.undisclosed, s.ttd_min, s.ttd_median,
                 s.ttd_max, s.pool_size]
            )
        writer.writerow([])
        writer.writerow(["scenario_a", "scenario_b", "ratio", "lower_bound"])
        for r in summary.ratios:
            writer.writerow([r.label_a, r.label_b, repr(r.ratio), r.lower_bound])


def plot_ttd_comparison(summary: ComparisonSummary, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels, mins, medians, maxs = [], [], [], []
    for s in summary.stats:
        if s.ttd_median is None:
            continue
        labels.append(s.label)
        mins.append(s.ttd_min)
        medians.append(s.ttd_median)
        maxs.append(s.ttd_max)
    if labels:
        x = np.arange(len(labels))
        yerr = np.array(
            [np.array(medians) - np.array(mins), np.array(maxs) - np.array(medians)]
        )
        ax.errorbar(x, medians, yerr=yerr, fmt="s", capsize=4)
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    undisclosed = [s.label for s in summary.stats if s.ttd_median is None]
    if undisclosed:
        ax.set_title(f"TTD per scenario (never disclosed: {', '.join(undisclosed)})")
    else:
        ax.set_title("TTD per scenario (min/median/max)")
    ax.set_ylabel("traces to disclosure")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
