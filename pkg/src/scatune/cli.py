"""Command-line surface.

Subcommands: gen, attack, campaign, compare, ingest-vcd, report.
Exit codes: 0 success / disclosed, 1 not disclosed / no significant outlier,
2 usage error, 3 data or format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import (
    CampaignReport,
    TtdConfig,
    compare_scenarios,
    run_campaign,
)
from .config import ConfigError, load_config, parse_hex_key
from .cpa import (
    DEFAULT_OUTLIER_THRESHOLD,
    build_hypotheses,
    is_disclosed,
    run_cpa,
    significant_outlier,
)
from .power import synthesize_pool
from .traceio import TraceFormatError, read_pool, write_pool
from .vcd import VcdError, extract_toggles, parse_vcd, toggles_to_pool

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_DATA = 3


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SCATUNE_WORKERS", "1")))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatune",
        description="Synthesize tuned AES power traces, attack them with CPA, "
        "and measure traces-to-disclosure.",
    )
    parser.add_argument("--version", action="version", version=f"scatune {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="synthesize a trace pool and write a trace file")
    gen.add_argument("-c", "--config", required=True)
    gen.add_argument("-s", "--scenario", required=True, help="scenario label from the config")
    gen.add_argument("-o", "--out", required=True)
    gen.add_argument("--pool-size", type=int, help="override the config pool size")
    gen.add_argument("--seed", type=int, help="override the config master seed")
    gen.add_argument("--workers", type=int, default=_default_workers())

    attack = sub.add_parser("attack", help="run CPA on a trace file")
    attack.add_argument("traces")
    attack.add_argument("--key", help="true key (hex); enables designer-mode verdict")
    attack.add_argument("--threshold", type=float, default=DEFAULT_OUTLIER_THRESHOLD)
    attack.add_argument("--top", type=int, default=5, help="candidates to report per byte")
    attack.add_argument("--json", dest="json_out", help="write the report as JSON")
    attack.add_argument(
        "--progression-csv",
        help="write |pcc| of the leading candidates vs. growing trace counts",
    )

    camp = sub.add_parser("campaign", help="stepped TTD campaign on a trace file")
    camp.add_argument("traces")
    camp.add_argument("--key", required=True, help="true key (hex)")
    camp.add_argument("-c", "--config", help="config providing the ttd section")
    camp.add_argument("--confidence", type=float)
    camp.add_argument("--trials", type=int)
    camp.add_argument("--step", type=int)
    camp.add_argument("--start", help="integer or 'auto'")
    camp.add_argument("--seed", type=int, help="campaign seed (default: the pool's seed)")
    camp.add_argument("--workers", type=int, default=_default_workers())
    camp.add_argument("--out", help="write the campaign report as JSON")
    camp.add_argument("--csv", help="write the (n, successes) curve as CSV")

    comp = sub.add_parser("compare", help="compare campaign reports across scenarios")
    comp.add_argument("reports", nargs="+")
    comp.add_argument("--json", dest="json_out")
    comp.add_argument("--csv")

    ingest = sub.add_parser("ingest-vcd", help="build a trace pool from a VCD dump")
    ingest.add_argument("vcd")
    ingest.add_argument("--clock", required=True, help="clock signal name")
    ingest.add_argument(
        "--text-glob", action="append", required=True,
        help="glob for text-FF signal names (repeatable)",
    )
    ingest.add_argument(
        "--other-glob", action="append", default=[],
        help="glob for other-FF signal names (repeatable)",
    )
    ingest.add_argument(
        "--ciphertexts", required=True,
        help="sidecar file: one 32-hex-char ciphertext per line",
    )
    ingest.add_argument("-c", "--config", required=True)
    ingest.add_argument("-s", "--scenario", required=True)
    ingest.add_argument("--stride", type=int, default=1, help="cycles per encryption")
    ingest.add_argument("--offset", type=int, default=0, help="first designated cycle")
    ingest.add_argument("--seed", type=int, help="override the config master seed")
    ingest.add_argument("-o", "--out", required=True)

    rep = sub.add_parser("report", help="render CSV data and figures from results")
    rep.add_argument("--campaign", action="append", default=[], help="campaign report JSON")
    rep.add_argument("--traces", action="append", default=[], help="trace file")
    rep.add_argument("--outdir", required=True)

    return parser


def _cmd_gen(args) -> int:
    cfg = load_config(args.config)
    scenario = cfg.scenario(args.scenario)
    pool = synthesize_pool(
        key=cfg.key,
        n_traces=args.pool_size or cfg.pool_size,
        scenario=scenario,
        params=cfg.params,
        master_seed=cfg.master_seed if args.seed is None else args.seed,
        n_workers=args.workers,
    )
    write_pool(pool, args.out)
    print(
        f"wrote {len(pool)} traces for scenario {scenario.label!r} to {args.out} "
        f"(seed {pool.master_seed}, provenance {pool.provenance_hash()[:16]})"
    )
    return EXIT_OK


def _attack_report(result, pool, args, verdict: bool, mode: str) -> dict:
    return {
        "mode": mode,
        "verdict": bool(verdict),
        "traces": args.traces,
        "n_traces_used": result.n_traces_used,
        "scenario_label": pool.scenario_label,
        "master_seed": pool.master_seed,
        "provenance_hash": pool.provenance_hash(),
        "threshold": args.threshold,
        "recovered_round10_key": result.recovered_key.hex(),
        "per_byte": [
            {
                "byte": b,
                "margin": float(result.margins[b]),
                "top": [
                    {
                        "guess": f"0x{int(g):02x}",
                        "pcc": float(result.pcc[b, int(g)]),
                    }
                    for g in result.ranking[b, : args.top]
                ],
            }
            for b in range(16)
        ],
    }


def _cmd_attack(args) -> int:
    pool = read_pool(args.traces)
    hyp = build_hypotheses(pool.ciphertexts)
    result = run_cpa(pool.powers, hyp)

    if args.key is not None:
        verdict = is_disclosed(result, parse_hex_key(args.key))
        mode = "designer"
        verdict_text = "disclosed" if verdict else "not disclosed"
    else:
        verdict = significant_outlier(result, args.threshold)
        mode = "attacker"
        verdict_text = (
            "significant outlier" if verdict else "no significant outlier"
        )

    report = _attack_report(result, pool, args, verdict, mode)
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report, indent=2) + "\n")
    if args.progression_csv:
        _write_progression_csv(pool, args.progression_csv)

    print(f"{mode} mode on {len(pool)} traces: {verdict_text}")
    print(f"recovered round-10 key: {result.recovered_key.hex()}")
    worst = int(np.argmin(result.margins))
    print(f"weakest byte {worst}: margin {result.margins[worst]:.2f}")
    return EXIT_OK if verdict else EXIT_NEGATIVE


def _write_progression_csv(pool, path: str, points: int = 20) -> None:
    import csv

    hyp = build_hypotheses(pool.ciphertexts)
    steps = np.unique(np.linspace(2, len(pool), points, dtype=int))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_traces"] + [f"byte{b}_top_pcc" for b in range(16)]
                        + [f"byte{b}_margin" for b in range(16)])
        for n in steps:
            result = run_cpa(pool.powers[:n], hyp[:, :, :n])
            top = [float(np.abs(result.pcc[b]).max()) for b in range(16)]
            margins = [float(m) for m in result.margins]
            writer.writerow([int(n)] + [repr(v) for v in top + margins])


def _cmd_campaign(args) -> int:
    pool = read_pool(args.traces)
    key = parse_hex_key(args.key)

    ttd = load_config(args.config).ttd if args.config else TtdConfig()
    overrides = {}
    if args.confidence is not None:
        overrides["confidence"] = args.confidence
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.step is not None:
        overrides["step"] = args.step
    if args.start is not None:
        overrides["start"] = "auto" if args.start == "auto" else int(args.start)
    if overrides:
        ttd = TtdConfig(**{**vars(ttd), **overrides})

    seed = pool.master_seed if args.seed is None else args.seed
    report = run_campaign(pool, key, ttd, seed, n_workers=args.workers)

    if args.out:
        Path(args.out).write_text(report.to_json())
    if args.csv:
        from .reporting import write_success_csv

        write_success_csv(report, args.csv)

    if report.ttd is not None:
        print(
            f"scenario {report.scenario_label!r}: "
            f"TTD({report.confidence:.0%}, t={report.trials}) = {report.ttd} traces"
        )
        return EXIT_OK
    print(
        f"scenario {report.scenario_label!r}: not disclosed within "
        f"{report.pool_size} traces at {report.confidence:.0%} confidence"
    )
    return EXIT_NEGATIVE


def _cmd_compare(args, parser: argparse.ArgumentParser) -> int:
    if len(args.reports) < 2:
        parser.error("compare needs at least two report files")
    reports = [CampaignReport.from_json(Path(p).read_text()) for p in args.reports]
    summary = compare_scenarios(reports)
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    if args.csv:
        from .reporting import write_comparison_csv

        write_comparison_csv(summary, args.csv)
    print(summary.to_text(), end="")
    return EXIT_OK


def _read_ciphertext_sidecar(path: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if len(line) != 32:
            raise VcdError(
                f"{path}:{lineno}: ciphertext lines must be 32 hex chars, got {len(line)}"
            )
        try:
            rows.append(np.frombuffer(bytes.fromhex(line), dtype=np.uint8))
        except ValueError as exc:
            raise VcdError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise VcdError(f"{path}: no ciphertexts found")
    return np.stack(rows)


def _cmd_ingest_vcd(args) -> int:
    cfg = load_config(args.config)
    scenario = cfg.scenario(args.scenario)
    doc = parse_vcd(Path(args.vcd).read_text())
    groups = {"text": args.text_glob}
    if args.other_glob:
        groups["other"] = args.other_glob
    profile = extract_toggles(doc, args.clock, groups)
    cts = _read_ciphertext_sidecar(args.ciphertexts)
    pool = toggles_to_pool(
        profile,
        cts,
        scenario,
        cfg.params,
        cfg.master_seed if args.seed is None else args.seed,
        cycle_stride=args.stride,
        cycle_offset=args.offset,
    )
    write_pool(pool, args.out)
    print(
        f"ingested {len(profile.per_cycle)} cycles -> {len(pool)} traces "
        f"for scenario {scenario.label!r}; wrote {args.out}"
    )
    return EXIT_OK


def _cmd_report(args, parser: argparse.ArgumentParser) -> int:
    from . import reporting

    if not args.campaign and not args.traces:
        parser.error("report needs --campaign and/or --traces inputs")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if args.campaign:
        reports = [CampaignReport.from_json(Path(p).read_text()) for p in args.campaign]
        for report in reports:
            csv_path = outdir / f"success_{report.scenario_label}.csv"
            reporting.write_success_csv(report, csv_path)
            written.append(csv_path)
        fig_path = outdir / "success_curves.png"
        reporting.plot_success_curve(reports, fig_path)
        written.append(fig_path)
        if len({r.scenario_label for r in reports}) >= 2:
            summary = compare_scenarios(reports)
            csv_path = outdir / "comparison.csv"
            reporting.write_comparison_csv(summary, csv_path)
            fig_path = outdir / "ttd_comparison.png"
            reporting.plot_ttd_comparison(summary, fig_path)
            written.extend([csv_path, fig_path])

    if args.traces:
        pools = [read_pool(p) for p in args.traces]
        for pool in pools:
            csv_path = outdir / f"powers_{pool.scenario_label}.csv"
            reporting.write_power_csv(pool, csv_path)
            written.append(csv_path)
        fig_path = outdir / "power_histogram.png"
        reporting.plot_power_histogram(pools, fig_path)
        written.append(fig_path)
        stats_path = outdir / "power_stats.txt"
        with open(stats_path, "w") as fh:
            for pool in pools:
                fh.write(
                    f"{pool.scenario_label}: n={len(pool)} "
                    f"mean_peak={pool.powers.mean():.6g} sd={pool.powers.std():.6g} "
                    f"min={pool.powers.min():.6g} max={pool.powers.max():.6g}\n"
                )
        written.append(stats_path)

    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "attack":
            return _cmd_attack(args)
        if args.command == "campaign":
            return _cmd_campaign(args)
        if args.command == "compare":
            return _cmd_compare(args, parser)
        if args.command == "ingest-vcd":
            return _cmd_ingest_vcd(args)
        if args.command == "report":
            return _cmd_report(args, parser)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, TraceFormatError, VcdError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
