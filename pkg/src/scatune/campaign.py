"""Stepped CPA campaigns and the traces-to-disclosure metric.

A campaign walks n = start, start + step, ... and at each step runs ``trials``
randomized CPA trials, each on n traces sampled without replacement from the
pool.  The first n whose success rate reaches the confidence level is the
TTD.  Per-trial subsets are derived from (master_seed, n, trial) only, so
results are independent of execution order and worker count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from multiprocessing import get_context
from statistics import median

import numpy as np

from .cpa import (
    DEFAULT_OUTLIER_THRESHOLD,
    build_hypotheses,
    is_disclosed,
    run_cpa,
    significant_outlier,
)
from .power import TracePool


@dataclass(frozen=True)
class TtdConfig:
    confidence: float = 0.90
    trials: int = 1000
    step: int = 5
    start: int | str = "auto"
    max_n: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.confidence <= 1:
            raise ValueError("confidence must be in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if isinstance(self.start, str) and self.start != "auto":
            raise ValueError("start must be an integer or 'auto'")


@dataclass
class CampaignReport:
    scenario_label: str
    ttd: int | None  # None: not disclosed within the pool
    success_curve: list[tuple[int, int]]  # (n_traces, successes)
    trials: int
    confidence: float
    step: int
    start: int
    master_seed: int
    pool_size: int
    provenance_hash: str

    def to_dict(self) -> dict:
        return {
            "scenario_label": self.scenario_label,
            "ttd": self.ttd,
            "success_curve": [list(p) for p in self.success_curve],
            "trials": self.trials,
            "confidence": self.confidence,
            "step": self.step,
            "start": self.start,
            "master_seed": self.master_seed,
            "pool_size": self.pool_size,
            "provenance_hash": self.provenance_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignReport":
        return cls(
            scenario_label=d["scenario_label"],
            ttd=d["ttd"],
            success_curve=[tuple(p) for p in d["success_curve"]],
            trials=d["trials"],
            confidence=d["confidence"],
            step=d["step"],
            start=d["start"],
            master_seed=d["master_seed"],
            pool_size=d["pool_size"],
            provenance_hash=d["provenance_hash"],
        )

    @classmethod
    def from_json(cls, text: str) -> "CampaignReport":
        return cls.from_dict(json.loads(text))


@dataclass
class RejectionReport:
    sets_total: int
    sets_rejected: int
    set_margins: list[float]  # min-over-bytes margin per set, at full set size

    def __post_init__(self) -> None:
        if self.sets_rejected > self.sets_total:
            raise ValueError("rejected count cannot exceed total")


# Worker-process state, inherited via fork before the pool is created.
_TRIAL_STATE: dict = {}


def _trace_major(hyp: np.ndarray) -> np.ndarray:
    """(16, 256, N) -> contiguous (N, 16, 256): subset gathers become cheap
    row copies instead of strided scatter reads."""
    return np.ascontiguousarray(hyp.transpose(2, 0, 1))


def _trial_success(
    powers: np.ndarray,
    hyp_t: np.ndarray,
    true_k10: bytes,
    n: int,
    master_seed: int,
    spawn_key: tuple,
) -> bool:
    rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=spawn_key))
    idx = rng.choice(len(powers), size=n, replace=False)
    result = run_cpa(powers[idx], hyp_t[idx].transpose(1, 2, 0))
    return result.recovered_key == true_k10


def _trial_batch(args: tuple) -> int:
    n, trials = args
    s = _TRIAL_STATE
    return sum(
        _trial_success(s["powers"], s["hyp"], s["k10"], n, s["seed"], (n, t))
        for t in trials
    )


def _run_step(
    powers: np.ndarray,
    hyp_t: np.ndarray,
    true_k10: bytes,
    n: int,
    trials: int,
    master_seed: int,
    n_workers: int,
    worker_pool,
) -> int:
    if worker_pool is None:
        return sum(
            _trial_success(powers, hyp_t, true_k10, n, master_seed, (n, t))
            for t in range(trials)
        )
    chunks = np.array_split(np.arange(trials), n_workers)
    jobs = [(n, [int(t) for t in c]) for c in chunks if len(c)]
    return sum(worker_pool.map(_trial_batch, jobs))


def auto_start(
    pool: TracePool,
    true_key: bytes,
    cfg: TtdConfig,
    master_seed: int,
    hyp_t: np.ndarray | None = None,
) -> int:
    """Exploratory doubling search for a campaign starting point: the largest
    probed n whose (reduced-trial) success rate stays below the confidence
    level, clamped into [step, pool size]."""
    from .aes import last_round_key

    if len(pool) < 2:
        raise ValueError("pool too small for exploratory sampling")
    if hyp_t is None:
        hyp_t = _trace_major(build_hypotheses(pool.ciphertexts))
    true_k10 = last_round_key(true_key)
    max_n = min(cfg.max_n or len(pool), len(pool))
    t_probe = max(10, cfg.trials // 20)
    best = cfg.step
    n = cfg.step
    while n <= max_n:
        successes = sum(
            _trial_success(pool.powers, hyp_t, true_k10, n, master_seed, (n, t, 1))
            for t in range(t_probe)
        )
        if successes / t_probe >= cfg.confidence:
            break
        best = n
        n *= 2
    return min(best, max_n)


def run_campaign(
    pool: TracePool,
    true_key: bytes,
    cfg: TtdConfig,
    master_seed: int,
    n_workers: int = 1,
) -> CampaignReport:
    """Full stepped campaign; stops at the first step reaching the confidence
    level.  Deterministic for a fixed master seed, at any worker count."""
    from .aes import last_round_key

    max_n = min(cfg.max_n or len(pool), len(pool))
    hyp_t = _trace_major(build_hypotheses(pool.ciphertexts))
    true_k10 = last_round_key(true_key)
    if cfg.start == "auto":
        start = auto_start(pool, true_key, cfg, master_seed, hyp_t=hyp_t)
    else:
        start = int(cfg.start)
    if not 2 <= start <= max_n:
        raise ValueError(f"start {start} outside valid range 2..{max_n}")

    worker_pool = None
    ctx = None
    if n_workers > 1:
        _TRIAL_STATE.update(
            powers=pool.powers, hyp=hyp_t, k10=true_k10, seed=master_seed
        )
        ctx = get_context("fork")
        worker_pool = ctx.Pool(n_workers)
    try:
        curve: list[tuple[int, int]] = []
        ttd: int | None = None
        for n in range(start, max_n + 1, cfg.step):
            successes = _run_step(
                pool.powers, hyp_t, true_k10, n, cfg.trials, master_seed,
                n_workers, worker_pool,
            )
            curve.append((n, successes))
            if successes / cfg.trials >= cfg.confidence:
                ttd = n
                break
    finally:
        if worker_pool is not None:
            worker_pool.close()
            worker_pool.join()
            _TRIAL_STATE.clear()

    return CampaignReport(
        scenario_label=pool.scenario_label,
        ttd=ttd,
        success_curve=curve,
        trials=cfg.trials,
        confidence=cfg.confidence,
        step=cfg.step,
        start=start,
        master_seed=master_seed,
        pool_size=len(pool),
        provenance_hash=pool.provenance_hash(),
    )


def reject_noisy_sets(
    pool: TracePool,
    set_size: int,
    threshold: float = DEFAULT_OUTLIER_THRESHOLD,
) -> tuple[TracePool, RejectionReport]:
    """Attacker-mode pre-processing: split the pool into consecutive sets of
    ``set_size``, keep only those showing a significant PCC outlier at full
    set size, and concatenate the survivors."""
    if set_size < 2:
        raise ValueError("set_size must be >= 2")
    if set_size > len(pool):
        raise ValueError(f"set_size {set_size} exceeds pool size {len(pool)}")
    n_sets = len(pool) // set_size
    keep_ct: list[np.ndarray] = []
    keep_p: list[np.ndarray] = []
    margins: list[float] = []
    rejected = 0
    for s in range(n_sets):
        lo, hi = s * set_size, (s + 1) * set_size
        cts = pool.ciphertexts[lo:hi]
        powers = pool.powers[lo:hi]
        result = run_cpa(powers, build_hypotheses(cts))
        margins.append(float(result.margins.min()))
        if significant_outlier(result, threshold):
            keep_ct.append(cts)
            keep_p.append(powers)
        else:
            rejected += 1
    report = RejectionReport(sets_total=n_sets, sets_rejected=rejected, set_margins=margins)
    if not keep_ct:
        raise ValueError("all trace sets were rejected; nothing left to attack")
    filtered = TracePool(
        ciphertexts=np.concatenate(keep_ct),
        powers=np.concatenate(keep_p),
        scenario_label=pool.scenario_label,
        master_seed=pool.master_seed,
        params=pool.params,
    )
    return filtered, report


@dataclass
class ScenarioStats:
    label: str
    campaigns: int
    undisclosed: int
    pool_size: int
    ttd_min: int | None
    ttd_median: float | None
    ttd_max: int | None


@dataclass
class RatioEntry:
    label_a: str
    label_b: str
    ratio: float
    lower_bound: bool  # True when A never disclosed: ratio is ">= ratio"

    def __str__(self) -> str:
        prefix = ">" if self.lower_bound else ""
        return f"{self.label_a} vs {self.label_b}: {prefix}{self.ratio:.2f}x"


@dataclass
class ComparisonSummary:
    stats: list[ScenarioStats]
    ratios: list[RatioEntry]

    def to_dict(self) -> dict:
        return {
            "scenarios": [vars(s) for s in self.stats],
            "ratios": [vars(r) for r in self.ratios],
        }

    def to_text(self) -> str:
        lines = ["scenario  campaigns  undisclosed  ttd(min/median/max)  pool"]
        for s in self.stats:
            if s.ttd_median is None:
                ttd = "not disclosed"
            else:
                ttd = f"{s.ttd_min}/{s.ttd_median:g}/{s.ttd_max}"
            lines.append(
                f"{s.label}  {s.campaigns}  {s.undisclosed}  {ttd}  {s.pool_size}"
            )
        lines.append("")
        lines.extend(str(r) for r in self.ratios)
        return "\n".join(lines) + "\n"


def compare_scenarios(reports: list[CampaignReport]) -> ComparisonSummary:
    """Per-scenario TTD distributions plus pairwise resilience ratios.

    All reports must stem from the same key/plaintext pool (checked via the
    provenance hash).  A scenario that never disclosed yields lower-bound
    ratios based on its pool size, flagged with '>'.
    """
    if len(reports) < 2:
        raise ValueError("need at least two campaign reports to compare")
    hashes = {r.provenance_hash for r in reports}
    if len(hashes) != 1:
        raise ValueError(
            "reports stem from different key/plaintext pools; comparison is unfair: "
            + ", ".join(sorted(hashes))
        )

    by_label: dict[str, list[CampaignReport]] = {}
    for r in reports:
        by_label.setdefault(r.scenario_label, []).append(r)

    stats = []
    effective: dict[str, tuple[float, bool]] = {}  # label -> (ttd-or-bound, is_bound)
    for label, group in by_label.items():
        finite = sorted(r.ttd for r in group if r.ttd is not None)
        undisclosed = sum(1 for r in group if r.ttd is None)
        pool_size = max(r.pool_size for r in group)
        stats.append(
            ScenarioStats(
                label=label,
                campaigns=len(group),
                undisclosed=undisclosed,
                pool_size=pool_size,
                ttd_min=finite[0] if finite else None,
                ttd_median=median(finite) if finite else None,
                ttd_max=finite[-1] if finite else None,
            )
        )
        if finite:
            effective[label] = (float(median(finite)), False)
        else:
            effective[label] = (float(pool_size), True)

    labels = list(by_label)
    ratios = []
    for a in labels:
        for b in labels:
            if a == b:
                continue
            ttd_a, bound_a = effective[a]
            ttd_b, bound_b = effective[b]
            if bound_b:
                continue  # denominator unknown beyond a lower bound
            ratios.append(
                RatioEntry(label_a=a, label_b=b, ratio=ttd_a / ttd_b, lower_bound=bound_a)
            )
    return ComparisonSummary(stats=stats, ratios=ratios)
