"""Zero-delay peak-power synthesis for the AES last-round register transition.

The power model is deliberately simple and isolated in :func:`trace_power`:
each toggling text-FF bit contributes strength * (vcc / v_nominal)^2, the
non-text registers contribute a data-independent background (mean + jitter)
scaled by their own strength and VCC, optional IO-pin emulation adds
io_leak_weight * io_strength per toggling bit, and Gaussian measurement noise
can be layered on top.  One peak sample is emitted per encryption.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from multiprocessing import get_context

import numpy as np

from .aes import encrypt_block
from .tuning import TuningAssignment, TuningScenario, sample_assignment

POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

# Substream tags: per-trace children of the master seed.
_STREAM_PLAINTEXT = 0
_STREAM_ASSIGNMENT = 1
_STREAM_NOISE = 2


@dataclass(frozen=True)
class PowerModelParams:
    v_nominal: float
    background_mean: float = 0.0
    background_jitter_sd: float = 0.0
    noise_sd: float = 0.0
    io_leak_weight: float = 0.0

    def __post_init__(self) -> None:
        if self.v_nominal <= 0:
            raise ValueError("v_nominal must be > 0")
        for name in ("background_jitter_sd", "noise_sd", "io_leak_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PowerModelParams":
        return cls(**d)


@dataclass
class TracePool:
    """Ciphertexts plus one peak-power sample per encryption."""

    ciphertexts: np.ndarray  # (N, 16) uint8
    powers: np.ndarray  # (N,) float64
    scenario_label: str
    master_seed: int
    params: PowerModelParams

    def __post_init__(self) -> None:
        self.ciphertexts = np.ascontiguousarray(self.ciphertexts, dtype=np.uint8)
        self.powers = np.ascontiguousarray(self.powers, dtype=np.float64)
        if self.ciphertexts.ndim != 2 or self.ciphertexts.shape[1] != 16:
            raise ValueError("ciphertexts must have shape (N, 16)")
        if len(self.ciphertexts) != len(self.powers):
            raise ValueError("ciphertexts and powers must have equal length")
        if len(self.powers) < 1:
            raise ValueError("a trace pool needs at least one trace")
        if not np.all(np.isfinite(self.powers)):
            raise ValueError("powers must be finite")

    def __len__(self) -> int:
        return len(self.powers)

    def provenance_hash(self) -> str:
        """Identifies the (key, plaintext pool) underlying this pool.

        Scenario comparisons are only fair on a shared text pool; the hash
        covers the seed, the pool size and the ciphertext bytes (which pin
        down key and plaintexts together).
        """
        h = hashlib.sha256()
        h.update(len(self.powers).to_bytes(8, "little"))
        h.update(int(self.master_seed).to_bytes(8, "little"))
        h.update(self.ciphertexts.tobytes())
        return h.hexdigest()


def hd_vector(prev: bytes, nxt: bytes) -> np.ndarray:
    """Per-byte Hamming distance between two 16-byte register states."""
    a = np.frombuffer(bytes(prev), dtype=np.uint8)
    b = np.frombuffer(bytes(nxt), dtype=np.uint8)
    if a.size != 16 or b.size != 16:
        raise ValueError("states must be exactly 16 bytes")
    return POPCOUNT[a ^ b]


def trace_power(
    hd: np.ndarray,
    assign: TuningAssignment,
    params: PowerModelParams,
    rng: np.random.Generator,
) -> float:
    """One peak-power sample for a last-round transition with the given
    per-byte Hamming distances.

    Within byte i, the hd[i] toggling bits are attributed to the first hd[i]
    of that byte's eight FFs; strengths are drawn i.i.d. per FF, so the
    choice of which bits toggle carries no information.
    """
    hd = np.asarray(hd)
    if hd.shape != (16,):
        raise ValueError("hd must have 16 elements")
    if hd.min() < 0 or hd.max() > 8:
        raise ValueError("hd elements must be in 0..8")

    scale = (assign.vcc_last_round / params.v_nominal) ** 2
    data = 0.0
    for i in range(16):
        k = int(hd[i])
        if k:
            data += float(assign.per_ff_strength[8 * i: 8 * i + k].sum())
            if assign.per_ff_io_strength is not None and params.io_leak_weight > 0:
                data += params.io_leak_weight * float(
                    assign.per_ff_io_strength[8 * i: 8 * i + k].sum()
                )
    power = data * scale

    bg_scale = assign.other_group_strength * (assign.other_group_vcc / params.v_nominal) ** 2
    background = params.background_mean
    if params.background_jitter_sd > 0:
        background += rng.normal(0.0, params.background_jitter_sd)
    power += bg_scale * background

    if params.noise_sd > 0:
        power += rng.normal(0.0, params.noise_sd)
    return float(power)


def derive_stream(master_seed: int, trace_index: int, tag: int) -> np.random.Generator:
    """Counter-derived substream: independent of how traces are scheduled."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(trace_index, tag))
    )


def _synthesize_range(
    key: bytes,
    scenario: TuningScenario,
    params: PowerModelParams,
    master_seed: int,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, np.ndarray]:
    cts = np.empty((hi - lo, 16), dtype=np.uint8)
    powers = np.empty(hi - lo, dtype=np.float64)
    for i in range(lo, hi):
        pt = derive_stream(master_seed, i, _STREAM_PLAINTEXT).bytes(16)
        assign = sample_assignment(
            scenario, derive_stream(master_seed, i, _STREAM_ASSIGNMENT)
        )
        trace = encrypt_block(key, pt)
        hd = hd_vector(trace.states[9], trace.states[10])
        powers[i - lo] = trace_power(
            hd, assign, params, derive_stream(master_seed, i, _STREAM_NOISE)
        )
        cts[i - lo] = np.frombuffer(trace.ciphertext, dtype=np.uint8)
    return cts, powers


def _synthesize_worker(args) -> tuple[np.ndarray, np.ndarray]:
    return _synthesize_range(*args)


def synthesize_pool(
    key: bytes,
    n_traces: int,
    scenario: TuningScenario,
    params: PowerModelParams,
    master_seed: int,
    n_workers: int = 1,
) -> TracePool:
    """Encrypt ``n_traces`` random plaintexts and emit one peak-power sample
    each.  Fully deterministic from ``master_seed`` for any worker count:
    every per-trace random stream is derived by trace index."""
    if n_traces < 1:
        raise ValueError("n_traces must be >= 1")
    if n_workers <= 1 or n_traces < 4 * n_workers:
        cts, powers = _synthesize_range(key, scenario, params, master_seed, 0, n_traces)
    else:
        bounds = np.linspace(0, n_traces, n_workers + 1, dtype=int)
        jobs = [
            (key, scenario, params, master_seed, int(lo), int(hi))
            for lo, hi in zip(bounds, bounds[1:])
            if hi > lo
        ]
        with get_context("fork").Pool(n_workers) as pool:
            parts = pool.map(_synthesize_worker, jobs)
        cts = np.concatenate([p[0] for p in parts])
        powers = np.concatenate([p[1] for p in parts])
    return TracePool(
        ciphertexts=cts,
        powers=powers,
        scenario_label=scenario.label,
        master_seed=master_seed,
        params=params,
    )
