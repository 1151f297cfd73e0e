"""Tuning scenarios: which register groups get which driver strengths / VCCs,
statically or re-drawn at runtime, and the sampling of concrete per-encryption
assignments.

Two register groups are modeled: the 128 flip-flops holding the AES text
(one per state bit) and a lumped "everything else" group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_TEXT_FFS = 128


class DegenerateScenarioError(ValueError):
    """A dynamic mode was declared over a singleton universe."""


def _check_universe(values, what: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ValueError(f"{what} universe must be non-empty")
    if any(v <= 0 for v in vals):
        raise ValueError(f"{what} universe values must be > 0")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{what} universe must be strictly increasing")
    return vals


@dataclass(frozen=True)
class StrengthUniverse:
    """Available driver-strength multipliers (the X-numbers)."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _check_universe(self.values, "strength"))


@dataclass(frozen=True)
class VccUniverse:
    """Available supply voltages, plus the nominal voltage for normalization."""

    values: tuple[float, ...]
    nominal: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _check_universe(self.values, "VCC"))
        if self.nominal <= 0:
            raise ValueError("nominal VCC must be > 0")


@dataclass(frozen=True)
class Static:
    """A parameter fixed at design time."""

    value: float

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise ValueError("static value must be > 0")


@dataclass(frozen=True)
class Dynamic:
    """A parameter re-drawn at runtime, uniformly over a universe."""

    universe: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "universe", _check_universe(self.universe, "dynamic"))


Mode = Static | Dynamic


@dataclass(frozen=True)
class GroupPolicy:
    """How one register group is tuned.

    ``io_emulation`` models the FPGA variant where each tuned register
    additionally drives an IO pin; ``None`` switches it off (ASIC-style).
    """

    strength: Mode
    vcc: Mode
    io_emulation: Mode | None = None


@dataclass(frozen=True)
class TuningScenario:
    label: str
    text_ffs: GroupPolicy
    other_ffs: GroupPolicy


@dataclass(frozen=True)
class TuningAssignment:
    """Concrete tuning values for one encryption.

    ``per_ff_strength`` covers the 128 text flip-flops; the other group is
    lumped into a single strength and VCC.  ``per_ff_io_strength`` is None
    when IO-pin emulation is off.
    """

    per_ff_strength: np.ndarray
    other_group_strength: float
    vcc_last_round: float
    other_group_vcc: float
    per_ff_io_strength: np.ndarray | None = None


def _sample_mode(mode: Mode, rng: np.random.Generator, n: int | None = None):
    """One value (n=None) or an n-vector drawn per the mode."""
    if isinstance(mode, Static):
        return mode.value if n is None else np.full(n, mode.value)
    if len(mode.universe) < 2:
        raise DegenerateScenarioError(
            f"dynamic universe {mode.universe} is a singleton; declare it static instead"
        )
    universe = np.asarray(mode.universe)
    if n is None:
        return float(universe[rng.integers(0, len(universe))])
    return universe[rng.integers(0, len(universe), size=n)]


def sample_assignment(scenario: TuningScenario, rng: np.random.Generator) -> TuningAssignment:
    """Draw one per-encryption assignment.

    Dynamic strengths are drawn independently per text FF; dynamic VCC is
    drawn once (it applies to the single modeled last round).  Deterministic
    given the generator's state; the draw order is fixed.
    """
    text = scenario.text_ffs
    other = scenario.other_ffs
    per_ff = np.asarray(_sample_mode(text.strength, rng, N_TEXT_FFS), dtype=np.float64)
    other_strength = _sample_mode(other.strength, rng)
    vcc_last = _sample_mode(text.vcc, rng)
    other_vcc = _sample_mode(other.vcc, rng)
    io = None
    if text.io_emulation is not None:
        io = np.asarray(_sample_mode(text.io_emulation, rng, N_TEXT_FFS), dtype=np.float64)
    return TuningAssignment(
        per_ff_strength=per_ff,
        other_group_strength=float(other_strength),
        vcc_last_round=float(vcc_last),
        other_group_vcc=float(other_vcc),
        per_ff_io_strength=io,
    )


def static_scenario(label: str, strength: float, vcc: float) -> TuningScenario:
    """All-static scenario with both groups tuned identically."""
    policy = GroupPolicy(strength=Static(strength), vcc=Static(vcc))
    return TuningScenario(label=label, text_ffs=policy, other_ffs=policy)


def enumerate_static_grid(strengths: StrengthUniverse, vccs: VccUniverse) -> list[TuningScenario]:
    """All |strengths| x |vccs| all-static scenarios, both groups identical.

    Covers the all-FFs-equal setting; grids where the two groups are tuned
    independently are obtained by composing two calls.
    """
    return [
        static_scenario(f"static-x{s:g}-v{v:g}", s, v)
        for s in strengths.values
        for v in vccs.values
    ]


# Parameter universes used throughout the experiments.  The ASIC strength
# universe names only its endpoints in the source material; the three
# intermediate strengths and the middle VCC are interpolated defaults and can
# be overridden in any config.
ASIC_STRENGTHS = StrengthUniverse(values=(0.5, 1.0, 2.0, 3.0, 4.0))
ASIC_VCCS = VccUniverse(values=(0.90, 0.99, 1.08), nominal=1.08)
FPGA_IO_STRENGTHS = StrengthUniverse(values=(4.0, 16.0))
FPGA_VCCS = VccUniverse(values=(0.955, 1.055), nominal=1.055)
