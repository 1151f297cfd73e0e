"""Tests for tuning scenarios and per-encryption assignment sampling."""

import numpy as np
import pytest

from scatune.tuning import (
    ASIC_STRENGTHS,
    ASIC_VCCS,
    FPGA_IO_STRENGTHS,
    FPGA_VCCS,
    N_TEXT_FFS,
    DegenerateScenarioError,
    Dynamic,
    GroupPolicy,
    Static,
    StrengthUniverse,
    TuningScenario,
    VccUniverse,
    enumerate_static_grid,
    sample_assignment,
    static_scenario,
)


def test_static_scenario_fixed_values_any_seed():
    scen = static_scenario("s", 2.0, 0.99)
    for seed in (0, 1, 12345):
        a = sample_assignment(scen, np.random.default_rng(seed))
        assert np.all(a.per_ff_strength == 2.0)
        assert a.per_ff_strength.shape == (N_TEXT_FFS,)
        assert a.other_group_strength == 2.0
        assert a.vcc_last_round == 0.99
        assert a.other_group_vcc == 0.99
        assert a.per_ff_io_strength is None


def test_dynamic_strength_frequencies_are_uniform():
    universe = StrengthUniverse(values=(0.5, 4.0))
    scen = TuningScenario(
        label="dyn-x",
        text_ffs=GroupPolicy(strength=Dynamic(universe.values), vcc=Static(1.08)),
        other_ffs=GroupPolicy(strength=Static(1.0), vcc=Static(1.08)),
    )
    rng = np.random.default_rng(2024)
    draws = np.concatenate(
        [sample_assignment(scen, rng).per_ff_strength for _ in range(800)]
    )
    # 800 * 128 = 102400 Bernoulli draws; 0.5 +/- 0.01 is > 6 sigma wide.
    frac = float(np.mean(draws == 4.0))
    assert set(np.unique(draws)) == {0.5, 4.0}
    assert abs(frac - 0.5) < 0.01


def test_sample_assignment_deterministic_for_fixed_seed():
    scen = TuningScenario(
        label="dyn-joint",
        text_ffs=GroupPolicy(
            strength=Dynamic((0.5, 4.0)), vcc=Dynamic((0.90, 1.08))
        ),
        other_ffs=GroupPolicy(strength=Static(1.0), vcc=Static(1.08)),
    )
    a = sample_assignment(scen, np.random.default_rng(77))
    b = sample_assignment(scen, np.random.default_rng(77))
    assert np.array_equal(a.per_ff_strength, b.per_ff_strength)
    assert a.vcc_last_round == b.vcc_last_round
    assert a.other_group_strength == b.other_group_strength


def test_io_emulation_draws_per_ff_values():
    scen = TuningScenario(
        label="fpga-dyn-io",
        text_ffs=GroupPolicy(
            strength=Static(1.0),
            vcc=Static(FPGA_VCCS.nominal),
            io_emulation=Dynamic(FPGA_IO_STRENGTHS.values),
        ),
        other_ffs=GroupPolicy(strength=Static(1.0), vcc=Static(FPGA_VCCS.nominal)),
    )
    a = sample_assignment(scen, np.random.default_rng(3))
    assert a.per_ff_io_strength is not None
    assert a.per_ff_io_strength.shape == (N_TEXT_FFS,)
    assert set(np.unique(a.per_ff_io_strength)) <= {4.0, 16.0}


def test_static_grid_size_is_product_of_universes():
    grid = enumerate_static_grid(ASIC_STRENGTHS, ASIC_VCCS)
    assert len(grid) == 15
    assert len({s.label for s in grid}) == 15
    small = enumerate_static_grid(
        StrengthUniverse(values=(1.0,)), VccUniverse(values=(1.0,), nominal=1.0)
    )
    assert len(small) == 1
    big = enumerate_static_grid(
        StrengthUniverse(values=tuple(float(i) for i in range(1, 11))),
        VccUniverse(values=tuple(0.9 + 0.01 * i for i in range(10)), nominal=1.0),
    )
    assert len(big) == 100


def test_singleton_dynamic_universe_is_degenerate():
    scen = TuningScenario(
        label="bad",
        text_ffs=GroupPolicy(strength=Dynamic((2.0,)), vcc=Static(1.08)),
        other_ffs=GroupPolicy(strength=Static(1.0), vcc=Static(1.08)),
    )
    with pytest.raises(DegenerateScenarioError):
        sample_assignment(scen, np.random.default_rng(0))


def test_universe_validation():
    with pytest.raises(ValueError):
        StrengthUniverse(values=())
    with pytest.raises(ValueError):
        StrengthUniverse(values=(1.0, 1.0))
    with pytest.raises(ValueError):
        StrengthUniverse(values=(-1.0, 2.0))
