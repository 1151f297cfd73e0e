"""Desk-scale study of driver-strength / supply-voltage tuning as a power
side-channel countermeasure: synthetic AES last-round power traces, CPA
attacks, and traces-to-disclosure campaigns."""

__version__ = "0.1.0"

from .aes import (
    RoundTrace,
    encrypt_block,
    invert_key_schedule,
    invert_last_round_byte,
    last_round_key,
)
from .campaign import (
    CampaignReport,
    RejectionReport,
    TtdConfig,
    auto_start,
    compare_scenarios,
    reject_noisy_sets,
    run_campaign,
)
from .cpa import (
    CpaResult,
    StreamingPearson,
    build_hypotheses,
    is_disclosed,
    pearson,
    run_cpa,
    significant_outlier,
)
from .power import PowerModelParams, TracePool, hd_vector, synthesize_pool, trace_power
from .traceio import read_pool, write_pool
from .tuning import (
    Dynamic,
    GroupPolicy,
    Static,
    StrengthUniverse,
    TuningAssignment,
    TuningScenario,
    VccUniverse,
    enumerate_static_grid,
    sample_assignment,
)
from .vcd import extract_toggles, parse_vcd, serialize_vcd, toggles_to_pool

__all__ = [
    "CampaignReport",
    "CpaResult",
    "Dynamic",
    "GroupPolicy",
    "PowerModelParams",
    "RejectionReport",
    "RoundTrace",
    "Static",
    "StreamingPearson",
    "StrengthUniverse",
    "TracePool",
    "TtdConfig",
    "TuningAssignment",
    "TuningScenario",
    "VccUniverse",
    "auto_start",
    "build_hypotheses",
    "compare_scenarios",
    "encrypt_block",
    "enumerate_static_grid",
    "extract_toggles",
    "hd_vector",
    "invert_key_schedule",
    "invert_last_round_byte",
    "is_disclosed",
    "last_round_key",
    "parse_vcd",
    "pearson",
    "read_pool",
    "reject_noisy_sets",
    "run_campaign",
    "run_cpa",
    "sample_assignment",
    "serialize_vcd",
    "significant_outlier",
    "synthesize_pool",
    "toggles_to_pool",
    "trace_power",
    "write_pool",
]
