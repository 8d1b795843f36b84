"""Embedding adjustment, set metrics and drift simulation (C++ core)."""

from ._core import (
    TeaError,
    adjust_prompt,
    adjust_rows,
    adjust_token,
    beta_heuristic,
    inter_set_distance,
    intra_set_distance,
    load,
    norm_histogram,
    percentile_rank,
    save_matrix,
    save_prompt,
    save_series,
    simulate_token,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "TeaError",
    "adjust_prompt",
    "adjust_rows",
    "adjust_token",
    "beta_heuristic",
    "inter_set_distance",
    "intra_set_distance",
    "load",
    "norm_histogram",
    "percentile_rank",
    "save_matrix",
    "save_prompt",
    "save_series",
    "simulate_token",
    "validate",
]
