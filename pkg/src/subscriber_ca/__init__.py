"""Cellular-automaton telephone network with rescaled-range analysis."""
from .analysis import (DegenerateSeriesError, HurstEstimate, InsufficientDataError, RsCurve,
                       cumulative_deviation, estimate_hurst, hurst_of_series, rescaled_range,
                       rs_curve, series_mean, spread)
from .automaton import (BACKEND, Busy, ConfigurationError, Free, Grid, SimParams,
                        available_backends, busy_count, init_grid, moore_neighbors, run,
                        sample_exp_cycles, step)
from .experiments import (LoadFit, SweepResult, SweepSpec, fit_load_constant, load_shape,
                          run_cell, sweep)
from .streams import make_stream

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Busy", "ConfigurationError", "DegenerateSeriesError", "Free", "Grid",
    "HurstEstimate", "InsufficientDataError", "LoadFit", "RsCurve", "SimParams",
    "SweepResult", "SweepSpec", "available_backends", "busy_count", "cumulative_deviation",
    "estimate_hurst", "fit_load_constant", "hurst_of_series", "init_grid", "load_shape",
    "make_stream", "moore_neighbors", "rescaled_range", "rs_curve", "run", "run_cell",
    "sample_exp_cycles", "series_mean", "spread", "step", "sweep",
]
