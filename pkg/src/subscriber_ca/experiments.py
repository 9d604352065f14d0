"""Multi-realization runs, (lambda, mu) sweeps and the mean-load fit."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import HurstEstimate, InsufficientDataError, hurst_of_series
from .automaton import SimParams, run

__all__ = [
    "CellResult",
    "LoadFit",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "fit_load_constant",
    "load_shape",
    "realization_seed",
    "run_cell",
    "sweep",
]

DEFAULT_GRID = (0.01, 0.03, 0.05, 0.07, 0.1, 0.15)
_UINT64 = 1 << 64


def realization_seed(seed_base: int, realization_index: int) -> int:
    # independent of (lambda, mu): neighbouring sweep cells share random numbers
    return (int(seed_base) + int(realization_index)) % _UINT64


@dataclass(frozen=True)
class CellResult:
    mean_z: float
    hurst: HurstEstimate | None


def run_cell(lam: float, mu: float, base_params: SimParams, realization_index: int,
             seed_base: int, *, min_n: int = 16, points_per_decade: int = 10,
             backend: str | None = None) -> CellResult:
    """One realization at (lam, mu): mean busy count and Hurst estimate after burn-in.

    ``hurst`` is None when the post-burn-in series is too degenerate for R/S.
    """
    params = replace(base_params, lam=lam, mu=mu,
                     seed=realization_seed(seed_base, realization_index))
    series = run(params, backend=backend)[params.burn_in:]
    try:
        h = hurst_of_series(series, min_n, points_per_decade)
    except InsufficientDataError:
        h = None
    return CellResult(float(series.mean()), h)


@dataclass(frozen=True)
class SweepSpec:
    lambdas: tuple[float, ...] = DEFAULT_GRID
    mus: tuple[float, ...] = DEFAULT_GRID
    realizations: int = 40
    base_params: SimParams = field(
        default_factory=lambda: SimParams(lam=0.07, mu=0.03, cycles=10_000, burn_in=500)
    )
    seed_base: int = 0
    min_n: int = 16
    points_per_decade: int = 10

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "mus", tuple(float(v) for v in self.mus))
        if not self.lambdas or not self.mus:
            raise ValueError("lambdas and mus must be non-empty")
        if any(v <= 0 for v in self.lambdas + self.mus):
            raise ValueError("all rates must be positive")
        if self.realizations < 1:
            raise ValueError(f"realizations must be >= 1 (got {self.realizations})")
        if not 0 <= self.seed_base < _UINT64:
            raise ValueError("seed_base must be a 64-bit unsigned integer")

    def cells(self) -> list[tuple[float, float]]:
        return sorted(itertools.product(set(self.lambdas), set(self.mus)))


@dataclass(frozen=True)
class SweepRow:
    lam: float
    mu: float
    mean_z: float
    std_z: float
    mean_h: float
    std_h: float
    realizations_used: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def row(self, lam: float, mu: float) -> SweepRow:
        for r in self.rows:
            if r.lam == lam and r.mu == mu:
                return r
        raise KeyError((lam, mu))

    def to_csv(self, fit: "LoadFit | None" = None) -> str:
        lines = ["lambda,mu,mean_z,std_z,mean_h,std_h,realizations_used"]
        for r in self.rows:
            lines.append(
                f"{r.lam!r},{r.mu!r},{r.mean_z:.6f},{r.std_z:.6f},"
                f"{r.mean_h:.6f},{r.std_h:.6f},{r.realizations_used}"
            )
        if fit is not None:
            lines.append(f"# C={fit.C:.6f} rms={fit.rms_residual:.6f}")
        return "\n".join(lines) + "\n"


def _task(args):
    lam, mu, base, r, seed_base, min_n, ppd = args
    return run_cell(lam, mu, base, r, seed_base, min_n=min_n, points_per_decade=ppd)


def _aggregate(lam, mu, results: list[CellResult]) -> SweepRow:
    used = [c for c in results if c.hurst is not None]
    if not used:
        nan = math.nan
        return SweepRow(lam, mu, nan, nan, nan, nan, 0)
    z = np.array([c.mean_z for c in used])
    h = np.array([c.hurst.H for c in used])
    return SweepRow(lam, mu, float(z.mean()), float(z.std()), float(h.mean()), float(h.std()), len(used))


def sweep(spec: SweepSpec, workers: int | None = 1) -> SweepResult:
    """Average every (lambda, mu) cell over ``spec.realizations`` seeds.

    Rows are ordered by (lambda, mu). The result does not depend on
    ``workers``; ``None`` or a value above 1 uses a process pool.
    """
    tasks = [
        (lam, mu, spec.base_params, r, spec.seed_base, spec.min_n, spec.points_per_decade)
        for lam, mu in spec.cells()
        for r in range(spec.realizations)
    ]
    if workers == 1:
        outcomes = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_task, tasks, chunksize=max(1, spec.realizations // 4)))
    rows = []
    R = spec.realizations
    for idx, (lam, mu) in enumerate(spec.cells()):
        rows.append(_aggregate(lam, mu, outcomes[idx * R:(idx + 1) * R]))
    return SweepResult(tuple(rows))


def load_shape(lam, mu):
    """Shape factor of the mean-load law: (lam / (1 + lam)) * ((1 + mu) / mu)."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return (lam / (1.0 + lam)) * ((1.0 + mu) / mu)


@dataclass(frozen=True)
class LoadFit:
    C: float
    rms_residual: float
    relative_rms: float
    n_rows: int


def fit_load_constant(result: SweepResult, field_cells: int | None = None) -> LoadFit:
    """Least-squares scale ``C`` in ``mean_z = C * load_shape(lam, mu)``.

    Rows with no usable realization are ignored. ``field_cells`` is only
    used to sanity-check the data.
    """
    rows = [r for r in result.rows if r.realizations_used >= 1]
    if not rows:
        raise ValueError("no sweep rows with usable realizations")
    z = np.array([r.mean_z for r in rows])
    if field_cells is not None and (np.any(z < 0) or np.any(z > field_cells)):
        raise ValueError(f"mean_z outside [0, {field_cells}]")
    g = load_shape([r.lam for r in rows], [r.mu for r in rows])
    gg = float(g @ g)
    if gg == 0.0:
        raise ValueError("load shape is zero for every row")
    C = float(z @ g) / gg
    rms = float(np.sqrt(np.mean((z - C * g) ** 2)))
    zbar = float(z.mean())
    return LoadFit(C, rms, rms / zbar if zbar > 0 else math.inf, len(rows))
