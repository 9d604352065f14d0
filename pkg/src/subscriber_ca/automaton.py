"""Cellular-automaton engine for a closed network of telephone subscribers.

Each cell of a toroidal grid is a subscriber that calls one of its eight
Moore neighbours at exponentially distributed intervals. A call to a free
line connects both parties for a shared exponentially distributed holding
time; a call to a busy line is denied and retried on the next cycle.

The transition itself runs in a compiled kernel when available and in a
pure-Python kernel otherwise. Both consume the random stream identically.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _pykernel
from .streams import as_bitgen, make_stream, sample_exp_cycles

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

__all__ = [
    "BACKEND",
    "Busy",
    "CellState",
    "ConfigurationError",
    "Free",
    "Grid",
    "SimParams",
    "available_backends",
    "busy_count",
    "init_grid",
    "moore_neighbors",
    "run",
    "sample_exp_cycles",
    "step",
]

MIN_SIDE = 3
_UINT64_MAX = (1 << 64) - 1


class ConfigurationError(ValueError):
    """Invalid simulation parameters or grid geometry."""


def available_backends() -> list[str]:
    return ["cython", "python"] if _ckernel is not None else ["python"]


def _default_backend() -> str:
    forced = os.environ.get("SUBSCRIBER_CA_BACKEND", "").strip().lower()
    if forced:
        if forced not in ("cython", "python"):
            raise ImportError(f"unknown SUBSCRIBER_CA_BACKEND {forced!r}")
        if forced == "cython" and _ckernel is None:
            raise ImportError("SUBSCRIBER_CA_BACKEND=cython but the extension is not built")
        return forced
    return "cython" if _ckernel is not None else "python"


BACKEND = _default_backend()


def _kernel(backend: str | None):
    name = backend or BACKEND
    if name == "cython":
        if _ckernel is None:
            raise ConfigurationError("the compiled kernel is not available")
        return _ckernel
    if name == "python":
        return _pykernel
    raise ConfigurationError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class Free:
    cycles_to_call: int

    def __post_init__(self):
        if self.cycles_to_call < 1:
            raise ValueError("cycles_to_call must be >= 1")


@dataclass(frozen=True)
class Busy:
    cycles_to_completion: int

    def __post_init__(self):
        if self.cycles_to_completion < 1:
            raise ValueError("cycles_to_completion must be >= 1")


CellState = Union[Free, Busy]


@dataclass(frozen=True)
class SimParams:
    """Model rates, field size and run length.

    ``immediate_reuse`` controls whether a line whose conversation ended this
    cycle can be reached by a caller in the same cycle.
    """

    lam: float
    mu: float
    width: int = 15
    height: int = 15
    cycles: int = 10_000
    burn_in: int = 0
    seed: int = 0
    immediate_reuse: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            ("lambda", self.lam > 0 and np.isfinite(self.lam), f"must be positive (got {self.lam})"),
            ("mu", self.mu > 0 and np.isfinite(self.mu), f"must be positive (got {self.mu})"),
            ("width", self.width >= MIN_SIDE, f"must be at least {MIN_SIDE} (got {self.width})"),
            ("height", self.height >= MIN_SIDE, f"must be at least {MIN_SIDE} (got {self.height})"),
            ("cycles", self.cycles >= 1, f"must be positive (got {self.cycles})"),
            ("burn_in", 0 <= self.burn_in < self.cycles,
             f"must satisfy 0 <= burn_in < cycles (got {self.burn_in}, cycles={self.cycles})"),
            ("seed", 0 <= self.seed <= _UINT64_MAX, f"must be a 64-bit unsigned integer (got {self.seed})"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigurationError(f"{name} {msg}")

    @property
    def cells(self) -> int:
        return self.width * self.height


@dataclass
class Grid:
    """One configuration of the field.

    ``counters`` holds the signed per-cell countdowns (height x width):
    positive for busy lines, negative for free ones.
    """

    width: int
    height: int
    counters: np.ndarray
    cycle: int = 0
    _neighbors: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.width < MIN_SIDE or self.height < MIN_SIDE:
            raise ConfigurationError(
                f"grid must be at least {MIN_SIDE}x{MIN_SIDE} (got {self.width}x{self.height})"
            )
        self.counters = np.ascontiguousarray(self.counters, dtype=np.int64)
        if self.counters.shape != (self.height, self.width):
            raise ConfigurationError(
                f"counters shape {self.counters.shape} does not match {self.height}x{self.width}"
            )

    @classmethod
    def from_cells(cls, cells, cycle: int = 0) -> "Grid":
        """Build a grid from a nested list of :class:`Free` / :class:`Busy`."""
        rows = [[_encode(c) for c in row] for row in cells]
        arr = np.array(rows, dtype=np.int64)
        return cls(width=arr.shape[1], height=arr.shape[0], counters=arr, cycle=cycle)

    def cell(self, i: int, j: int) -> CellState:
        return _decode(int(self.counters[i, j]))

    @property
    def cells(self) -> list[list[CellState]]:
        return [[_decode(int(v)) for v in row] for row in self.counters]

    @property
    def neighbor_table(self) -> np.ndarray:
        if self._neighbors is None:
            self._neighbors = _neighbor_table(self.height, self.width)
        return self._neighbors

    def copy(self) -> "Grid":
        return Grid(self.width, self.height, self.counters.copy(), self.cycle, self._neighbors)


def _encode(state: CellState) -> int:
    if isinstance(state, Busy):
        return state.cycles_to_completion
    if isinstance(state, Free):
        return -state.cycles_to_call
    raise TypeError(f"not a cell state: {state!r}")


def _decode(value: int) -> CellState:
    if value > 0:
        return Busy(value)
    if value < 0:
        return Free(-value)
    raise ValueError("counter of 0 is only valid inside a transition")


_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]


def moore_neighbors(i: int, j: int, grid: Grid) -> list[tuple[int, int]]:
    """The 8 toroidally wrapped neighbours of ``(i, j)`` in row-major offset order."""
    h, w = grid.height, grid.width
    if h < MIN_SIDE or w < MIN_SIDE:
        raise ConfigurationError(f"grid must be at least {MIN_SIDE}x{MIN_SIDE}")
    if not (0 <= i < h and 0 <= j < w):
        raise IndexError(f"cell ({i}, {j}) outside {h}x{w} grid")
    return [((i + di) % h, (j + dj) % w) for di, dj in _OFFSETS]


def _neighbor_table(height: int, width: int) -> np.ndarray:
    rows, cols = np.divmod(np.arange(height * width), width)
    table = np.empty((height * width, 8), dtype=np.int32)
    for slot, (di, dj) in enumerate(_OFFSETS):
        table[:, slot] = ((rows + di) % height) * width + (cols + dj) % width
    return table.ravel()


def init_grid(params: SimParams, rng) -> Grid:
    """All lines free, each with an independent exponential countdown to its first call."""
    params.validate()
    bitgen = as_bitgen(rng)
    n = params.cells
    counters = np.empty(n, dtype=np.int64)
    inv = 1.0 / (1 << 53)
    for k in range(n):
        u = ((int(bitgen.random_raw()) >> 11) + 1) * inv
        counters[k] = -sample_exp_cycles(params.lam, u)
    return Grid(params.width, params.height, counters.reshape(params.height, params.width))


def _check_geometry(grid: Grid, params: SimParams) -> None:
    if (grid.width, grid.height) != (params.width, params.height):
        raise ConfigurationError(
            f"grid is {grid.width}x{grid.height} but params specify {params.width}x{params.height}"
        )


def step(grid: Grid, params: SimParams, rng, *, backend: str | None = None,
         trace: list | None = None) -> Grid:
    """Return a new grid advanced by one synchronous cycle.

    Phases: decrement all counters; completed conversations free their lines
    with a fresh call countdown; then due callers, in a random order, each
    dial one random neighbour. ``trace`` collects ``(caller, addressee,
    duration)`` flat-index triples for every connection made.
    """
    _check_geometry(grid, params)
    out = grid.copy()
    flat = out.counters.reshape(-1)
    _kernel(backend).step_inplace(
        flat, out.neighbor_table, params.lam, params.mu, as_bitgen(rng),
        params.immediate_reuse, trace,
    )
    out.cycle += 1
    return out


def busy_count(grid: Grid) -> int:
    return int(np.count_nonzero(grid.counters > 0))


def run(params: SimParams, *, backend: str | None = None, return_grid: bool = False):
    """Simulate ``params.cycles`` cycles from a fresh grid seeded by ``params.seed``.

    Returns the int64 busy-count series (one entry per cycle, burn-in
    included), plus the final grid when ``return_grid`` is set.
    """
    params.validate()
    bitgen = make_stream(params.seed)
    grid = init_grid(params, bitgen)
    series = np.empty(params.cycles, dtype=np.int64)
    _kernel(backend).run_inplace(
        grid.counters.reshape(-1), grid.neighbor_table, params.lam, params.mu, bitgen,
        params.immediate_reuse, params.cycles, series,
    )
    grid.cycle = params.cycles
    return (series, grid) if return_grid else series
