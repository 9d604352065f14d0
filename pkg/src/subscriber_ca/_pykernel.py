"""Pure-Python transition kernel, used when the compiled extension is absent.

Cell counters are stored signed in a flat int64 array: a positive value is a
busy line's cycles to completion, a negative value is minus a free line's
cycles to its next call attempt. Within a cycle a counter of 0 marks a cell
whose event is being resolved.
"""
from __future__ import annotations

import math

import numpy as np

from .streams import bounded

_INV_2_53 = 1.0 / (1 << 53)


def _exp_cycles(rate, bitgen):
    u = ((int(bitgen.random_raw()) >> 11) + 1) * _INV_2_53
    return max(1, math.ceil(-math.log(u) / rate))


def step_inplace(flat, neighbors, lam, mu, bitgen, immediate_reuse=True, trace=None):
    """Advance ``flat`` by one cycle and return the resulting busy count.

    ``neighbors`` is the flattened (n_cells, 8) Moore table. When ``trace`` is
    a list, every successful connection is appended as
    ``(caller, addressee, duration)``.
    """
    busy = flat > 0
    flat[busy] -= 1
    flat[~busy] += 1
    at_zero = flat == 0
    completed = np.flatnonzero(busy & at_zero).tolist()
    callers = np.flatnonzero(~busy & at_zero).tolist()

    for k in completed:
        flat[k] = -_exp_cycles(lam, bitgen)
    fresh = set() if immediate_reuse else set(completed)

    m = len(callers)
    for i in range(m - 1, 0, -1):
        j = bounded(bitgen, i + 1)
        callers[i], callers[j] = callers[j], callers[i]

    for k in callers:
        if flat[k] != 0:
            # claimed as an addressee earlier in this cycle
            continue
        target = int(neighbors[8 * k + (int(bitgen.random_raw()) & 7)])
        if flat[target] <= 0 and target not in fresh:
            d = _exp_cycles(mu, bitgen)
            flat[k] = d
            flat[target] = d
            if trace is not None:
                trace.append((k, target, d))
        else:
            flat[k] = -1
    return int(np.count_nonzero(flat > 0))


def run_inplace(flat, neighbors, lam, mu, bitgen, immediate_reuse, cycles, out):
    for t in range(cycles):
        out[t] = step_inplace(flat, neighbors, lam, mu, bitgen, immediate_reuse)


__all__ = ["step_inplace", "run_inplace"]
