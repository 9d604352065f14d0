"""Random-stream primitives shared by both kernels.

Every draw is derived from the raw 64-bit output of a numpy ``BitGenerator``
so the compiled kernel (which reads the same generator through its C
capsule) and the pure-Python kernel consume identical streams and produce
bit-identical grids.
"""
from __future__ import annotations

import math

import numpy as np

_TWO64 = 1 << 64
_INV_2_53 = 1.0 / (1 << 53)


def make_stream(seed: int) -> np.random.BitGenerator:
    """Return a fresh PCG64 bit generator for a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed < _TWO64:
        raise ValueError(f"seed must be a 64-bit unsigned integer (got {seed})")
    return np.random.PCG64(seed)


def as_bitgen(rng) -> np.random.BitGenerator:
    """Accept a ``Generator``, a ``BitGenerator`` or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng.bit_generator
    if isinstance(rng, np.random.BitGenerator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return make_stream(int(rng))
    raise TypeError(f"expected a numpy Generator, BitGenerator or seed, got {type(rng).__name__}")


def next_u64(bitgen: np.random.BitGenerator) -> int:
    return int(bitgen.random_raw())


def unit_open_closed(bitgen: np.random.BitGenerator) -> float:
    """Uniform double in (0, 1] built from the top 53 bits of one raw draw."""
    return ((next_u64(bitgen) >> 11) + 1) * _INV_2_53


def bounded(bitgen: np.random.BitGenerator, n: int) -> int:
    """Unbiased integer in [0, n) by rejection on the low residue class."""
    threshold = (_TWO64 - n) % n
    while True:
        x = next_u64(bitgen)
        if x >= threshold:
            return x % n


def sample_exp_cycles(rate: float, u: float) -> int:
    """Exponential variate with mean ``1/rate`` rounded up to whole cycles.

    ``u`` is a uniform draw from (0, 1]; the result is at least 1.
    """
    if not rate > 0 or not math.isfinite(rate):
        raise ValueError(f"rate must be a positive finite number (got {rate})")
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u must lie in (0, 1] (got {u})")
    return max(1, math.ceil(-math.log(u) / rate))
