# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transition kernel.

Mirrors ``_pykernel`` draw for draw: both read raw 64-bit words from the same
numpy bit generator, so for a given seed they leave identical grids.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport ceil, log
from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np
from numpy.random cimport bitgen_t

cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _raw(bitgen_t *rng) noexcept nogil:
    return rng.next_uint64(rng.state)


cdef inline int64_t _exp_cycles(double rate, bitgen_t *rng) noexcept nogil:
    cdef double u = <double>((_raw(rng) >> 11) + 1) * INV_2_53
    cdef int64_t k = <int64_t>ceil(-log(u) / rate)
    return k if k > 1 else 1


cdef inline uint64_t _bounded(bitgen_t *rng, uint64_t n) noexcept nogil:
    cdef uint64_t threshold = (<uint64_t>0 - n) % n
    cdef uint64_t x
    while True:
        x = _raw(rng)
        if x >= threshold:
            return x % n


cdef bitgen_t *_unwrap(object bitgen) except NULL:
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise TypeError("object does not expose a numpy BitGenerator capsule")
    return <bitgen_t *>PyCapsule_GetPointer(capsule, "BitGenerator")


cdef int64_t _step(int64_t[::1] flat, const int32_t[::1] nbrs, double lam, double mu,
                   bitgen_t *rng, bint immediate_reuse, int64_t *completed,
                   int64_t *callers, unsigned char *fresh, object trace) except -1:
    cdef Py_ssize_t n = flat.shape[0]
    cdef Py_ssize_t k, i, j, nc = 0, m = 0
    cdef int64_t c, d, tmp, target, busy = 0

    for k in range(n):
        c = flat[k]
        if c > 0:
            c -= 1
            if c == 0:
                completed[nc] = k
                nc += 1
        else:
            c += 1
            if c == 0:
                callers[m] = k
                m += 1
        flat[k] = c

    for i in range(nc):
        k = completed[i]
        flat[k] = -_exp_cycles(lam, rng)
        if not immediate_reuse:
            fresh[k] = 1

    i = m - 1
    while i > 0:
        j = <Py_ssize_t>_bounded(rng, <uint64_t>(i + 1))
        tmp = callers[i]
        callers[i] = callers[j]
        callers[j] = tmp
        i -= 1

    for i in range(m):
        k = callers[i]
        if flat[k] != 0:
            continue
        target = nbrs[8 * k + <Py_ssize_t>(_raw(rng) & 7)]
        if flat[target] <= 0 and not fresh[target]:
            d = _exp_cycles(mu, rng)
            flat[k] = d
            flat[target] = d
            if trace is not None:
                trace.append((k, target, d))
        else:
            flat[k] = -1

    if not immediate_reuse:
        for i in range(nc):
            fresh[completed[i]] = 0

    for k in range(n):
        if flat[k] > 0:
            busy += 1
    return busy


def step_inplace(int64_t[::1] flat, const int32_t[::1] neighbors, double lam, double mu,
                 object bitgen, bint immediate_reuse=True, object trace=None):
    """Advance ``flat`` by one cycle and return the resulting busy count."""
    cdef Py_ssize_t n = flat.shape[0]
    cdef bitgen_t *rng = _unwrap(bitgen)
    cdef int64_t *completed = <int64_t *>malloc(n * sizeof(int64_t))
    cdef int64_t *callers = <int64_t *>malloc(n * sizeof(int64_t))
    cdef unsigned char *fresh = <unsigned char *>malloc(n)
    cdef int64_t busy
    if completed == NULL or callers == NULL or fresh == NULL:
        free(completed); free(callers); free(fresh)
        raise MemoryError()
    for i in range(n):
        fresh[i] = 0
    try:
        busy = _step(flat, neighbors, lam, mu, rng, immediate_reuse,
                     completed, callers, fresh, trace)
    finally:
        free(completed); free(callers); free(fresh)
    return busy


def run_inplace(int64_t[::1] flat, const int32_t[::1] neighbors, double lam, double mu,
                object bitgen, bint immediate_reuse, Py_ssize_t cycles, int64_t[::1] out):
    """Run ``cycles`` steps, writing the busy count after each into ``out``."""
    cdef Py_ssize_t n = flat.shape[0]
    cdef Py_ssize_t t, i
    cdef bitgen_t *rng = _unwrap(bitgen)
    cdef int64_t *completed = <int64_t *>malloc(n * sizeof(int64_t))
    cdef int64_t *callers = <int64_t *>malloc(n * sizeof(int64_t))
    cdef unsigned char *fresh = <unsigned char *>malloc(n)
    if completed == NULL or callers == NULL or fresh == NULL:
        free(completed); free(callers); free(fresh)
        raise MemoryError()
    for i in range(n):
        fresh[i] = 0
    try:
        for t in range(cycles):
            out[t] = _step(flat, neighbors, lam, mu, rng, immediate_reuse,
                           completed, callers, fresh, None)
    finally:
        free(completed); free(callers); free(fresh)
