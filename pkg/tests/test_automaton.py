import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subscriber_ca import automaton
from subscriber_ca.automaton import (Busy, ConfigurationError, Free, Grid, SimParams, busy_count,
                                     init_grid, moore_neighbors, run, step)
from subscriber_ca.streams import make_stream

INV_2_53 = 1.0 / (1 << 53)


def small_params(**kw):
    base = dict(lam=0.07, mu=0.03, width=3, height=3, cycles=10, seed=0)
    base.update(kw)
    return SimParams(**base)


def grid_15():
    return init_grid(SimParams(0.07, 0.03), make_stream(0))


def test_moore_interior():
    assert sorted(moore_neighbors(7, 7, grid_15())) == sorted(
        [(6, 6), (6, 7), (6, 8), (7, 6), (7, 8), (8, 6), (8, 7), (8, 8)])


def test_moore_corner_wraps():
    assert moore_neighbors(0, 0, grid_15()) == [
        (14, 14), (14, 0), (14, 1), (0, 14), (0, 1), (1, 14), (1, 0), (1, 1)]


def test_moore_top_edge_wraps():
    nb = moore_neighbors(0, 7, grid_15())
    assert {(14, 6), (14, 7), (14, 8)} <= set(nb)
    assert len(set(nb)) == 8


def test_moore_index_checked():
    with pytest.raises(IndexError):
        moore_neighbors(15, 0, grid_15())


def test_neighbor_table_matches_moore_neighbors():
    g = Grid(4, 5, -np.ones((5, 4), dtype=np.int64))
    table = g.neighbor_table.reshape(-1, 8)
    for i in range(5):
        for j in range(4):
            expected = [r * 4 + c for r, c in moore_neighbors(i, j, g)]
            assert table[i * 4 + j].tolist() == expected


@pytest.mark.parametrize("w,h", [(2, 5), (5, 2), (1, 1)])
def test_grid_below_3x3_rejected(w, h):
    with pytest.raises(ConfigurationError):
        Grid(w, h, -np.ones((h, w), dtype=np.int64))
    with pytest.raises(ConfigurationError):
        SimParams(0.1, 0.1, width=w, height=h)


@pytest.mark.parametrize("kw,field", [
    (dict(lam=0.0), "lambda"), (dict(mu=-1.0), "mu"), (dict(cycles=0), "cycles"),
    (dict(burn_in=10, cycles=10), "burn_in"), (dict(seed=-1), "seed"),
])
def test_params_validation_names_field(kw, field):
    with pytest.raises(ConfigurationError, match=field):
        small_params(**kw)


def test_cell_states_reject_nonpositive():
    with pytest.raises(ValueError):
        Free(0)
    with pytest.raises(ValueError):
        Busy(0)


def test_init_grid_all_free():
    params = SimParams(0.07, 0.03)
    g = init_grid(params, make_stream(42))
    assert g.counters.size == 225
    assert busy_count(g) == 0
    assert all(isinstance(c, Free) for row in g.cells for c in row)
    assert g.cycle == 0


def test_init_grid_deterministic():
    params = SimParams(0.07, 0.03)
    a = init_grid(params, make_stream(9))
    b = init_grid(params, make_stream(9))
    np.testing.assert_array_equal(a.counters, b.counters)


def _draw_u(bg):
    return ((int(bg.random_raw()) >> 11) + 1) * INV_2_53


def test_step_single_caller_connects(backend):
    # 3x3: centre calls now, everyone else is idle for a long time
    cells = [[Free(50)] * 3, [Free(50), Free(1), Free(50)], [Free(50)] * 3]
    grid = Grid.from_cells(cells)
    params = small_params()

    # hand trace: no completions, one caller (no shuffle draws),
    # then one raw word picks the neighbour slot and one gives the duration
    oracle = make_stream(123)
    slot = int(oracle.random_raw()) & 7
    d = max(1, math.ceil(-math.log(_draw_u(oracle)) / params.mu))
    target = moore_neighbors(1, 1, grid)[slot]

    out = step(grid, params, make_stream(123), backend=backend)
    assert busy_count(out) == 2
    assert out.cell(1, 1) == Busy(d)
    assert out.cell(*target) == Busy(d)
    others = [(i, j) for i in range(3) for j in range(3) if (i, j) not in {(1, 1), target}]
    assert all(out.cell(i, j) == Free(49) for i, j in others)
    assert out.cycle == 1
    # input grid is untouched
    assert busy_count(grid) == 0


def test_step_caller_denied_by_busy_neighbour(backend):
    cells = [[Busy(10)] * 3, [Busy(10), Free(1), Busy(10)], [Busy(10)] * 3]
    grid = Grid.from_cells(cells)
    out = step(grid, small_params(), make_stream(5), backend=backend)
    assert out.cell(1, 1) == Free(1)
    assert busy_count(out) == busy_count(grid) == 8
    assert all(out.cell(i, j) == Busy(9) for i in range(3) for j in range(3) if (i, j) != (1, 1))


def test_step_without_events_only_decrements(backend):
    cells = [[Free(5), Busy(3), Busy(3)], [Free(2), Free(9), Free(4)], [Busy(7), Busy(7), Free(3)]]
    grid = Grid.from_cells(cells)
    out = step(grid, small_params(), make_stream(1), backend=backend)
    np.testing.assert_array_equal(out.counters, grid.counters - np.sign(grid.counters))
    assert busy_count(out) == busy_count(grid)


def test_completion_frees_both_lines(backend):
    cells = [[Busy(1), Busy(1), Free(40)], [Free(40)] * 3, [Free(40)] * 3]
    grid = Grid.from_cells(cells)
    params = small_params(lam=0.1)
    oracle = make_stream(8)
    k0 = max(1, math.ceil(-math.log(_draw_u(oracle)) / 0.1))
    k1 = max(1, math.ceil(-math.log(_draw_u(oracle)) / 0.1))
    out = step(grid, params, make_stream(8), backend=backend)
    assert busy_count(out) == 0
    assert out.cell(0, 0) == Free(k0)
    assert out.cell(0, 1) == Free(k1)


def test_claimed_caller_does_not_call(backend):
    # two mutual neighbours both due: whoever goes first connects to the other
    cells = [[Free(1), Free(1), Busy(30)], [Busy(30)] * 3, [Busy(30), Busy(30), Busy(30)]]
    grid = Grid.from_cells(cells)
    grid.counters[2, 2] = -30  # keep busy count even
    for seed in range(40):
        trace = []
        out = step(grid, small_params(), make_stream(seed), backend=backend, trace=trace)
        assert len(trace) <= 1
        assert busy_count(out) % 2 == 0
        if trace:
            caller, target, d = trace[0]
            assert out.counters.flat[caller] == out.counters.flat[target] == d


def test_no_immediate_reuse_blocks_fresh_lines(backend):
    # the only reachable free line ends its call this cycle
    cells = [[Busy(20)] * 3, [Busy(20), Free(1), Busy(1)], [Busy(20)] * 3]
    grid = Grid.from_cells(cells)
    grid.counters[0, 0] = 1  # partner of (1, 2)
    for seed in range(30):
        trace = []
        out = step(grid, small_params(immediate_reuse=False), make_stream(seed),
                   backend=backend, trace=trace)
        assert trace == []
        assert out.cell(1, 1) == Free(1)


def test_busy_count_examples():
    assert busy_count(grid_15()) == 0
    g = Grid.from_cells([[Busy(3)] * 4] * 4)
    assert busy_count(g) == 16


def test_run_length_and_determinism(backend):
    p = SimParams(0.07, 0.03, cycles=1, seed=4)
    assert run(p, backend=backend).shape == (1,)
    p = SimParams(0.07, 0.03, cycles=2000, seed=4)
    np.testing.assert_array_equal(run(p, backend=backend), run(p, backend=backend))


def test_backends_agree_bit_for_bit():
    if len(automaton.available_backends()) < 2:
        pytest.skip("compiled kernel not built")
    for seed, lam, mu, w, h in [(1, 0.07, 0.03, 15, 15), (2, 0.3, 0.02, 7, 4), (3, 0.01, 0.5, 3, 3)]:
        p = SimParams(lam, mu, width=w, height=h, cycles=1500, seed=seed)
        s1, g1 = run(p, backend="cython", return_grid=True)
        s2, g2 = run(p, backend="python", return_grid=True)
        np.testing.assert_array_equal(s1, s2)
        np.testing.assert_array_equal(g1.counters, g2.counters)


def test_backends_agree_with_traces():
    if len(automaton.available_backends()) < 2:
        pytest.skip("compiled kernel not built")
    p = SimParams(0.2, 0.05, width=6, height=6, seed=17)
    g1 = g2 = init_grid(p, make_stream(17))
    bg1, bg2 = make_stream(99), make_stream(99)
    for _ in range(300):
        t1, t2 = [], []
        g1 = step(g1, p, bg1, backend="cython", trace=t1)
        g2 = step(g2, p, bg2, backend="python", trace=t2)
        assert t1 == t2
    np.testing.assert_array_equal(g1.counters, g2.counters)


def test_run_matches_repeated_step(backend):
    p = SimParams(0.1, 0.05, width=5, height=4, cycles=200, seed=3)
    series, final = run(p, backend=backend, return_grid=True)
    bg = make_stream(3)
    g = init_grid(p, bg)
    counts = []
    for _ in range(p.cycles):
        g = step(g, p, bg, backend=backend)
        counts.append(busy_count(g))
    assert counts == series.tolist()
    np.testing.assert_array_equal(g.counters, final.counters)


def test_step_rejects_mismatched_params():
    with pytest.raises(ConfigurationError):
        step(grid_15(), small_params(), make_stream(0))


def test_unknown_backend():
    with pytest.raises(ConfigurationError):
        run(small_params(), backend="fortran")


@settings(max_examples=60, deadline=None)
@given(
    lam=st.floats(0.005, 1.0), mu=st.floats(0.005, 1.0),
    w=st.integers(3, 9), h=st.integers(3, 9), seed=st.integers(0, 2**64 - 1),
)
def test_step_invariants(lam, mu, w, h, seed):
    p = SimParams(lam, mu, width=w, height=h, seed=seed)
    bg = make_stream(seed)
    g = init_grid(p, bg)
    for _ in range(40):
        trace = []
        g = step(g, p, bg, trace=trace)
        assert g.counters.size == w * h
        assert np.all(g.counters != 0)
        assert busy_count(g) % 2 == 0
        for caller, target, d in trace:
            assert caller != target
            assert d >= 1


def test_stationarity_proxy():
    x = run(SimParams(0.07, 0.03, cycles=10_000, seed=1))
    a, b = x[2000:6000], x[6000:10000]
    assert abs(a.mean() - b.mean()) / a.mean() < 0.10
    ratio = a.var() / b.var()
    assert 0.5 < ratio < 2.0
    assert b.var() > 0


def test_mean_load_monotone_in_rates():
    def mean_z(lam, mu):
        return np.mean([run(SimParams(lam, mu, cycles=3000, burn_in=300, seed=s))[300:].mean()
                        for s in range(20)])

    by_lam = [mean_z(lam, 0.05) for lam in (0.02, 0.05, 0.12)]
    by_mu = [mean_z(0.05, mu) for mu in (0.02, 0.05, 0.12)]
    assert by_lam == sorted(by_lam)
    assert by_mu == sorted(by_mu, reverse=True)


def _backend_in_subprocess(env_value):
    import os
    import subprocess
    import sys

    env = dict(os.environ, SUBSCRIBER_CA_BACKEND=env_value)
    return subprocess.run([sys.executable, "-c", "import subscriber_ca; print(subscriber_ca.BACKEND)"],
                          capture_output=True, text=True, env=env)


def test_backend_can_be_forced_to_python():
    proc = _backend_in_subprocess("python")
    assert proc.returncode == 0 and proc.stdout.strip() == "python"


def test_unknown_forced_backend_fails_import():
    assert _backend_in_subprocess("gpu").returncode != 0
