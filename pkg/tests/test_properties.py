"""Property-based checks of the core invariants."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rpod.hankel import Selection, build_hankel, induced_indices
from rpod.numerics import eig, ordered_matmul, solve_linear, svd
from rpod.pod import biorthogonalize, hausdorff, match_eigenvalues, mode_order, rpod, rpod_ensembles
from rpod.problems.fpk import DuffingFpkConfig, build_duffing_fpk
from rpod.problems.pollutant import GridSpec2D, PollutantConfig, build_pollutant
from rpod.problems.synthetic import build_synthetic
from rpod.report import cost_report
from rpod.sampling import (
    BoundInputs,
    combined_failure,
    draw_selection,
    min_columns,
    rank_failure_bound,
)
from rpod.snapshots import ADJOINT, PRIMAL, LtiSystem, simulate_impulse
from rpod.textio import read_matrix, write_matrix

seeds = st.integers(0, 2 ** 32 - 1)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
SETTINGS = settings(max_examples=40, deadline=None)


def _gen(seed):
    return np.random.default_rng(seed)


@SETTINGS
@given(seeds)
def test_svd_round_trip(seed):
    m = _gen(seed).standard_normal((20, 12))
    res = svd(m)
    assert np.linalg.norm(m - res.reconstruct()) <= 1e-8 * res.singular_values[0] * 20


@SETTINGS
@given(seeds)
def test_eig_residual_on_diagonalizable(seed):
    g = _gen(seed)
    s = g.standard_normal((15, 15)) + 4 * np.eye(15)
    m = s @ np.diag(g.uniform(-1, 1, 15)) @ np.linalg.inv(s)
    res = eig(m)
    assert res.residuals(m).max() <= 1e-8 * np.linalg.norm(m)


@SETTINGS
@given(seeds, st.integers(1, 4))
def test_solve_then_multiply(seed, k):
    g = _gen(seed)
    a = g.standard_normal((8, 8)) + 8 * np.eye(8)
    b = g.standard_normal((8, k))
    assert np.linalg.norm(a @ solve_linear(a, b) - b) <= 1e-9 * np.linalg.norm(b)


@SETTINGS
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 30)), elements=finite),
       arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 6)), elements=finite),
       st.data())
def test_ordered_matmul_subsets_are_exact(a, b, data):
    n = min(a.shape[1], b.shape[0])
    a, b = a[:, :n], b[:n]
    full = ordered_matmul(a, b)
    rows = data.draw(st.lists(st.integers(0, a.shape[0] - 1), min_size=1, unique=True))
    cols = data.draw(st.lists(st.integers(0, b.shape[1] - 1), min_size=1, unique=True))
    np.testing.assert_array_equal(ordered_matmul(a[rows], b[:, cols]), full[np.ix_(rows, cols)])


@SETTINGS
@given(seeds, finite, finite)
def test_simulation_is_linear(seed, alpha, beta):
    g = _gen(seed)
    sys = LtiSystem(0.3 * g.standard_normal((6, 6)), g.standard_normal((6, 2)), np.eye(6))
    b1, b2 = g.standard_normal((6, 1)), g.standard_normal((6, 1))
    steps = [0, 1, 4, 7]
    combo = simulate_impulse(sys, PRIMAL, steps, alpha * b1 + beta * b2).data
    parts = (alpha * simulate_impulse(sys, PRIMAL, steps, b1).data
             + beta * simulate_impulse(sys, PRIMAL, steps, b2).data)
    scale = max(1.0, np.abs(parts).max(), np.abs(combo).max())
    assert np.abs(combo - parts).max() <= 1e-10 * scale


@SETTINGS
@given(seeds, st.integers(0, 12))
def test_adjoint_duality(seed, k):
    g = _gen(seed)
    sys = LtiSystem(0.3 * g.standard_normal((7, 7)), np.eye(7)[:, :1], np.eye(7)[:1])
    x, y = g.standard_normal((7, 1)), g.standard_normal((7, 1))
    lhs = float(simulate_impulse(sys, PRIMAL, [k], x).data[:, 0] @ y[:, 0])
    rhs = float(x[:, 0] @ simulate_impulse(sys, ADJOINT, [k], y).data[:, 0])
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


@st.composite
def systems_and_selections(draw):
    seed = draw(seeds)
    n, p, q = draw(st.integers(2, 8)), draw(st.integers(1, 4)), draw(st.integers(1, 4))
    g = _gen(seed)
    sys = LtiSystem(0.4 * g.standard_normal((n, n)) / math.sqrt(n), g.standard_normal((n, p)),
                    g.standard_normal((q, n)))
    pool = list(range(draw(st.integers(1, 6))))
    sel = draw_selection(p, q, pool, pool, draw(st.integers(1, p)), draw(st.integers(1, q)),
                         draw(st.integers(1, len(pool))), draw(st.integers(1, len(pool))),
                         draw(seeds))
    return sys, pool, sel


@SETTINGS
@given(systems_and_selections())
def test_subhankel_is_submatrix(case):
    sys, pool, sel = case
    x = simulate_impulse(sys, PRIMAL, pool)
    y = simulate_impulse(sys, ADJOINT, pool)
    rows, cols = induced_indices(x, y, sel)
    sub = build_hankel(*rpod_ensembles(sys, sel)).H
    np.testing.assert_array_equal(sub, build_hankel(x, y).H[np.ix_(rows, cols)])


@SETTINGS
@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_hankel_rank_bounded_by_ensembles(seed, kx, ky):
    g = _gen(seed)
    x = g.standard_normal((10, kx)) @ g.standard_normal((kx, 8))
    y = g.standard_normal((10, ky)) @ g.standard_normal((ky, 7))
    rank = lambda m: svd(m).truncation_rank
    assert rank(build_hankel(x, y).H) <= min(rank(x), rank(y))


@SETTINGS
@given(seeds, st.integers(1, 6))
def test_biorthogonalize_gives_identity(seed, k):
    g = _gen(seed)
    v_r = g.standard_normal((9, k))
    v_l = v_r + 0.3 * g.standard_normal((9, k))
    out_l, out_r = biorthogonalize(v_l, v_r)
    np.testing.assert_allclose(out_l.T @ out_r, np.eye(k), atol=1e-9)


complex_lists = st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False,
                                            allow_infinity=False), max_size=8)


@SETTINGS
@given(complex_lists, complex_lists)
def test_matching_is_one_to_one(a, b):
    pairs = match_eigenvalues(a, b)
    assert len(pairs) == min(len(a), len(b))
    assert len({i for i, _, _ in pairs}) == len(pairs)
    assert len({j for _, j, _ in pairs}) == len(pairs)
    for i, j, d in pairs:
        assert math.isclose(d, abs(complex(a[i]) - complex(b[j])), rel_tol=1e-15)


@SETTINGS
@given(complex_lists.filter(len), complex_lists.filter(len))
def test_hausdorff_symmetric(a, b):
    assert hausdorff(a, b) == hausdorff(b, a)
    assert hausdorff(a, a) == 0.0


@SETTINGS
@given(complex_lists)
def test_mode_order_permutation(values):
    v = np.asarray(values, dtype=complex)
    perm = mode_order(v)
    assert sorted(perm.tolist()) == list(range(v.size))
    assert np.all(np.diff(np.abs(v[perm])) <= 0)


@SETTINGS
@given(st.integers(1, 40), st.floats(0.01, 1.0), st.floats(0.001, 0.99))
def test_min_columns_monotone(l, eps, beta):
    m = min_columns(BoundInputs(l, eps, beta))
    assert m >= l
    assert min_columns(BoundInputs(l, min(1.0, eps * 1.5), beta)) <= m
    assert min_columns(BoundInputs(l, eps, min(0.999, beta * 1.2))) <= m
    assert min_columns(BoundInputs(l + 1, eps, beta)) >= m
    assert rank_failure_bound(BoundInputs(l, eps, beta), m) <= beta * (1 + 1e-9) or m == l


@SETTINGS
@given(st.integers(1, 20), st.floats(0.01, 1.0), st.integers(0, 200))
def test_rank_failure_bound_monotone(l, eps, m):
    b = BoundInputs(l, eps, 0.1)
    assert 0 <= rank_failure_bound(b, m + 1) <= rank_failure_bound(b, m) <= 1


@SETTINGS
@given(st.floats(0.001, 0.999), st.integers(1, 50))
def test_combined_failure_decreasing(beta, k):
    assert combined_failure(beta, k + 1) <= combined_failure(beta, k)


@SETTINGS
@given(st.integers(1, 12), st.integers(1, 12), st.data(), seeds)
def test_draw_selection_contract(p, q, data, seed):
    pool_a = sorted(data.draw(st.sets(st.integers(0, 500), min_size=1, max_size=40)))
    pool_b = sorted(data.draw(st.sets(st.integers(0, 500), min_size=1, max_size=40)))
    r, s = data.draw(st.integers(1, p)), data.draw(st.integers(1, q))
    m1, m2 = data.draw(st.integers(1, len(pool_a))), data.draw(st.integers(1, len(pool_b)))
    sel = draw_selection(p, q, pool_a, pool_b, r, s, m1, m2, seed)
    assert (sel.r, sel.s, sel.m1, sel.m2) == (r, s, m1, m2)
    assert set(sel.primal_steps) <= set(pool_a) and set(sel.adjoint_steps) <= set(pool_b)
    assert list(sel.input_pick) == sorted(sel.input_pick)
    assert sel == draw_selection(p, q, pool_a, pool_b, r, s, m1, m2, seed)
    assert Selection.from_json(sel.to_json()) == sel


@SETTINGS
@given(*[st.integers(1, 60) for _ in range(4)], st.data())
def test_cost_ratios(p, q, M1, M2, data):
    r, s = data.draw(st.integers(1, p)), data.draw(st.integers(1, q))
    m1, m2 = data.draw(st.integers(1, M1)), data.draw(st.integers(1, M2))
    c = cost_report(p, q, M1, M2, r, s, m1, m2, 30)
    assert 0 < c.ratio <= 1 and 0 < c.markov_ratio <= 1 and 0 < c.svd_ratio <= 1
    assert math.isclose(c.ratio, c.hankel_flops_rpod / c.hankel_flops_bpod, rel_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(0, 4), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_matrix_text_round_trip(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("m") / "m.txt"
    write_matrix(path, m)
    np.testing.assert_array_equal(read_matrix(path), m)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.01, 0.2), st.floats(-30, 30))
def test_fpk_mass_conservation(q, drift, dt, alpha):
    cfg = DuffingFpkConfig(nx1=12, nx2=12, Q=q, drift_scale=drift, dt=dt, alpha_lin=alpha,
                           n_bumps=2)
    np.testing.assert_allclose(build_duffing_fpk(cfg).A.sum(axis=0), 1.0, atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.sampled_from(["implicit", "explicit"]))
def test_pollutant_pure_diffusion_conserves(dx, dy, scheme):
    grid = GridSpec2D(6, 5, lx=6.0, ly=5.0, dt=0.05, scheme=scheme)
    sys = build_pollutant(grid, PollutantConfig(Dx=dx, Dy=dy, vx=0.0, sources=(((0.5, 0.5), 1.0),),
                                                obstacles=()))
    np.testing.assert_allclose(sys.A.sum(axis=0), 1.0, atol=1e-12)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_rpod_spectrum_invariant_to_selection(seed):
    sys, truth = build_synthetic(20, [0.95, 0.9, 0.85, 0.8, 0.75], 1e-9, seed=1)
    sel = draw_selection(10, 10, range(1, 11), range(1, 11), 3, 3, 4, 4, seed)
    rom = rpod(sys, sel, order=5)
    assert hausdorff(rom.eigenvalues, truth.dominant) <= 1e-6
