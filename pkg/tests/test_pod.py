import numpy as np
import pytest

from rpod.errors import BreakdownError, ConfigError, EmptyIntersectionError, RankShortfallError
from rpod.hankel import Selection, build_hankel, induced_indices
from rpod.numerics import svd
from rpod.pod import (
    ModalRom,
    biorthogonalize,
    bpod,
    eigenrecon_auto,
    eigenrecon_cross,
    hausdorff,
    load_rom,
    match_eigenvalues,
    mode_order,
    realify,
    rom_simulate,
    rpod,
    rpod_repeated,
    save_rom,
    snapshot_pod,
)
from rpod.report import simulate_full
from rpod.sampling import BoundInputs, make_plan
from rpod.snapshots import ADJOINT, PRIMAL, LtiSystem, simulate_impulse

from conftest import DOMINANT, random_stable


def _ensembles(sys, psteps, asteps):
    return simulate_impulse(sys, PRIMAL, psteps), simulate_impulse(sys, ADJOINT, asteps)


def _max_match(a, b):
    pairs = match_eigenvalues(a, b)
    assert len(pairs) == min(len(a), len(b))
    return max(d for _, _, d in pairs)


# -- snapshot POD -----------------------------------------------------------

def test_pod_orthonormal_snapshots(rng):
    q, _ = np.linalg.qr(rng.standard_normal((8, 3)))
    basis = snapshot_pod(q)
    np.testing.assert_allclose(basis.T_r @ basis.T_r.T @ q, q, atol=1e-13)
    np.testing.assert_allclose(basis.T_r.T @ basis.T_r, np.eye(3), atol=1e-13)


def test_pod_rank_one(rng):
    v = rng.standard_normal(6)
    basis = snapshot_pod(np.column_stack([v, 2 * v]))
    assert basis.order == 1
    t = basis.T_r[:, 0]
    assert abs(abs(t @ v) - np.linalg.norm(v)) < 1e-12


def test_pod_projection_error_at_known_rank(rng):
    x = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 6))
    basis = snapshot_pod(x, order=3)
    assert np.linalg.norm(x - basis.T_r @ (basis.T_r.T @ x)) <= 1e-8
    with pytest.raises(RankShortfallError):
        snapshot_pod(x, order=4)


# -- balanced POD -----------------------------------------------------------

def test_bpod_self_adjoint_bases_agree(rng):
    m = rng.standard_normal((6, 6))
    a = 0.08 * (m + m.T)
    b = rng.standard_normal((6, 2))
    sys = LtiSystem(a, b, b.T.copy())
    x, y = _ensembles(sys, range(4), range(4))
    basis, _ = bpod(x, y, sys, order=4)
    for k in range(4):
        tr, tl = basis.T_r[:, k], basis.T_l[:, k]
        assert min(np.linalg.norm(tr - tl), np.linalg.norm(tr + tl)) < 1e-8


def test_bpod_full_order_markov_parameters():
    sys = random_stable(6, 2, 2, seed=3)
    x, y = _ensembles(sys, range(6), range(6))
    basis, red = bpod(x, y, sys)
    assert basis.order == 6
    for k in range(11):
        full = sys.C @ np.linalg.matrix_power(sys.A, k) @ sys.B
        rom = red.C @ np.linalg.matrix_power(red.A, k) @ red.B
        np.testing.assert_allclose(rom, full, atol=1e-8 * max(1, np.abs(full).max()))


def test_bpod_rom_hankel_values_equal_retained_sigma():
    sys = random_stable(6, 2, 2, seed=4)
    steps = range(8)
    x, y = _ensembles(sys, steps, steps)
    basis, red = bpod(x, y, sys)
    xr, yr = _ensembles(red, steps, steps)
    # balanced coordinates: both reduced gramians are diag(sigma)
    np.testing.assert_allclose(xr.data @ xr.data.T, np.diag(basis.sigma), atol=1e-8 * basis.sigma[0])
    np.testing.assert_allclose(yr.data @ yr.data.T, np.diag(basis.sigma), atol=1e-8 * basis.sigma[0])
    np.testing.assert_allclose(svd(build_hankel(xr, yr).H).singular_values[:6], basis.sigma,
                               rtol=1e-8)


# -- auto-correlation route ---------------------------------------------------

def test_auto_diagonal_truth():
    sys = LtiSystem(np.diag([0.9, 0.5, 0.1]), np.ones((3, 1)), np.ones((1, 3)))
    x, y = _ensembles(sys, range(5), range(5))
    rom = eigenrecon_auto(x, y, sys)
    np.testing.assert_allclose(np.sort(rom.eigenvalues.real), [0.1, 0.5, 0.9], atol=1e-8)
    assert rom.biorthogonality_error() < 1e-10


def test_auto_two_active_modes():
    sys = LtiSystem(np.diag([0.9, 0.5, 0.1]), np.array([[1.0], [1.0], [0.0]]),
                    np.array([[1.0, 1.0, 0.0]]))
    x, y = _ensembles(sys, range(5), range(5))
    rom = eigenrecon_auto(x, y, sys)
    assert rom.order == 2
    np.testing.assert_allclose(np.sort(rom.eigenvalues.real), [0.5, 0.9], atol=1e-8)


def test_auto_zero_tolerance_full_intersection():
    sys = LtiSystem(np.diag([0.9, 0.5, 0.1]), np.ones((3, 1)), np.ones((1, 3)))
    x, y = _ensembles(sys, range(5), range(5))
    assert eigenrecon_auto(x, y, sys, match_tol=0.0).order == 3


def test_auto_empty_intersection():
    a = np.diag([0.9, 0.5])
    sys = LtiSystem(a, np.array([[1.0], [0.0]]), np.array([[0.0, 1.0]]))
    x, y = _ensembles(sys, range(3), range(3))
    with pytest.raises(EmptyIntersectionError):
        eigenrecon_auto(x, y, sys, match_tol=1e-6)


# -- biorthogonalization ------------------------------------------------------

def test_biorthogonal_fixed_point(rng):
    v_r = rng.standard_normal((6, 3))
    v_l = np.linalg.pinv(v_r).T
    out_l, out_r = biorthogonalize(v_l, v_r)
    np.testing.assert_allclose(out_l, v_l, atol=1e-12)
    np.testing.assert_allclose(out_r, v_r, atol=1e-12)


def test_biorthogonal_same_start(rng):
    v = rng.standard_normal((7, 4))
    out_l, out_r = biorthogonalize(v, v)
    np.testing.assert_allclose(out_l.T @ out_r, np.eye(4), atol=1e-12)


def test_biorthogonal_hand_case():
    e1, e2 = np.eye(2)
    out_l, out_r = biorthogonalize(np.column_stack([e1, e2]), np.column_stack([e1, e1 + e2]))
    # first columns untouched; second right column loses its e1 part
    np.testing.assert_allclose(out_r, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(out_l, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(out_l.T @ out_r, np.eye(2), atol=1e-15)


def test_biorthogonal_breakdown():
    e1, e2 = np.eye(2)
    with pytest.raises(BreakdownError) as info:
        biorthogonalize(np.column_stack([e1]), np.column_stack([e2]))
    assert info.value.column == 0


# -- cross-correlation route --------------------------------------------------

def test_cross_diagonal_truth():
    sys = LtiSystem(np.diag([0.9, 0.5]), np.ones((2, 1)), np.ones((1, 2)))
    x, y = _ensembles(sys, range(4), range(4))
    rom = eigenrecon_cross(x, y, sys)
    np.testing.assert_allclose(rom.eigenvalues, [0.9, 0.5], atol=1e-10)
    assert rom.is_diagonal


def test_cross_order_above_rank():
    sys = LtiSystem(np.diag([0.9, 0.5]), np.ones((2, 1)), np.ones((1, 2)))
    x, y = _ensembles(sys, range(4), range(4))
    with pytest.raises(RankShortfallError) as info:
        eigenrecon_cross(x, y, sys, order=3)
    assert (info.value.rank, info.value.order) == (2, 3)


def test_cross_eigenvector_residuals():
    sys = random_stable(6, 3, 3, seed=6)
    x, y = _ensembles(sys, range(6), range(6))
    rom = eigenrecon_cross(x, y, sys)
    assert rom.order == 6
    res = np.linalg.norm(sys.A @ rom.Psi - rom.Psi * rom.eigenvalues, axis=0)
    assert res.max() <= 1e-7
    left = np.linalg.norm(sys.A.T @ rom.Phi - rom.Phi * rom.eigenvalues, axis=0)
    assert (left / np.linalg.norm(rom.Phi, axis=0)).max() <= 1e-7
    np.testing.assert_allclose(np.linalg.norm(rom.Psi, axis=0), 1.0)
    assert rom.biorthogonality_error() < 1e-9


def test_modes_sorted_by_modulus():
    sys = random_stable(6, 3, 3, seed=6)
    rom = eigenrecon_cross(*_ensembles(sys, range(6), range(6)), sys)
    mags = np.abs(rom.eigenvalues)
    assert np.all(np.diff(mags) <= 0)


def test_discard_unstable():
    sys = LtiSystem(np.diag([1.05, 0.5]), np.ones((2, 1)), np.ones((1, 2)))
    x, y = _ensembles(sys, range(3), range(3))
    assert eigenrecon_cross(x, y, sys).unstable_modes().tolist() == [0]
    rom = eigenrecon_cross(x, y, sys, discard_unstable=True)
    np.testing.assert_allclose(rom.eigenvalues, [0.5])


# -- randomized -------------------------------------------------------------

def test_rpod_identity_selection_matches_cross():
    sys = random_stable(8, 3, 3, seed=9)
    steps = list(range(5))
    rom_full = eigenrecon_cross(*_ensembles(sys, steps, steps), sys)
    rom = rpod(sys, Selection.full(3, 3, steps, steps))
    assert _max_match(rom.eigenvalues, rom_full.eigenvalues) <= 1e-9
    assert rom.source == "rpod"


def test_rpod_synthetic_dominant(synthetic20):
    sys, truth = synthetic20
    b = BoundInputs(5, 1.0, 0.05)
    plan = make_plan(10, 10, range(1, 11), range(1, 11), 3, 3, 4, 4, 7, b, b)
    assert plan.bound_satisfying
    rom = rpod(sys, plan, order=5)
    assert _max_match(rom.eigenvalues, truth.dominant) <= 1e-6
    assert rom.diagnostics["bound_satisfying"] is True


def test_rpod_two_seeds_agree(synthetic20):
    sys, _ = synthetic20
    plan = make_plan(10, 10, range(1, 11), range(1, 11), 3, 3, 4, 4, 1)
    a = rpod(sys, plan, order=5)
    b = rpod(sys, plan.redraw(2), order=5)
    assert hausdorff(a.eigenvalues, b.eigenvalues) <= 1e-6


def test_rpod_order_above_budget(synthetic20):
    sys, _ = synthetic20
    plan = make_plan(10, 10, range(10), range(10), 1, 1, 2, 2, 0)
    with pytest.raises(RankShortfallError):
        rpod(sys, plan, order=3)


def test_rpod_details_subhankel_is_submatrix():
    sys = random_stable(7, 3, 4, seed=10)
    steps = list(range(6))
    x, y = _ensembles(sys, steps, steps)
    full = build_hankel(x, y).H
    plan = make_plan(3, 4, steps, steps, 2, 3, 4, 3, seed=21)
    res = rpod(sys, plan, return_details=True)
    rows, cols = induced_indices(x, y, plan.selection)
    np.testing.assert_array_equal(res.hankel.H, full[np.ix_(rows, cols)])


def test_repeated_consistent(synthetic20):
    sys, _ = synthetic20
    plan = make_plan(10, 10, range(1, 11), range(1, 11), 3, 3, 4, 4, 30, K=3)
    rom, report = rpod_repeated(sys, plan, order=5)
    assert report.seeds == [30, 31, 32]
    assert len(report.distances) == 3
    assert report.max_distance <= 1e-6
    assert not report.unstable
    assert rom.order == 5


def test_repeated_identical_seeds_zero_distance(synthetic20):
    sys, _ = synthetic20
    plan = make_plan(10, 10, range(1, 11), range(1, 11), 3, 3, 4, 4, 3)
    _, report = rpod_repeated(sys, plan, order=5, seeds=[3, 3])
    assert report.max_distance == 0.0


def test_repeated_undersized_plan_flags_instability(synthetic20):
    sys, _ = synthetic20
    flags = 0
    for base in range(0, 100, 2):
        plan = make_plan(10, 10, range(1, 11), range(1, 11), 1, 1, 3, 3, base, K=2)
        _, report = rpod_repeated(sys, plan)
        flags += report.unstable
    assert flags > 0


def test_repeated_needs_two_runs(synthetic20):
    sys, _ = synthetic20
    plan = make_plan(10, 10, range(10), range(10), 3, 3, 4, 4, 0)
    with pytest.raises(ConfigError):
        rpod_repeated(sys, plan, K=1)


def test_repeated_deficient_runs_are_marked(synthetic20):
    sys, _ = synthetic20
    plan = make_plan(10, 10, range(10), range(10), 1, 1, 2, 2, 0)
    with pytest.raises(RankShortfallError):
        rpod_repeated(sys, plan, order=3, K=2)


# -- ROM utilities ----------------------------------------------------------

def _single_mode(lam=0.5):
    one = np.ones((1, 1))
    return ModalRom(np.array([lam]), one, one, lam * one, one, one, "test")


def test_rom_zero_input_zero_output():
    sys = random_stable(5, 2, 2, seed=11)
    rom = eigenrecon_cross(*_ensembles(sys, range(5), range(5)), sys)
    out = rom_simulate(rom, 10).outputs
    assert out.shape == (2, 10) and not np.any(out)


def test_rom_full_order_matches_full_model():
    sys = random_stable(5, 2, 2, seed=12)
    rom = eigenrecon_cross(*_ensembles(sys, range(5), range(5)), sys)
    u = np.zeros((2, 20))
    u[0, 0] = 1.0
    full = simulate_full(sys, 20, u)
    red = rom_simulate(rom, 20, u)
    np.testing.assert_allclose(red.outputs, full.outputs, atol=1e-8)
    np.testing.assert_allclose(red.states(rom), full.states, atol=1e-8)


def test_single_mode_halves():
    out = rom_simulate(_single_mode(), 6, u=np.r_[1.0, np.zeros(5)][None, :]).outputs[0]
    np.testing.assert_allclose(out, 0.5 ** np.arange(6))


def test_mode_order_conjugates():
    vals = np.array([0.5, 0.6 - 0.3j, 0.6 + 0.3j, -0.9])
    np.testing.assert_array_equal(vals[mode_order(vals)], [-0.9, 0.6 + 0.3j, 0.6 - 0.3j, 0.5])


def test_match_is_greedy_by_distance():
    pairs = match_eigenvalues([0.0, 1.0], [0.9, 0.1, 5.0])
    assert [(i, j) for i, j, _ in pairs] == [(0, 1), (1, 0)]
    assert match_eigenvalues([0.0], [1.0], tol=0.5) == []


def test_hausdorff():
    assert hausdorff([0, 1], [1, 0]) == 0.0
    assert hausdorff([0], [0, 3]) == 3.0
    assert hausdorff([], [1]) == np.inf


def test_realify_matches_complex_rom():
    a = np.array([[0.8, 0.3, 0.0], [-0.3, 0.8, 0.0], [0.0, 0.0, 0.4]])
    g = np.random.default_rng(2)
    s = g.standard_normal((3, 3)) + 2 * np.eye(3)
    sys = LtiSystem(s @ a @ np.linalg.inv(s), g.standard_normal((3, 2)), g.standard_normal((2, 3)))
    rom = eigenrecon_cross(*_ensembles(sys, range(4), range(4)), sys)
    real = realify(rom)
    assert not np.iscomplexobj(real.system.A)
    u = g.standard_normal((2, 15))
    np.testing.assert_allclose(simulate_full(real.system, 15, u).outputs,
                               rom_simulate(rom, 15, u).outputs, atol=1e-10)


def test_save_load_round_trip(tmp_path):
    sys = random_stable(5, 2, 2, seed=13)
    rom = eigenrecon_cross(*_ensembles(sys, range(5), range(5)), sys)
    save_rom(rom, tmp_path / "rom", plan={"seed": 4})
    back = load_rom(tmp_path / "rom")
    np.testing.assert_array_equal(back.eigenvalues, rom.eigenvalues)
    np.testing.assert_array_equal(back.Psi, rom.Psi)
    np.testing.assert_array_equal(back.B_r, rom.B_r)
    assert back.source == rom.source
    assert back.diagnostics["hankel_rank"] == 5
