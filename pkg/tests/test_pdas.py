import numpy as np
import pytest
from conftest import gaussian_instance

from pdasc import (
    DenseOperator,
    PrimalDualState,
    RestrictedSolver,
    active_sets_from,
    kkt_residual,
    pdas_solve,
    pdas_step,
)
from pdasc.pdas import CONVERGED, MAX_ITER, RANK_DEFICIENT


def test_identity_one_step(identity2):
    op, y = identity2
    s = pdas_step(PrimalDualState(np.zeros(2), y.copy(), 1.0), op, y, 1.0)
    assert s.sets.plus.tolist() == [0] and s.sets.minus.size == 0
    assert np.array_equal(s.x, [2.0, 0.0])
    assert np.array_equal(s.d, [1.0, 0.5])


def test_fixed_point_is_unchanged(identity2):
    op, y = identity2
    x, d = np.array([2.0, 0.0]), np.array([1.0, 0.5])
    s = pdas_step(PrimalDualState(x, d, 1.0), op, y, 1.0)
    assert np.array_equal(s.x, x) and np.array_equal(s.d, d)


def test_step_matches_normal_equations_on_true_support():
    op, x_true, y, _ = gaussian_instance(8, 16, 2, 0.0, seed=5)
    A = np.flatnonzero(x_true)
    lam = 1e-6
    # start whose sets are exactly the signed true support
    d0 = np.zeros(16)
    d0[A] = 2 * lam * np.sign(x_true[A])
    s = pdas_step(PrimalDualState(np.zeros(16), d0, lam), op, y, lam)
    assert np.array_equal(s.sets.active, A)
    M = op.to_dense()[:, A]
    ref = np.linalg.solve(M.T @ M, M.T @ y - lam * np.sign(x_true[A]))
    assert np.allclose(s.x[A], ref, atol=1e-12)


def test_step_invariants_hold_exactly(rng):
    op, _, y, _ = gaussian_instance(30, 60, 5, 1e-2, seed=2)
    lam = 0.5 * np.max(np.abs(op.apply_adjoint(y)))
    state = PrimalDualState(np.zeros(60), op.apply_adjoint(y), lam)
    for _ in range(6):
        state = pdas_step(state, op, y, lam)
        s = state.sets
        assert np.all(state.x[s.inactive] == 0.0)
        assert np.all(state.d[s.plus] == lam) and np.all(state.d[s.minus] == -lam)
        assert kkt_residual(op, y, state.x, state.d, lam)[0] <= 1e-8


def test_empty_active_set(identity2):
    op, y = identity2
    s = pdas_step(PrimalDualState(np.zeros(2), y.copy(), 5.0), op, y, 5.0)
    assert s.sets.size == 0
    assert np.array_equal(s.x, [0.0, 0.0]) and np.array_equal(s.d, y)


def test_solve_identity(identity2):
    op, y = identity2
    st = pdas_solve(np.zeros(2), y.copy(), 1.0, 5, op, y)
    assert st.outcome == CONVERGED and st.iterations <= 2
    assert np.array_equal(st.final_state.x, [2.0, 0.0])


def test_solve_large_lambda_is_zero():
    op, _, y, _ = gaussian_instance(10, 20, 2, 0.0, seed=1)
    aty = op.apply_adjoint(y)
    st = pdas_solve(np.zeros(20), aty, float(np.max(np.abs(aty))), 3, op, y)
    assert st.converged and st.iterations == 1
    assert not np.any(st.final_state.x) and st.final_state.sets.size == 0


def test_solve_rejects_bad_J(identity2):
    op, y = identity2
    with pytest.raises(ValueError):
        pdas_solve(np.zeros(2), y, 1.0, 0, op, y)


def test_max_iter_outcome_and_count():
    op, _, y, _ = gaussian_instance(64, 256, 10, 0.0, seed=3)
    aty = op.apply_adjoint(y)
    st = pdas_solve(np.zeros(256), aty, 0.3 * np.max(np.abs(aty)), 1, op, y)
    assert st.outcome == MAX_ITER
    assert st.iterations == 1 and len(st.history) == 1
    # a cold start far below lambda_max activates more than n columns
    st = pdas_solve(np.zeros(256), aty, 0.05 * np.max(np.abs(aty)), 1, op, y)
    assert st.outcome == RANK_DEFICIENT and st.iterations == 0


def test_rank_deficient_keeps_last_state():
    # duplicated column makes any set containing both singular
    M = np.array([[1.0, 1.0, 0.0, 0.3], [0.0, 0.0, 1.0, 0.2], [0.0, 0.0, 0.0, 1.0]])
    op = DenseOperator(M)
    y = np.array([4.0, 0.1, 0.0])
    x0 = np.zeros(4)
    d0 = op.apply_adjoint(y)
    st = pdas_solve(x0, d0, 0.5, 5, op, y)
    assert st.outcome == RANK_DEFICIENT and st.iterations == 0
    assert st.final_state.x is not None and np.array_equal(st.final_state.x, x0)


@pytest.mark.parametrize("seed", range(30))
def test_converged_iff_kkt(seed):
    op, _, y, _ = gaussian_instance(24, 48, 3, 1e-3 * (seed % 2), seed=seed)
    aty = op.apply_adjoint(y)
    lam = (0.3 + 0.03 * (seed % 10)) * np.max(np.abs(aty))
    solver = RestrictedSolver(op)
    st = pdas_solve(np.zeros(48), aty, lam, 1 + seed % 4, op, y, solver=solver)
    if st.outcome == RANK_DEFICIENT:
        pytest.skip("rank deficient start")
    s = st.final_state
    u = np.abs(s.x + s.d)
    if np.any(np.abs(u - lam) < 1e-9):
        pytest.skip("component on the threshold")
    is_kkt = max(kkt_residual(op, y, s.x, s.d, lam)) <= 1e-8
    assert st.converged == is_kkt
    if st.converged:
        assert active_sets_from(s.x, s.d, lam).same_as(s.sets)
