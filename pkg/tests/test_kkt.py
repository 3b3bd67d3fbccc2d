import numpy as np
import pytest
from conftest import gaussian_instance
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pdasc import (
    ContinuationConfig,
    IstaConfig,
    active_sets_from,
    ista_solve,
    kkt_residual,
    objective,
    pdas_solve,
    pdasc_solve,
    soft_threshold,
)


def test_soft_threshold_examples():
    assert np.array_equal(soft_threshold([2.0, -0.5, 0.0], 1.0), [1.0, 0.0, 0.0])
    v = np.array([1.5, -2.0, 0.3])
    assert np.array_equal(soft_threshold(v, 0.0), v)
    with pytest.raises(ValueError):
        soft_threshold(v, -1.0)


def test_soft_threshold_is_the_prox(rng):
    # grid search of 0.5*(z-v)^2 + lam*|z| per coordinate
    grid = np.linspace(-6, 6, 120001)
    for _ in range(20):
        v = rng.uniform(-5, 5, 4)
        lam = rng.uniform(0, 2)
        ref = [grid[np.argmin(0.5 * (grid - vi) ** 2 + lam * np.abs(grid))] for vi in v]
        assert np.allclose(soft_threshold(v, lam), ref, atol=2e-4)


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, 10, elements=st.floats(-50, 50)), st.floats(0, 20))
def test_soft_threshold_odd(v, lam):
    assert np.array_equal(soft_threshold(-v, lam), -soft_threshold(v, lam))


def test_active_sets_examples():
    s = active_sets_from(np.array([1.5, -0.3, -2.0]), np.zeros(3), 1.0)
    assert s.plus.tolist() == [0] and s.minus.tolist() == [2] and s.inactive.tolist() == [1]
    s = active_sets_from(np.zeros(5), np.zeros(5), 0.5)
    assert s.size == 0 and s.inactive.tolist() == list(range(5))
    s = active_sets_from(np.array([0.25, 2.0]), np.array([0.75, -3.5]), 1.0)
    assert s.plus.size == 0 and s.minus.tolist() == [1] and s.inactive.tolist() == [0]
    assert s.active.tolist() == [1]


def test_active_sets_shape_mismatch():
    with pytest.raises(ValueError):
        active_sets_from(np.zeros(3), np.zeros(4), 1.0)


def test_kkt_residual_examples(identity2):
    op, y = identity2
    assert kkt_residual(op, y, np.array([2.0, 0.0]), np.array([1.0, 0.5]), 1.0) == (0.0, 0.0)
    aty = op.apply_adjoint(y)
    assert kkt_residual(op, y, np.zeros(2), aty, 3.0) == (0.0, 0.0)
    r1, r2 = kkt_residual(op, y, np.array([2.5, 0.0]), np.array([1.0, 0.5]), 1.0)
    # x + d = [3.5, 0.5] so the thresholding equation still holds
    assert r1 == pytest.approx(0.5) and r2 == 0.0


def test_kkt_residual_at_ista_solution():
    op, _, y, _ = gaussian_instance(16, 32, 3, 1e-2, seed=4)
    lam = 0.2 * np.max(np.abs(op.apply_adjoint(y)))
    res = ista_solve(op, y, lam, IstaConfig(tol=1e-12))
    assert res.converged
    d = op.apply_adjoint(y - op.apply(res.x))
    r1, r2 = kkt_residual(op, y, res.x, d, lam)
    assert r1 <= 1e-8 and r2 <= 1e-8


def test_objective_examples(identity2):
    op, y = identity2
    assert objective(op, y, np.zeros(2), 1.0) == pytest.approx(0.5 * (9 + 0.25))
    assert objective(op, y, np.array([2.0, 0.0]), 1.0) == pytest.approx(2.625)


def test_pdasc_objective_not_worse_than_ista():
    for seed in range(5):
        op, _, y, _ = gaussian_instance(24, 48, 3, 1e-3, seed=seed)
        path = pdasc_solve(op, y, ContinuationConfig(rule="cap", eta=1.0, N=30, J=50))
        step = path.steps[len(path.steps) // 2]
        ref = ista_solve(op, y, step.lam)
        assert objective(op, y, step.x, step.lam) <= objective(op, y, ref.x, step.lam) + 1e-8


def test_stationary_pair_is_a_local_minimum(rng):
    op, _, y, _ = gaussian_instance(20, 40, 3, 1e-2, seed=11)
    lam = 0.3 * np.max(np.abs(op.apply_adjoint(y)))
    st_ = pdas_solve(np.zeros(40), op.apply_adjoint(y), lam, 50, op, y)
    assert st_.converged
    x = st_.final_state.x
    assert max(kkt_residual(op, y, x, st_.final_state.d, lam)) <= 1e-10
    f0 = objective(op, y, x, lam)
    for _ in range(100):
        u = rng.standard_normal(40)
        u /= np.linalg.norm(u)
        assert objective(op, y, x + 1e-4 * u, lam) >= f0 - 1e-12
