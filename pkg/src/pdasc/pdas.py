"""Primal-dual active set iteration at a fixed regularization parameter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import RankDeficient
from .kkt import PrimalDualState, active_sets_from
from .operators import RestrictedSolver

__all__ = ["PdasStatus", "pdas_step", "pdas_solve", "CONVERGED", "MAX_ITER", "RANK_DEFICIENT"]

CONVERGED = "converged_sets_stable"
MAX_ITER = "hit_max_iter"
RANK_DEFICIENT = "rank_deficient"


@dataclass
class PdasStatus:
    outcome: str
    iterations: int
    final_state: PrimalDualState
    #: active set (sorted indices) used by each completed step
    history: list = field(default_factory=list)

    @property
    def converged(self):
        return self.outcome == CONVERGED


def pdas_step(state, op, y, lam, solver=None, aty=None):
    """One PDAS update from ``(state.x, state.d)``.

    The signed sets come from ``x + d`` against ``lam``.  ``x`` is zeroed off
    the active set, ``d`` is pinned to ``+-lam`` on it, ``x_A`` solves the
    restricted normal equations and the inactive dual is ``Psi^t (y - Psi x)``.

    ``solver`` is a :class:`~pdasc.operators.RestrictedSolver` (a fresh one is
    made when omitted) and ``aty`` an optional precomputed ``Psi^t y``.

    Raises
    ------
    RankDeficient
        If the restricted Gram matrix cannot be factored.
    """
    if solver is None:
        solver = RestrictedSolver(op)
    if aty is None:
        aty = op.apply_adjoint(y)
    x_old = np.asarray(state.x, dtype=float)
    sets = active_sets_from(x_old, state.d, lam)
    A = sets.active
    x = np.zeros(op.p)
    if A.size == 0:
        return PrimalDualState(x, np.array(aty, dtype=float), lam, sets)

    dA = np.zeros(op.p)
    dA[sets.plus] = lam
    dA[sets.minus] = -lam
    rhs = aty[A] - dA[A]
    z = solver.solve(A, rhs, warm_start=x_old[A])
    if not np.all(np.isfinite(z)):
        raise RankDeficient("restricted solve produced non-finite values")
    x[A] = z
    d = op.apply_adjoint(y - op.apply(x))
    d[sets.plus] = lam
    d[sets.minus] = -lam
    return PrimalDualState(x, d, lam, sets)


def pdas_solve(x0, d0, lam, J, op, y, solver=None, aty=None):
    """Iterate :func:`pdas_step` from ``(x0, d0)`` for at most ``J`` steps.

    Stops early once the signed active sets computed from the newest iterate
    coincide with the ones that produced it, i.e. the next step would repeat
    the same sets and therefore the same iterate.  Such a point satisfies the
    KKT system.
    """
    if J < 1:
        raise ValueError("J must be at least 1")
    if solver is None:
        solver = RestrictedSolver(op)
    if aty is None:
        aty = op.apply_adjoint(y)
    state = PrimalDualState(np.asarray(x0, dtype=float), np.asarray(d0, dtype=float), lam)
    history = []
    for k in range(J):
        try:
            new = pdas_step(state, op, y, lam, solver, aty)
        except RankDeficient:
            return PdasStatus(RANK_DEFICIENT, k, state, history)
        history.append(new.sets.active)
        state = new
        if active_sets_from(new.x, new.d, lam).same_as(new.sets):
            return PdasStatus(CONVERGED, k + 1, state, history)
    return PdasStatus(MAX_ITER, J, state, history)
