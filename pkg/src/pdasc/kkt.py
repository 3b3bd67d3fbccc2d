"""Optimality toolkit for ``min 0.5*||Psi x - y||^2 + lam*||x||_1``.

A pair ``(x, d)`` is optimal iff ``Psi^t Psi x + d = Psi^t y`` and
``x = T_lam(x + d)`` with ``T_lam`` the soft-thresholding operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ActiveSets",
    "PrimalDualState",
    "soft_threshold",
    "active_sets_from",
    "kkt_residual",
    "objective",
]


@dataclass(frozen=True)
class ActiveSets:
    """Signed partition of ``{0, ..., p-1}`` (sorted index arrays)."""

    plus: np.ndarray
    minus: np.ndarray
    inactive: np.ndarray

    @property
    def active(self):
        return np.union1d(self.plus, self.minus)

    @property
    def size(self):
        return self.plus.size + self.minus.size

    def same_as(self, other):
        return np.array_equal(self.plus, other.plus) and np.array_equal(self.minus, other.minus)


@dataclass
class PrimalDualState:
    x: np.ndarray
    d: np.ndarray
    lam: float
    sets: ActiveSets | None = None


def soft_threshold(v, lam):
    """Componentwise ``max(|v_i| - lam, 0) * sign(v_i)``."""
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def active_sets_from(x, d, lam):
    """Split indices by ``x_i + d_i`` against ``+-lam``.

    The inequalities are strict: ``|x_i + d_i| == lam`` counts as inactive.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if x.shape != d.shape:
        raise ValueError("x and d must have the same shape")
    u = x + d
    up = u > lam
    down = u < -lam
    return ActiveSets(np.flatnonzero(up), np.flatnonzero(down), np.flatnonzero(~(up | down)))


def kkt_residual(op, y, x, d, lam):
    """Return ``(r1, r2)``, the sup-norm residuals of the two KKT equations.

    ``r1 = ||Psi^t Psi x + d - Psi^t y||_inf`` and
    ``r2 = ||x - T_lam(x + d)||_inf``.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    r1 = op.apply_adjoint(op.apply(x) - y) + d
    r2 = x - soft_threshold(x + d, lam)
    return float(np.max(np.abs(r1), initial=0.0)), float(np.max(np.abs(r2), initial=0.0))


def objective(op, y, x, lam):
    r = op.apply(x) - y
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(x)))
