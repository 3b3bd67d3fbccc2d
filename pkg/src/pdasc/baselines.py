"""Independent reference solvers used to validate the active-set method.

None of these are used by :mod:`pdasc.continuation`; they exist so that the
tests can check its output against something computed a different way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import RankDeficient, Unsupported
from .kkt import soft_threshold

__all__ = ["IstaConfig", "IstaResult", "ista_solve", "oracle_ls_on_support", "l0_bruteforce"]


@dataclass
class IstaConfig:
    step_size: float | None = None
    tol: float = 1e-10
    max_iter: int = 10**6
    track_objective: bool = False


@dataclass
class IstaResult:
    x: np.ndarray
    converged: bool
    iterations: int
    objectives: list = field(default_factory=list)


def ista_solve(op, y, lam, cfg=None):
    """Proximal gradient ``x <- T_{lam*t}(x - t Psi^t (Psi x - y))`` from zero.

    Stops when ``||x - T_lam(x + d)||_inf <= tol`` with ``d = Psi^t (y - Psi x)``,
    which is the second KKT residual (the first vanishes for this ``d``).
    """
    cfg = cfg or IstaConfig()
    y = np.asarray(y, dtype=float)
    t = cfg.step_size if cfg.step_size is not None else 1.0 / op.spectral_norm_sq()
    aty = op.apply_adjoint(y)
    if op.explicit and op.p <= 4096:
        G = op.gram_restricted(np.arange(op.p))
        grad = lambda x: G @ x - aty  # noqa: E731
    else:
        grad = lambda x: op.apply_adjoint(op.apply(x)) - aty  # noqa: E731

    def obj(x):
        r = op.apply(x) - y
        return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())

    x = np.zeros(op.p)
    objectives = [obj(x)] if cfg.track_objective else []
    for it in range(cfg.max_iter + 1):
        g = grad(x)
        if np.max(np.abs(x - soft_threshold(x - g, lam)), initial=0.0) <= cfg.tol:
            return IstaResult(x, True, it, objectives)
        if it == cfg.max_iter:
            break
        x = soft_threshold(x - t * g, lam * t)
        if cfg.track_objective:
            objectives.append(obj(x))
    return IstaResult(x, False, cfg.max_iter, objectives)


def oracle_ls_on_support(op, y, A):
    """Least-squares fit supported on ``A`` (zeros elsewhere)."""
    A = np.asarray(A, dtype=np.intp)
    x = np.zeros(op.p)
    if A.size == 0:
        return x
    cols = op.columns(A)
    z, _, rank, _ = np.linalg.lstsq(cols, np.asarray(y, dtype=float), rcond=None)
    if rank < A.size:
        raise RankDeficient(f"Psi_A has rank {rank} < |A| = {A.size}")
    x[A] = z
    return x


def l0_bruteforce(op, y, k_max, epsilon=None):
    """Exhaustive search for the sparsest least-squares fit.

    For ``k = 0, 1, ..., k_max`` the support of size ``k`` with the smallest
    residual is found (ties go to the lexicographically first support).  The
    first ``k`` whose best residual is ``<= epsilon`` wins; if none does, the
    best support of size ``k_max`` is returned.  ``epsilon`` defaults to
    ``1e-9 * ||y||``.

    Returns ``(support, x)``.
    """
    if op.p > 20 or k_max > 6:
        raise Unsupported("brute-force l0 search is limited to p <= 20 and k_max <= 6")
    y = np.asarray(y, dtype=float)
    ynorm = float(np.linalg.norm(y))
    eps = 1e-9 * ynorm if epsilon is None else epsilon
    if ynorm <= eps:
        return np.zeros(0, dtype=np.intp), np.zeros(op.p)
    M = op.to_dense()
    best = None
    for k in range(1, k_max + 1):
        best = None
        for S in itertools.combinations(range(op.p), k):
            cols = M[:, S]
            z, _, rank, _ = np.linalg.lstsq(cols, y, rcond=None)
            if rank < k:
                continue
            res = float(np.linalg.norm(cols @ z - y))
            if best is None or res < best[0] - 1e-14 * max(ynorm, 1.0):
                best = (res, S, z)
        if best is not None and best[0] <= eps:
            break
    if best is None:
        return np.zeros(0, dtype=np.intp), np.zeros(op.p)
    _, S, z = best
    x = np.zeros(op.p)
    x[list(S)] = z
    return np.array(S, dtype=np.intp), x
