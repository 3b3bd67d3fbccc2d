"""Continuation over a decreasing lambda grid, with parameter selection.

:func:`pdasc_solve` starts from ``lam_0 = ||Psi^t y||_inf`` where ``x = 0`` is
optimal and warm-starts PDAS at every ``lam_s = lam_0 * rho**s``.  The path
ends when the configured rule fires, when the active set reaches
``eta * n`` entries, when a restricted Gram matrix turns singular, or when
the grid runs out.

Rules
-----
``"mdp"``
    Stop at the first step whose debiased fit has residual ``<= epsilon``;
    the debiased point is the output.
``"dp"``
    Stop at the first step whose raw residual is ``<= epsilon``.
``"bic"``
    Run to the active-set cap and return the minimizer of
    ``0.5*||Psi x - y||^2 + (ln n / n) * ||x||_0`` over the path.
``"cap"``
    Return the last step before the active-set cap.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import RankDeficient, SelectionFailed
from .operators import RestrictedSolver
from .pdas import RANK_DEFICIENT, pdas_solve

__all__ = [
    "RULES",
    "ContinuationConfig",
    "PathStep",
    "SolutionPath",
    "lambda_grid",
    "pdasc_solve",
    "debias",
    "mdp_check",
    "dp_check",
    "bic_score",
    "select_solution",
    "write_path_csv",
    "PATH_CSV_COLUMNS",
]

RULES = ("mdp", "dp", "bic", "cap")

PATH_CSV_COLUMNS = (
    "lambda",
    "pdas_iters",
    "active_size",
    "kkt_r1",
    "kkt_r2",
    "residual_norm",
    "bic",
    "selected",
)


def lambda_grid(lambda_max, lambda_min=None, N=None, rho=None):
    """Geometric grid ``lambda_max * rho**s``.

    Either ``lambda_min`` and ``N`` are given (``rho`` is then
    ``(lambda_min/lambda_max)**(1/N)`` and the grid has ``N + 1`` points), or
    ``rho`` is given together with ``N`` (number of steps) or ``lambda_min``
    (the grid stops at the last point ``>= lambda_min``).
    """
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    if rho is None:
        if lambda_min is None or N is None:
            raise ValueError("need lambda_min and N when rho is not given")
        if not 0 < lambda_min < lambda_max:
            raise ValueError("need 0 < lambda_min < lambda_max")
        if N < 1:
            raise ValueError("N must be at least 1")
        rho = (lambda_min / lambda_max) ** (1.0 / N)
        grid = lambda_max * rho ** np.arange(N + 1)
        grid[-1] = lambda_min
        return grid
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if N is None:
        if lambda_min is None or not 0 < lambda_min < lambda_max:
            raise ValueError("need 0 < lambda_min < lambda_max or N with rho")
        # small slack so that an exact power of rho is kept
        N = int(math.floor(math.log(lambda_min / lambda_max) / math.log(rho) + 1e-9))
    if N < 1:
        raise ValueError("N must be at least 1")
    return lambda_max * rho ** np.arange(N + 1)


@dataclass
class ContinuationConfig:
    """Parameters of :func:`pdasc_solve`.

    ``lambda_max`` defaults to ``||Psi^t y||_inf`` and ``lambda_min`` to
    ``1e-10 * lambda_max``.  Giving ``rho`` switches to a fixed decrease
    factor; the grid then has ``N`` steps if ``N`` is set explicitly,
    otherwise it runs down to ``lambda_min``.
    """

    lambda_max: float | None = None
    lambda_min: float | None = None
    N: int | None = None
    rho: float | None = None
    J: int = 1
    rule: str = "bic"
    epsilon: float | None = None
    eta: float = 0.5
    method: str | None = None
    cg_iters: int = 2

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.rule in ("mdp", "dp") and (self.epsilon is None or self.epsilon < 0):
            raise ValueError(f"rule {self.rule!r} needs a noise level epsilon >= 0")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.J < 1:
            raise ValueError("J must be at least 1")
        if self.rho is not None and not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.N is not None and self.N < 1:
            raise ValueError("N must be at least 1")

    def grid(self, lambda_max):
        lmin = self.lambda_min if self.lambda_min is not None else 1e-10 * lambda_max
        if self.rho is None:
            return lambda_grid(lambda_max, lmin, self.N or 100)
        if self.N is not None:
            return lambda_grid(lambda_max, N=self.N, rho=self.rho)
        return lambda_grid(lambda_max, lmin, rho=self.rho)


@dataclass
class PathStep:
    lam: float
    x: np.ndarray
    d: np.ndarray
    active: np.ndarray
    kkt_r1: float
    kkt_r2: float
    pdas_iters: int
    outcome: str
    residual_norm: float
    bic: float
    #: active sets of every inner PDAS iterate at this lambda
    inner_sets: list = field(default_factory=list)
    x_debiased: np.ndarray | None = None
    debiased_residual: float | None = None

    @property
    def active_size(self):
        return int(self.active.size)


@dataclass
class SolutionPath:
    steps: list
    config: ContinuationConfig
    op: object = None
    y: np.ndarray | None = None
    selected: int | None = None
    selected_x: np.ndarray | None = None
    truncated: bool = False
    hit_cap: bool = False

    @property
    def lambdas(self):
        return np.array([s.lam for s in self.steps])

    @property
    def failed(self):
        return self.selected is None

    @property
    def lambda_hat(self):
        return None if self.selected is None else self.steps[self.selected].lam


def debias(op, y, x, d, A, solver=None):
    """Least-squares refit on ``A``: ``x_A + (Psi_A^t Psi_A)^{-1} d_A``, zero elsewhere.

    When ``Psi^t Psi x + d = Psi^t y`` holds on ``A`` this equals the
    least-squares solution supported on ``A``.
    """
    A = np.asarray(A, dtype=np.intp)
    out = np.zeros(op.p)
    if A.size == 0:
        return out
    if solver is None:
        solver = _exact_solver(op, A.size)
    x = np.asarray(x, dtype=float)
    out[A] = x[A] + solver.solve(A, np.asarray(d, dtype=float)[A])
    return out


def _exact_solver(op, m):
    if op.explicit:
        return RestrictedSolver(op, "cholesky")
    return RestrictedSolver(op, "cg", cg_iters=max(10 * m, 50), cg_tol=1e-13)


def mdp_check(op, y, x_debiased, epsilon):
    """``||Psi x~ - y|| <= epsilon`` for the debiased candidate ``x~``."""
    return float(np.linalg.norm(op.apply(x_debiased) - y)) <= epsilon


def dp_check(op, y, x, epsilon):
    """``||Psi x - y|| <= epsilon`` for the raw iterate."""
    return float(np.linalg.norm(op.apply(x) - y)) <= epsilon


def bic_score(op, y, x, n=None):
    n = op.n if n is None else n
    r = op.apply(x) - y
    return 0.5 * float(r @ r) + math.log(n) / n * int(np.count_nonzero(x))


def _record(op, y, x, d, lam, iters, outcome, inner, active=None):
    r = op.apply(x) - y
    r1 = float(np.max(np.abs(op.apply_adjoint(r) + d), initial=0.0))
    u = x + d
    r2 = float(np.max(np.abs(x - np.sign(u) * np.maximum(np.abs(u) - lam, 0.0)), initial=0.0))
    nnz = int(np.count_nonzero(x))
    rr = float(r @ r)
    return PathStep(
        lam=float(lam),
        x=x,
        d=d,
        active=np.flatnonzero(x) if active is None else np.asarray(active, dtype=np.intp),
        kkt_r1=r1,
        kkt_r2=r2,
        pdas_iters=iters,
        outcome=outcome,
        residual_norm=math.sqrt(rr),
        bic=0.5 * rr + math.log(op.n) / op.n * nnz,
        inner_sets=inner,
    )


def pdasc_solve(op, y, config=None):
    """Run the continuation path and select a solution per ``config.rule``.

    Returns a :class:`SolutionPath`; ``selected`` is ``None`` when a
    discrepancy rule never fired (see :func:`select_solution`).
    """
    config = config or ContinuationConfig()
    y = np.asarray(y, dtype=float)
    if y.shape != (op.n,):
        raise ValueError(f"y must have length {op.n}")
    aty = op.apply_adjoint(y)
    lam_max = config.lambda_max if config.lambda_max is not None else float(np.max(np.abs(aty)))
    x0 = np.zeros(op.p)
    if lam_max == 0.0:
        step = _record(op, y, x0, aty, 0.0, 0, "trivial", [])
        step.x_debiased = x0
        step.debiased_residual = step.residual_norm
        path = SolutionPath([step], config, op, y)
        path.selected, path.selected_x = 0, x0
        return path

    grid = config.grid(lam_max)
    solver = RestrictedSolver(op, config.method, cg_iters=config.cg_iters)
    cap = config.eta * op.n
    eps = config.epsilon

    steps = [_record(op, y, x0, aty.copy(), grid[0], 0, "initial", [])]
    path = SolutionPath(steps, config, op, y)
    for s in range(len(grid)):
        if s > 0:
            prev = steps[-1]
            status = pdas_solve(prev.x, prev.d, grid[s], config.J, op, y, solver, aty)
            if status.outcome == RANK_DEFICIENT:
                path.truncated = True
                break
            st = status.final_state
            steps.append(
                _record(
                    op, y, st.x, st.d, grid[s], status.iterations, status.outcome,
                    status.history, st.sets.active,
                )
            )
        step = steps[-1]
        if config.rule == "mdp":
            try:
                xt = debias(op, y, step.x, step.d, step.active, _debias_solver(op, solver, step))
            except RankDeficient:
                path.truncated = True
                steps.pop()
                break
            step.x_debiased = xt
            step.debiased_residual = float(np.linalg.norm(op.apply(xt) - y))
            if step.debiased_residual <= eps:
                break
        elif config.rule == "dp" and step.residual_norm <= eps:
            break
        if step.active_size >= cap:
            path.hit_cap = True
            break

    try:
        path.selected, path.selected_x = select_solution(path)
    except SelectionFailed:
        pass
    return path


def _debias_solver(op, solver, step):
    # the PDAS factor for this active set is already cached
    if solver.method == "cholesky":
        return solver
    return _exact_solver(op, step.active_size)


def select_solution(path, rule=None):
    """Return ``(index, x_final)`` for ``rule`` (defaults to the path's rule).

    Raises
    ------
    SelectionFailed
        ``"mdp"``/``"dp"`` never fired on the path.
    """
    rule = rule or path.config.rule
    steps = path.steps
    if not steps:
        raise SelectionFailed("empty path")
    eps = path.config.epsilon
    if rule in ("mdp", "dp") and eps is None:
        raise ValueError(f"rule {rule!r} needs the path to carry epsilon")
    if rule == "mdp":
        for i, s in enumerate(steps):
            if s.debiased_residual is None:
                # paths run under another rule are debiased on demand
                try:
                    s.x_debiased = debias(path.op, path.y, s.x, s.d, s.active)
                except RankDeficient:
                    continue
                s.debiased_residual = float(np.linalg.norm(path.op.apply(s.x_debiased) - path.y))
            if s.debiased_residual <= eps:
                return i, s.x_debiased
        raise SelectionFailed("modified discrepancy principle never satisfied")
    if rule == "dp":
        for i, s in enumerate(steps):
            if s.residual_norm <= eps:
                return i, s.x
        raise SelectionFailed("discrepancy principle never satisfied")
    if rule == "bic":
        i = int(np.argmin([s.bic for s in steps]))
        return i, steps[i].x
    if rule == "cap":
        cap = path.config.eta * path.op.n
        for i, s in enumerate(steps):
            if s.active_size >= cap:
                i = max(i - 1, 0)
                return i, steps[i].x
        return len(steps) - 1, steps[-1].x
    raise ValueError(f"unknown rule {rule!r}")


def write_path_csv(path, fh):
    """Write one row per continuation step (columns in :data:`PATH_CSV_COLUMNS`)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PATH_CSV_COLUMNS)
    for i, s in enumerate(path.steps):
        w.writerow(
            [
                _fmt(s.lam),
                s.pdas_iters,
                s.active_size,
                _fmt(s.kkt_r1),
                _fmt(s.kkt_r2),
                _fmt(s.residual_norm),
                _fmt(s.bic),
                int(i == path.selected),
            ]
        )


def _fmt(v):
    return format(float(v), ".17g")
