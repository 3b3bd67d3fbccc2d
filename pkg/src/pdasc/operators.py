"""Sensing operators and restricted least-squares solvers.

Two backends are provided:

* :class:`DenseOperator` wraps an explicit ``n x p`` matrix whose columns are
  normalized at construction.
* :class:`PartialDCTOperator` applies ``sqrt(p/n) * S_R C`` where ``C`` is the
  orthonormal DCT-II and ``S_R`` keeps the rows in ``R``.  It never forms the
  matrix; products go through :mod:`scipy.fft`.

The restricted solvers handle ``Psi_A^t Psi_A z = b`` either directly (a
Cholesky factor that can be up/downdated when ``A`` changes a little) or with a
few conjugate gradient steps.  All indices are 0-based.
"""

from __future__ import annotations

import itertools
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft
from scipy.linalg import solve_triangular

from .exceptions import RankDeficient, Unsupported

__all__ = [
    "SensingOperator",
    "DenseOperator",
    "PartialDCTOperator",
    "CholeskyFactor",
    "RestrictedSolver",
    "apply",
    "apply_adjoint",
    "gram_restricted",
    "solve_restricted",
    "cholesky_factor",
    "chol_update_downdate",
    "conjugate_gradient",
    "rip_constant_bruteforce",
    "save_dense",
    "load_dense",
    "dct_descriptor",
    "parse_dct_descriptor",
]

# pivot^2 / diag below this counts as a rank failure
RANK_TOL = 1e-10

DENSE_MAGIC = b"PDASCOP1"

# column norms of the partial DCT are tabulated only up to this size
DCT_NORM_CHECK_MAX_P = 4096


def _as_index(A, p):
    A = np.asarray(A, dtype=np.intp).reshape(-1)
    if A.size and (A.min() < 0 or A.max() >= p):
        raise ValueError(f"index set out of range for p={p}")
    return A


class SensingOperator:
    """Linear map ``Psi: R^p -> R^n`` with the access patterns the solvers need.

    Subclasses implement :meth:`_apply`, :meth:`_apply_adjoint` and
    :meth:`columns`.  Public methods validate shapes.
    """

    n: int
    p: int
    #: whether the dense matrix is available (selects Cholesky by default)
    explicit = False

    @property
    def shape(self):
        return (self.n, self.p)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.p,):
            raise ValueError(f"expected vector of length {self.p}, got shape {x.shape}")
        return self._apply(x)

    def apply_adjoint(self, r):
        r = np.asarray(r, dtype=float)
        if r.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {r.shape}")
        return self._apply_adjoint(r)

    def columns(self, A):
        """Return the submatrix ``Psi_A`` of shape ``(n, len(A))``."""
        raise NotImplementedError

    def gram_restricted(self, A):
        A = _as_index(A, self.p)
        if A.size == 0:
            return np.zeros((0, 0))
        cols = self.columns(A)
        return cols.T @ cols

    def gram_matvec(self, A, v):
        """``Psi_A^t Psi_A v`` using two operator applications."""
        A = _as_index(A, self.p)
        z = np.zeros(self.p)
        z[A] = v
        return self._apply_adjoint(self._apply(z))[A]

    def spectral_norm_sq(self, iters=100, seed=0):
        """``||Psi||_2^2`` by power iteration on ``Psi^t Psi``."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.p)
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(iters):
            w = self._apply_adjoint(self._apply(v))
            est = float(np.linalg.norm(w))
            if est == 0.0:
                return 0.0
            v = w / est
        return est

    def to_dense(self):
        return self.columns(np.arange(self.p))


class DenseOperator(SensingOperator):
    """Explicit sensing matrix.

    Parameters
    ----------
    matrix : array_like, shape (n, p)
    normalize : bool
        Divide every column by its realized Euclidean norm.
    """

    explicit = True

    def __init__(self, matrix, normalize=True):
        M = np.array(matrix, dtype=float, copy=True)
        if M.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        if normalize:
            norms = np.linalg.norm(M, axis=0)
            if np.any(norms == 0):
                raise ValueError("cannot normalize a zero column")
            M /= norms
        M.setflags(write=False)
        self.matrix = M
        self.n, self.p = M.shape
        self._gram = None

    @property
    def column_norms(self):
        return np.linalg.norm(self.matrix, axis=0)

    def precompute_gram(self):
        """Cache ``Psi^t Psi``; later Gram lookups become slicing."""
        if self._gram is None:
            G = self.matrix.T @ self.matrix
            G.setflags(write=False)
            self._gram = G
        return self._gram

    def _apply(self, x):
        return self.matrix @ x

    def _apply_adjoint(self, r):
        return self.matrix.T @ r

    def columns(self, A):
        return self.matrix[:, _as_index(A, self.p)]

    def gram_restricted(self, A):
        if self._gram is None:
            return super().gram_restricted(A)
        A = _as_index(A, self.p)
        return self._gram[np.ix_(A, A)]

    def gram_matvec(self, A, v):
        A = _as_index(A, self.p)
        if self._gram is not None:
            return self._gram[np.ix_(A, A)] @ v
        cols = self.matrix[:, A]
        return cols.T @ (cols @ v)

    def spectral_norm_sq(self, iters=100, seed=0):
        if self.p <= 2048:
            return float(np.linalg.norm(self.matrix, 2) ** 2)
        return super().spectral_norm_sq(iters, seed)

    def to_dense(self):
        return np.array(self.matrix)

    def __repr__(self):
        return f"DenseOperator(n={self.n}, p={self.p})"


class PartialDCTOperator(SensingOperator):
    """Rows ``R`` of the orthonormal DCT-II, scaled by ``sqrt(p/n)``.

    Columns have unit norm only in expectation over ``R``; the realized norms
    are tabulated in :attr:`column_norms` for ``p <= 4096``.
    """

    def __init__(self, p, rows, scale=None):
        raw = [int(r) for r in rows]
        if not raw or len(set(raw)) != len(raw):
            raise ValueError("rows must be a nonempty set of distinct indices")
        rows = np.array(sorted(raw), dtype=np.intp)
        if rows.min() < 0 or rows.max() >= p:
            raise ValueError(f"row indices must lie in [0, {p})")
        rows.setflags(write=False)
        self.p = int(p)
        self.rows = rows
        self.n = rows.size
        self.scale = math.sqrt(self.p / self.n) if scale is None else float(scale)
        self.column_norms = None
        if self.p <= DCT_NORM_CHECK_MAX_P:
            norms = np.linalg.norm(self.columns(np.arange(self.p)), axis=0)
            norms.setflags(write=False)
            self.column_norms = norms

    def _apply(self, x):
        return self.scale * fft.dct(x, type=2, norm="ortho")[self.rows]

    def _apply_adjoint(self, r):
        z = np.zeros(self.p)
        z[self.rows] = r
        return self.scale * fft.idct(z, type=2, norm="ortho")

    def columns(self, A):
        A = _as_index(A, self.p)
        k = self.rows[:, None].astype(float)
        j = A[None, :].astype(float)
        w = np.where(self.rows == 0, math.sqrt(1.0 / self.p), math.sqrt(2.0 / self.p))
        return self.scale * w[:, None] * np.cos(np.pi * k * (2.0 * j + 1.0) / (2.0 * self.p))

    def __repr__(self):
        return f"PartialDCTOperator(n={self.n}, p={self.p})"


def apply(op, x):
    return op.apply(x)


def apply_adjoint(op, r):
    return op.apply_adjoint(r)


def gram_restricted(op, A):
    """``Psi_A^t Psi_A``; warns when ``|A| > n`` makes it singular."""
    A = _as_index(A, op.p)
    if A.size > op.n:
        warnings.warn(
            f"|A|={A.size} exceeds n={op.n}; Gram matrix is rank deficient",
            RuntimeWarning,
            stacklevel=2,
        )
    return op.gram_restricted(A)


# --------------------------------------------------------------------------
# Cholesky factors with up/downdates


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower factor ``L`` with ``L L^t = Psi_A^t Psi_A`` for the ordered set ``active``."""

    active: np.ndarray
    L: np.ndarray

    def solve(self, rhs):
        """Solve ``L L^t z = rhs`` where ``rhs`` is ordered like :attr:`active`."""
        if self.active.size == 0:
            return np.zeros(0)
        w = solve_triangular(self.L, rhs, lower=True, check_finite=False)
        return solve_triangular(self.L, w, lower=True, trans="T", check_finite=False)


def _check_pivots(L, diag, active, offset=0):
    piv = np.diag(L) ** 2
    bad = np.flatnonzero(~(piv > RANK_TOL * np.maximum(diag, np.finfo(float).tiny)))
    if bad.size:
        j = int(bad[0])
        raise RankDeficient(
            f"non-positive pivot at column {int(active[offset + j])}",
            index=int(active[offset + j]),
        )


def _chol_block(G, active, diag=None):
    """Cholesky of a symmetric block with an explicit pivot check.

    ``diag`` is the reference diagonal for the relative pivot test (defaults
    to the diagonal of ``G``).
    """
    if G.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        # locate the first failing column for the error report
        m = G.shape[0]
        for j in range(1, m + 1):
            try:
                np.linalg.cholesky(G[:j, :j])
            except np.linalg.LinAlgError:
                raise RankDeficient(
                    f"non-positive pivot at column {int(active[j - 1])}",
                    index=int(active[j - 1]),
                ) from None
        raise RankDeficient("Cholesky factorization failed") from None
    _check_pivots(L, np.diag(G) if diag is None else diag, active)
    return L


def cholesky_factor(op, A):
    """Fresh factorization of ``Psi_A^t Psi_A``."""
    A = _as_index(A, op.p)
    if A.size > op.n:
        raise RankDeficient(f"|A|={A.size} exceeds n={op.n}")
    L = _chol_block(op.gram_restricted(A), A)
    return CholeskyFactor(A.copy(), L)


def _rank_one_update(L, v):
    """In-place ``L L^t + v v^t`` for lower triangular ``L``."""
    v = v.copy()
    m = L.shape[0]
    for k in range(m):
        r = math.hypot(L[k, k], v[k])
        c = r / L[k, k]
        s = v[k] / L[k, k]
        L[k, k] = r
        if k + 1 < m:
            L[k + 1 :, k] = (L[k + 1 :, k] + s * v[k + 1 :]) / c
            v[k + 1 :] = c * v[k + 1 :] - s * L[k + 1 :, k]


def chol_update_downdate(f, add, remove, op):
    """Factor for ``(f.active minus remove) + add`` derived from ``f``.

    Removed columns are deleted one at a time; the trailing block absorbs the
    deleted row through a rank-one update.  Added columns are appended as a
    block: ``L12 = L^{-1} G_{A,new}`` and ``L22 = chol(G_new - L12^t L12)``.
    The new indices go at the end, in the order given.
    """
    add = _as_index(add, op.p)
    remove = _as_index(remove, op.p)
    active = f.active
    if active.size - remove.size + add.size > op.n:
        raise RankDeficient(f"|A| would exceed n={op.n}")
    if np.isin(add, active).any():
        raise ValueError("add must be disjoint from the current active set")
    if not np.isin(remove, active).all():
        raise ValueError("remove must be a subset of the current active set")

    L = np.array(f.L, copy=True)
    if remove.size:
        keep = ~np.isin(active, remove)
        # delete from the back so earlier positions stay valid
        for pos in np.flatnonzero(~keep)[::-1]:
            m = L.shape[0]
            if pos + 1 < m:
                tail = L[pos + 1 :, pos + 1 :].copy()
                _rank_one_update(tail, L[pos + 1 :, pos])
                L[pos + 1 :, pos + 1 :] = tail
            L = np.delete(np.delete(L, pos, axis=0), pos, axis=1)
        active = active[keep]
        if L.size:
            _check_pivots(L, np.diag(op.gram_restricted(active)), active)

    if add.size:
        new_active = np.concatenate([active, add])
        if active.size:
            cols_old = op.columns(active)
            cols_new = op.columns(add)
            G12 = cols_old.T @ cols_new
            G22 = cols_new.T @ cols_new
            L12 = solve_triangular(L, G12, lower=True, check_finite=False)
            L22 = _chol_block(G22 - L12.T @ L12, add, diag=np.diag(G22))
            m, a = active.size, add.size
            Lnew = np.zeros((m + a, m + a))
            Lnew[:m, :m] = L
            Lnew[m:, :m] = L12.T
            Lnew[m:, m:] = L22
            L = Lnew
        else:
            L = _chol_block(op.gram_restricted(add), add)
        active = new_active
    return CholeskyFactor(np.array(active, dtype=np.intp), L)


# --------------------------------------------------------------------------
# restricted solves


def conjugate_gradient(matvec, rhs, iters, x0=None, tol=0.0):
    """Run at most ``iters`` CG steps on an SPD system given by ``matvec``."""
    if iters < 1:
        raise ValueError("CG needs at least one iteration")
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float, copy=True)
    if rhs.size == 0:
        return x
    r = rhs - matvec(x)
    p = r.copy()
    rs = float(r @ r)
    stop = (tol * float(np.linalg.norm(rhs))) ** 2
    for _ in range(iters):
        if rs <= stop or rs == 0.0:
            break
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise RankDeficient("CG met a direction of non-positive curvature")
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def solve_restricted(op, A, rhs, method=None, cg_iters=2, warm_start=None, cg_tol=0.0):
    """Solve ``Psi_A^t Psi_A z = rhs``.

    ``method`` is ``"cholesky"`` or ``"cg"``; the default is Cholesky for
    explicit operators and CG otherwise.  For CG, ``warm_start`` is the
    starting iterate (zeros when omitted).
    """
    A = _as_index(A, op.p)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (A.size,):
        raise ValueError("rhs length must equal |A|")
    if method is None:
        method = "cholesky" if op.explicit else "cg"
    if A.size == 0:
        return np.zeros(0)
    if A.size > op.n:
        raise RankDeficient(f"|A|={A.size} exceeds n={op.n}")
    if method == "cholesky":
        return cholesky_factor(op, A).solve(rhs)
    if method == "cg":
        return conjugate_gradient(lambda v: op.gram_matvec(A, v), rhs, cg_iters, warm_start, cg_tol)
    raise ValueError(f"unknown method {method!r}")


class RestrictedSolver:
    """Stateful restricted solver reused across PDAS iterations.

    With ``method="cholesky"`` the last factor is kept and moved to the next
    active set by :func:`chol_update_downdate` when the sets overlap enough;
    otherwise it is refactored from scratch.  With ``method="cg"`` the caller
    supplies the warm start.
    """

    def __init__(self, op, method=None, cg_iters=2, cg_tol=0.0):
        self.op = op
        self.method = method or ("cholesky" if op.explicit else "cg")
        if self.method not in ("cholesky", "cg"):
            raise ValueError(f"unknown method {self.method!r}")
        self.cg_iters = cg_iters
        self.cg_tol = cg_tol
        self._factor = None

    def factor(self, A):
        A = _as_index(A, self.op.p)
        f = self._factor
        if f is not None and f.active.size:
            remove = np.setdiff1d(f.active, A)
            add = np.setdiff1d(A, f.active)
            changed = remove.size + add.size
            if changed == 0:
                return f
            if changed < max(1, A.size // 2):
                try:
                    f = chol_update_downdate(f, add, remove, self.op)
                except RankDeficient:
                    f = None
                if f is not None:
                    self._factor = f
                    return f
        self._factor = cholesky_factor(self.op, A)
        return self._factor

    def solve(self, A, rhs, warm_start=None):
        """Solve with ``rhs`` and the result ordered like ``A``."""
        A = _as_index(A, self.op.p)
        if A.size == 0:
            return np.zeros(0)
        if A.size > self.op.n:
            raise RankDeficient(f"|A|={A.size} exceeds n={self.op.n}")
        if self.method == "cg":
            return conjugate_gradient(
                lambda v: self.op.gram_matvec(A, v), rhs, self.cg_iters, warm_start, self.cg_tol
            )
        f = self.factor(A)
        # pos[i] is where f.active[i] sits in A
        sorter = np.argsort(A)
        pos = sorter[np.searchsorted(A, f.active, sorter=sorter)]
        out = np.empty(A.size)
        out[pos] = f.solve(np.asarray(rhs, dtype=float)[pos])
        return out


# --------------------------------------------------------------------------
# restricted isometry constants


def rip_constant_bruteforce(op, k, budget=10**6, chunk=4096):
    """Exact ``delta_k`` by enumerating all supports of size ``k``.

    ``delta_k = max_S max(lambda_max(G_S) - 1, 1 - lambda_min(G_S))``.
    """
    if not op.explicit:
        raise Unsupported("brute-force RIP needs an explicit operator")
    if k < 1 or k > op.p:
        raise ValueError("k must lie in [1, p]")
    count = math.comb(op.p, k)
    if count > budget:
        raise Unsupported(f"C({op.p},{k}) = {count} supports exceeds budget {budget}")
    G = op.gram_restricted(np.arange(op.p))
    delta = 0.0
    combos = itertools.combinations(range(op.p), k)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        sub = G[block[:, :, None], block[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        delta = max(delta, float(np.max(ev[:, -1] - 1.0)), float(np.max(1.0 - ev[:, 0])))
    return delta


# --------------------------------------------------------------------------
# serialization


def save_dense(op, path):
    """Write ``PDASCOP1``, ``n``, ``p`` (uint64 LE) and row-major float64 data."""
    M = np.ascontiguousarray(op.matrix, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(DENSE_MAGIC)
        fh.write(struct.pack("<QQ", op.n, op.p))
        fh.write(M.tobytes(order="C"))


def load_dense(path):
    data = Path(path).read_bytes()
    if data[:8] != DENSE_MAGIC:
        raise ValueError("not a PDASCOP1 operator file")
    n, p = struct.unpack("<QQ", data[8:24])
    body = np.frombuffer(data, dtype="<f8", offset=24)
    if body.size != n * p:
        raise ValueError(f"expected {n * p} values, found {body.size}")
    return DenseOperator(body.reshape(n, p), normalize=False)


def dct_descriptor(op):
    """Text form ``dct p=<p> rows=<comma list>`` (0-based rows)."""
    return f"dct p={op.p} rows={','.join(str(int(r)) for r in op.rows)}"


def parse_dct_descriptor(text):
    fields = text.strip().split()
    if not fields or fields[0] != "dct":
        raise ValueError("descriptor must start with 'dct'")
    kv = dict(f.split("=", 1) for f in fields[1:])
    try:
        p = int(kv["p"])
        rows = [int(r) for r in kv["rows"].split(",") if r]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed DCT descriptor: {text!r}") from exc
    return PartialDCTOperator(p, rows)
