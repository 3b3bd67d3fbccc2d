"""Synthetic sparse-recovery experiments.

Random draws use NumPy's PCG64 generator through
:func:`numpy.random.default_rng`.  A replication ``r`` of a spec with master
seed ``s`` uses ``SeedSequence(s ^ r)``, split into three child streams for
the signal, the sensing matrix and the noise.  Changing any of this changes
every golden value in the test suite.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from dataclasses import dataclass

import numpy as np

from .continuation import ContinuationConfig, debias, pdasc_solve
from .exceptions import RankDeficient
from .operators import DenseOperator, PartialDCTOperator

__all__ = [
    "ENSEMBLES",
    "ExperimentSpec",
    "MetricsRow",
    "ExperimentResult",
    "gen_sparse_signal",
    "gen_sensing_matrix",
    "add_noise",
    "compute_metrics",
    "make_instance",
    "run_replication",
    "run_experiment",
    "write_metrics_csv",
    "read_metrics_csv",
    "REFERENCE_SETTINGS",
]

ENSEMBLES = ("gaussian", "bernoulli", "partial_dct")

PSNR_CAP = 999.0


def gen_sparse_signal(p, T, dyna, seed):
    """``T``-sparse vector with magnitudes log-uniform on ``[1, dyna]``.

    For ``T >= 2`` one entry has magnitude exactly 1 and another exactly
    ``dyna``, so the realized dynamic range is ``dyna``.  Signs are uniform.
    """
    if not 0 <= T <= p:
        raise ValueError("need 0 <= T <= p")
    if dyna < 1:
        raise ValueError("dynamic range must be >= 1")
    rng = np.random.default_rng(seed)
    support = rng.choice(p, size=T, replace=False)
    mags = 10.0 ** (math.log10(dyna) * rng.uniform(size=T))
    if T >= 2:
        mags[0], mags[1] = 1.0, float(dyna)
    elif T == 1:
        mags[0] = 1.0
    signs = rng.choice([-1.0, 1.0], size=T)
    x = np.zeros(p)
    x[support] = signs * mags
    return x


def gen_sensing_matrix(ensemble, n, p, seed):
    if not 0 < n < p:
        raise ValueError("need 0 < n < p")
    rng = np.random.default_rng(seed)
    if ensemble == "gaussian":
        return DenseOperator(rng.standard_normal((n, p)))
    if ensemble == "bernoulli":
        return DenseOperator(rng.choice([-1.0, 1.0], size=(n, p)) / math.sqrt(n), normalize=False)
    if ensemble == "partial_dct":
        return PartialDCTOperator(p, rng.choice(p, size=n, replace=False))
    raise ValueError(f"unknown ensemble {ensemble!r}; expected one of {ENSEMBLES}")


def add_noise(y_clean, sigma, seed):
    """Return ``(y_clean + eta, ||eta||)`` with ``eta_i ~ N(0, sigma^2)``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    y_clean = np.asarray(y_clean, dtype=float)
    if sigma == 0:
        return y_clean.copy(), 0.0
    eta = sigma * np.random.default_rng(seed).standard_normal(y_clean.shape)
    return y_clean + eta, float(np.linalg.norm(eta))


@dataclass
class ExperimentSpec:
    ensemble: str = "gaussian"
    n: int = 64
    p: int = 256
    T: int = 4
    dyna: float = 10.0
    sigma: float = 0.0
    seed: int = 0
    rule: str = "mdp"
    replications: int = 1
    #: overrides the realized noise norm as the discrepancy level
    epsilon: float | None = None
    J: int = 1
    N: int = 100
    rho: float | None = None
    lambda_max: float | None = None
    lambda_min: float | None = None
    eta: float = 0.5
    cg_iters: int = 2

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if not self.T < self.n < self.p:
            raise ValueError("need T < n < p")
        if self.dyna < 1:
            raise ValueError("dyna must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def continuation_config(self, epsilon):
        return ContinuationConfig(
            lambda_max=self.lambda_max,
            lambda_min=self.lambda_min,
            N=self.N if self.rho is None else None,
            rho=self.rho,
            J=self.J,
            rule=self.rule,
            epsilon=epsilon if self.rule in ("mdp", "dp") else None,
            eta=self.eta,
            cg_iters=self.cg_iters,
        )


@dataclass
class MetricsRow:
    time_seconds: float
    l2_re: float
    linf_ae: float
    l2_dre: float
    linf_dae: float
    set_extra: float
    set_missed: float
    lambda_hat: float
    psnr: float
    failed: bool = False

    @classmethod
    def failure(cls, elapsed=float("nan")):
        nan = float("nan")
        return cls(elapsed, nan, nan, nan, nan, nan, nan, nan, nan, True)


METRIC_FIELDS = tuple(f.name for f in dataclasses.fields(MetricsRow))


def _psnr(x_hat, x_true):
    rmse = math.sqrt(float(np.mean((x_hat - x_true) ** 2)))
    if rmse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 20.0 * math.log10(float(np.max(np.abs(x_true))) / rmse))


def compute_metrics(x_hat, x_debiased, x_true, lambda_hat, elapsed):
    x_hat = np.asarray(x_hat, dtype=float)
    x_debiased = np.asarray(x_debiased, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if not x_hat.shape == x_debiased.shape == x_true.shape:
        raise ValueError("dimension mismatch")
    tn = float(np.linalg.norm(x_true))
    if tn == 0.0:
        raise ValueError("relative errors are undefined for a zero true signal")
    a_hat = set(np.flatnonzero(x_hat).tolist())
    a_true = set(np.flatnonzero(x_true).tolist())
    return MetricsRow(
        time_seconds=float(elapsed),
        l2_re=float(np.linalg.norm(x_hat - x_true)) / tn,
        linf_ae=float(np.max(np.abs(x_hat - x_true))),
        l2_dre=float(np.linalg.norm(x_debiased - x_true)) / tn,
        linf_dae=float(np.max(np.abs(x_debiased - x_true))),
        set_extra=len(a_hat - a_true),
        set_missed=len(a_true - a_hat),
        lambda_hat=float(lambda_hat),
        psnr=_psnr(x_hat, x_true),
    )


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list
    aggregate: MetricsRow
    failures: int


def make_instance(spec, replication=0, op=None):
    """Draw ``(op, x_true, y, epsilon)`` for one replication of ``spec``.

    A given ``op`` replaces the random sensing matrix; the signal and noise
    draws are unchanged.
    """
    ss = np.random.SeedSequence(int(spec.seed) ^ int(replication))
    s_sig, s_mat, s_noise = ss.spawn(3)
    x_true = gen_sparse_signal(spec.p, spec.T, spec.dyna, s_sig)
    if op is None:
        op = gen_sensing_matrix(spec.ensemble, spec.n, spec.p, s_mat)
    elif op.shape != (spec.n, spec.p):
        raise ValueError(f"operator shape {op.shape} does not match n={spec.n}, p={spec.p}")
    y, eps = add_noise(op.apply(x_true), spec.sigma, s_noise)
    if spec.epsilon is not None:
        eps = spec.epsilon
    return op, x_true, y, eps


def run_replication(spec, replication, op=None):
    op, x_true, y, eps = make_instance(spec, replication, op)
    if op.explicit:
        # Gram precomputation is not part of the timed solve
        op.precompute_gram()
    t0 = time.perf_counter()
    path = pdasc_solve(op, y, spec.continuation_config(eps))
    if path.failed:
        return MetricsRow.failure(time.perf_counter() - t0)
    step = path.steps[path.selected]
    x_hat = path.selected_x
    if spec.rule == "mdp":
        x_deb = x_hat
    else:
        try:
            x_deb = debias(op, y, step.x, step.d, step.active)
        except RankDeficient:
            x_deb = np.full(op.p, np.nan)
    elapsed = time.perf_counter() - t0
    return compute_metrics(x_hat, x_deb, x_true, path.lambda_hat, elapsed)


def _aggregate(rows):
    ok = [r for r in rows if not r.failed]
    failures = len(rows) - len(ok)
    if not ok:
        agg = MetricsRow.failure(float(np.mean([r.time_seconds for r in rows])))
        return agg, failures
    vals = {
        f: float(np.mean([getattr(r, f) for r in ok])) for f in METRIC_FIELDS if f != "failed"
    }
    # a setting counts as failed when at least half of its draws fail
    return MetricsRow(**vals, failed=2 * failures >= len(rows)), failures


def run_experiment(spec):
    """Run every replication of ``spec`` and average the successful ones."""
    rows = [run_replication(spec, r) for r in range(spec.replications)]
    agg, failures = _aggregate(rows)
    return ExperimentResult(spec, rows, agg, failures)


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_metrics_csv(result, fh):
    """One row per replication, then the aggregate row; columns are the metric fields."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(METRIC_FIELDS)
    for r in [*result.rows, result.aggregate]:
        w.writerow([_fmt(getattr(r, f)) for f in METRIC_FIELDS])


def read_metrics_csv(fh):
    rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        vals = {f: float(r[f]) for f in METRIC_FIELDS if f != "failed"}
        out.append(MetricsRow(**vals, failed=bool(int(r["failed"]))))
    return out


#: the nine settings of the selection-rule comparison: (label, ensemble, n, p, T, sigma)
REFERENCE_SETTINGS = (
    ("partial_dct sigma=1e-4 T=32", "partial_dct", 512, 2048, 32, 1e-4),
    ("partial_dct sigma=1e-2 T=64", "partial_dct", 512, 2048, 64, 1e-2),
    ("partial_dct sigma=5e-2 T=80", "partial_dct", 512, 2048, 80, 5e-2),
    ("gaussian sigma=1e-4 T=16", "gaussian", 256, 1024, 16, 1e-4),
    ("gaussian sigma=1e-2 T=32", "gaussian", 256, 1024, 32, 1e-2),
    ("gaussian sigma=5e-2 T=40", "gaussian", 256, 1024, 40, 5e-2),
    ("bernoulli sigma=1e-3 T=10", "bernoulli", 200, 1000, 10, 1e-3),
    ("bernoulli sigma=1e-2 T=25", "bernoulli", 200, 1000, 25, 1e-2),
    ("bernoulli sigma=1e-1 T=40", "bernoulli", 200, 1000, 40, 1e-1),
)
