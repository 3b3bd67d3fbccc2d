import io
import math

import numpy as np
import pytest

from pdasc import (
    ExperimentSpec,
    add_noise,
    compute_metrics,
    gen_sensing_matrix,
    gen_sparse_signal,
    make_instance,
    run_experiment,
)
from pdasc.bench import METRIC_FIELDS, PSNR_CAP, read_metrics_csv, write_metrics_csv


def _ratio(x):
    m = np.abs(x[x != 0])
    return m.max() / m.min()


def test_signal_examples():
    x = gen_sparse_signal(10, 1, 1.0, seed=0)
    assert np.count_nonzero(x) == 1 and np.abs(x).max() == 1.0
    x = gen_sparse_signal(50, 2, 1e3, seed=1)
    assert _ratio(x) == 1e3
    x = gen_sparse_signal(1000, 40, 1e2, seed=2)
    assert np.count_nonzero(x) == 40 and _ratio(x) == pytest.approx(1e2, rel=1e-15)
    assert np.array_equal(x, gen_sparse_signal(1000, 40, 1e2, seed=2))
    assert set(np.sign(x[x != 0])) == {-1.0, 1.0}


def test_signal_rejects_bad_input():
    with pytest.raises(ValueError):
        gen_sparse_signal(5, 6, 10.0, 0)
    with pytest.raises(ValueError):
        gen_sparse_signal(5, 2, 0.5, 0)


def test_matrix_ensembles():
    b = gen_sensing_matrix("bernoulli", 4, 8, 0)
    assert np.allclose(np.linalg.norm(b.to_dense(), axis=0), 1.0, atol=1e-15)
    assert set(np.abs(b.to_dense()).ravel().round(15)) == {round(0.5, 15)}
    g = gen_sensing_matrix("gaussian", 20, 50, 1)
    assert np.allclose(np.linalg.norm(g.to_dense(), axis=0), 1.0, atol=1e-12)
    d = gen_sensing_matrix("partial_dct", 16, 64, 2)
    assert not d.explicit
    x = np.random.default_rng(0).standard_normal(64)
    assert np.allclose(d.apply(x), d.to_dense() @ x, atol=1e-10)
    with pytest.raises(ValueError):
        gen_sensing_matrix("gaussian", 8, 8, 0)
    with pytest.raises(ValueError):
        gen_sensing_matrix("fourier", 4, 8, 0)


def test_add_noise():
    y = np.arange(5.0)
    out, eps = add_noise(y, 0.0, 0)
    assert np.array_equal(out, y) and eps == 0.0
    out, eps = add_noise(y, 0.3, 1)
    assert eps == pytest.approx(np.linalg.norm(out - y), rel=1e-15)
    out, eps = add_noise(np.zeros(10**4), 1e-2, 2)
    assert 0.95 <= eps / (1e-2 * 100) <= 1.05
    with pytest.raises(ValueError):
        add_noise(y, -1.0, 0)


def test_metrics_examples():
    x = np.array([0.0, 2.0, 0.0, -1.0])
    m = compute_metrics(x, x, x, 0.5, 0.1)
    assert m.l2_re == 0 and m.linf_ae == 0 and m.set_extra == 0 and m.set_missed == 0
    assert m.psnr == PSNR_CAP
    m = compute_metrics(np.zeros(4), np.zeros(4), x, 0.5, 0.1)
    assert m.l2_re == 1.0 and m.set_missed == 2
    xh = np.array([0.1, 2.5, 0.0, 0.0])
    m = compute_metrics(xh, x, x, 0.5, 0.1)
    assert m.l2_re == pytest.approx(math.sqrt(0.01 + 0.25 + 1) / math.sqrt(5))
    assert m.linf_ae == pytest.approx(1.0)
    assert m.set_extra == 1 and m.set_missed == 1
    assert m.psnr == pytest.approx(20 * math.log10(2.0 / math.sqrt(1.26 / 4)))
    with pytest.raises(ValueError):
        compute_metrics(x, x, np.zeros(4), 0.5, 0.1)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(n=10, p=8)
    with pytest.raises(ValueError):
        ExperimentSpec(n=10, p=20, T=10)
    with pytest.raises(ValueError):
        ExperimentSpec(ensemble="dft")


def test_replication_seeds_are_distinct():
    spec = ExperimentSpec(n=16, p=32, T=2, sigma=1e-2, seed=5)
    a = make_instance(spec, 0)
    b = make_instance(spec, 1)
    assert not np.array_equal(a[1], b[1])
    again = make_instance(spec, 1)
    assert np.array_equal(b[3], again[3]) and np.array_equal(b[2], again[2])


def test_single_replication_aggregate():
    res = run_experiment(ExperimentSpec(n=32, p=64, T=3, seed=1, epsilon=1e-10))
    assert res.failures == 0 and len(res.rows) == 1
    for f in METRIC_FIELDS:
        assert getattr(res.aggregate, f) == getattr(res.rows[0], f)


def test_determinism_and_csv_round_trip():
    spec = ExperimentSpec(n=32, p=96, T=3, sigma=1e-3, seed=11, replications=3)
    a, b = run_experiment(spec), run_experiment(spec)
    for ra, rb in zip(a.rows, b.rows):
        for f in METRIC_FIELDS:
            if f != "time_seconds":
                assert getattr(ra, f) == getattr(rb, f)
    buf = io.StringIO()
    write_metrics_csv(a, buf)
    assert buf.getvalue().split("\n")[0] == ",".join(METRIC_FIELDS)
    back = read_metrics_csv(io.StringIO(buf.getvalue()))
    assert len(back) == 4
    for orig, parsed in zip([*a.rows, a.aggregate], back):
        assert orig == parsed


def test_failure_rows_are_recorded():
    spec = ExperimentSpec(n=64, p=256, T=20, sigma=5e-2, seed=3, rule="dp", replications=2, eta=0.5)
    res = run_experiment(spec)
    assert res.failures == 2 and res.aggregate.failed
    assert all(r.failed and math.isnan(r.l2_re) for r in res.rows)


def test_noise_free_exact_recovery():
    # n >= max(4 T ln p, 2T + 2)
    T, p = 4, 256
    n = int(math.ceil(max(4 * T * math.log(p), 2 * T + 2)))
    ok = 0
    for seed in range(100):
        spec = ExperimentSpec(n=n, p=p, T=T, seed=seed, rule="mdp", epsilon=1e-10)
        row = run_experiment(spec).rows[0]
        ok += (not row.failed) and row.set_extra == 0 and row.set_missed == 0
    assert ok >= 95


def test_debias_never_hurts_when_support_covered():
    for seed in range(10):
        spec = ExperimentSpec(n=64, p=256, T=5, sigma=1e-2, seed=seed, rule="bic")
        row = run_experiment(spec).rows[0]
        if row.set_missed == 0:
            assert row.l2_dre <= row.l2_re


def _low_noise_row(J=1):
    spec = ExperimentSpec(
        ensemble="gaussian", n=256, p=1024, T=16, sigma=1e-4, seed=2013, rule="mdp", replications=10, J=J
    )
    return run_experiment(spec)


def _clean(res):
    return sum(r.set_extra == 0 and r.set_missed == 0 and r.l2_re <= 1e-3 for r in res.rows)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="with J=1 a few transient false positives survive to the MDP step")
def test_low_noise_row_exact_support_default_J():
    assert _clean(_low_noise_row()) >= 9


@pytest.mark.slow
def test_low_noise_row_exact_support_two_inner_steps():
    res = _low_noise_row(J=2)
    assert _clean(res) >= 9
    assert all(r.set_missed == 0 and r.l2_re <= 1e-3 for r in _low_noise_row().rows)
