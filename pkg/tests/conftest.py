import contextlib
import time

import numpy as np
import pytest

from pdasc import DenseOperator, ExperimentSpec, make_instance

# criterion id -> list of (ok, detail), filled by test_acceptance.py
_ACCEPTANCE = {}


@contextlib.contextmanager
def _record(cid, label):
    t0 = time.perf_counter()
    entry = {"label": label, "ok": False, "detail": ""}
    _ACCEPTANCE.setdefault(cid, []).append(entry)
    try:
        yield entry
    except BaseException as exc:
        if not entry["detail"]:
            entry["detail"] = f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        raise
    else:
        entry["ok"] = True
    finally:
        entry["detail"] += f" [{time.perf_counter() - t0:.1f}s]"


@pytest.fixture
def criterion():
    """``with criterion("4b", "label") as rec:`` records PASS/FAIL for the summary."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_ACCEPTANCE, key=lambda c: (int(c.rstrip("abcdefgh")), c)):
        entries = _ACCEPTANCE[cid]
        ok = all(e["ok"] for e in entries)
        parts = "; ".join(f"{e['label']}: {'ok' if e['ok'] else 'FAILED'} {e['detail'].strip()}" for e in entries)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {cid}: {parts}")


@pytest.fixture
def identity2():
    return DenseOperator(np.eye(2)), np.array([3.0, 0.5])


def gaussian_instance(n, p, T, sigma=0.0, seed=0, dyna=10.0):
    spec = ExperimentSpec(ensemble="gaussian", n=n, p=p, T=T, sigma=sigma, seed=seed, dyna=dyna)
    return make_instance(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
