"""Print the continuation path and watch the active set grow.

Each row is one lambda on the geometric grid.  With up to five PDAS steps
per lambda the active set grows one spike at a time, sits on the true
support over a long stretch of the grid, and only then starts fitting
noise.  With a single step per lambda the set overshoots while it catches
up, which is shown at the end for comparison.
"""

import numpy as np

from pdasc import ContinuationConfig, ExperimentSpec, make_instance, pdasc_solve

spec = ExperimentSpec(ensemble="gaussian", n=64, p=256, T=6, dyna=10.0, sigma=1e-3, seed=1)
op, x_true, y, eps = make_instance(spec)

path = pdasc_solve(op, y, ContinuationConfig(rule="bic", N=60, J=5))
truth = set(np.flatnonzero(x_true))

print(f"{'step':>4} {'lambda':>10} {'|A|':>4} {'hits':>4} {'iters':>5} {'resid':>10} {'bic':>9}")
for s, step in enumerate(path.steps):
    hits = len(truth & set(step.active.tolist()))
    mark = "  <- BIC" if s == path.selected else ""
    print(
        f"{s:4d} {step.lam:10.3e} {step.active_size:4d} {hits:4d} {step.pdas_iters:5d} "
        f"{step.residual_norm:10.3e} {step.bic:9.2f}{mark}"
    )

if path.hit_cap:
    print("path stopped when the active set reached half the number of rows")

fast = pdasc_solve(op, y, ContinuationConfig(rule="bic", N=60, J=1))
print("active sizes with J=1:", [st.active_size for st in fast.steps])
