"""Brute-force restricted isometry constants of a tiny Gaussian matrix.

The recovery guarantee asks for delta_{T+1} <= 1/(4 sqrt(T) + 1).  Even for
T = 1 this is 0.2, and the Welch bound shows that no 6 x 12 matrix with unit
columns gets there: some pair of columns always has coherence at least
sqrt((p - n) / (n (p - 1))) = 0.30.
"""

import math

from pdasc import gen_sensing_matrix, rip_constant_bruteforce

n, p = 6, 12
welch = math.sqrt((p - n) / (n * (p - 1)))
print(f"Welch lower bound on delta_2 for {n} x {p}: {welch:.4f}")

for seed in range(5):
    op = gen_sensing_matrix("gaussian", n, p, seed)
    deltas = [rip_constant_bruteforce(op, k) for k in (1, 2, 3)]
    print(f"seed {seed}: " + "  ".join(f"delta_{k}={d:.3f}" for k, d in enumerate(deltas, 1)))

print(f"needed for T=1: delta_2 <= {1 / 5:.3f}")
