"""Lower-bound values and how they scale."""
import numpy as np

from cmab_lowerbounds.bounds import dependent_bound, exp_quadratic_scan, independent_bound, sum_copies_bound
from cmab_lowerbounds.rewards import Linear, PMCItem

# linear, all means 1/2: (m - 2K) K / (32 gap)
for K in (2, 4, 8):
    m = 10 * K
    print(K, dependent_bound(Linear(K), [0.5] * K, m, 0.01).value, (m - 2 * K) * K / (32 * 0.01))

# independent: sqrt(T K (m - K)) / 64 for the same family
print(independent_bound(Linear(2), [0.5, 0.5], 10, 10**4).value)

# coverage item, then M copies of it
base = dependent_bound(PMCItem(3), [0.5, 0, 0], 30, 0.05)
for M in (1, 2, 4, 8):
    print(M, sum_copies_bound(base, M).value / base.value)

# the exp-quadratic scan: best gamma^2/N over a uniform mean p0
scan = exp_quadratic_scan()
for row in scan.rows():
    print(row)
print("slope over N = 1..64:", scan.slope)

# the fit is still bending at small N; the -1/2 rate shows up further out
far = exp_quadratic_scan((256, 1024, 4096, 16384), np.geomspace(1e-3, 0.2, 600))
print("slope over N = 256..16384:", far.slope)
