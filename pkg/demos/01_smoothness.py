"""Gini-weighted smoothness of a few rewards, and which common subset maximizes it."""
import numpy as np

from cmab_lowerbounds.rewards import Linear, PMCItem, make_model
from cmab_lowerbounds.smoothness import gini_l1, gini_l2, gini_modified, maximize_over_subsets, variance_form

# two linear arms at (1/4, 1/2): the modified measure sits between L2 and L1
r, mu = Linear(2), [0.25, 0.5]
print("l2", gini_l2(r, mu), "l1", gini_l1(r, mu), "modified", gini_modified(r, mu))
print("variance form agrees:", variance_form(r, mu))

# raw versus per-arm objective on three arms at 1/2
print(maximize_over_subsets("modified", "raw", Linear(3), [0.5] * 3))
print(maximize_over_subsets("modified", "per-arm", Linear(3), [0.5] * 3))

# a coverage item that is already covered w.p. 1/2 by arm 0 and nothing else:
# the best choice is to keep arms 1..3 common and perturb arm 0 alone
print(maximize_over_subsets("modified", "per-arm", PMCItem(4), [0.5, 0, 0, 0]))

# prefix search is exact for L1 per-arm, and much cheaper at larger K
rng = np.random.default_rng(0)
mu = rng.uniform(size=14)
r = make_model("exp-quadratic", 14)
print("brute ", maximize_over_subsets("l1", "per-arm", r, mu)[1])
print("prefix", maximize_over_subsets("l1", "per-arm", r, mu, method="prefix")[1])
