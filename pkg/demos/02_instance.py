"""Build a hard I-disjoint instance and look inside it."""
import numpy as np

from cmab_lowerbounds.instance import (
    bkl_build,
    bkl_inverse,
    build_dependent_instance,
    cumulative_gradient,
    epsilon_star,
    f_ratio,
    kl_check,
)
from cmab_lowerbounds.rewards import Linear

p = np.array([0.25, 0.5])
c = cumulative_gradient(Linear(2), p)
print("c =", c)
print("B =\n", bkl_build(p))
print("32 B^-1 =\n", 32 * bkl_inverse(p))

# the best perturbation direction, and the ratio it attains
eps = epsilon_star(p, c)
print("eps* =", eps, " ratio =", f_ratio(p, c, eps))

# the quadratic form really does dominate the KL divergence
print(kl_check(p, [0.01, 0.01]))

inst = build_dependent_instance(Linear(2), [0.25, 0.5], 0.01, m=10)
print(inst.n_actions, "actions, gap", inst.gap)
print("per-action gaps", inst.action_gaps())
print("DB* =", inst.bound_annotations["db_star"])
print(inst.to_json(indent=1)[:400], "...")
