"""Run the baselines on a built instance and compare with DB* ln T."""
from cmab_lowerbounds.instance import build_dependent_instance
from cmab_lowerbounds.rewards import Linear
from cmab_lowerbounds.sim import STRATEGIES, bound_from_instance, compare_to_bound, round_robin_regret, run_episodes

inst = build_dependent_instance(Linear(3), [0.5, 0.5, 0.5], 0.1, m=15)
bound = bound_from_instance(inst)
T = 20_000

print("actions", inst.n_actions, "gap", inst.gap, "DB*", bound.value)
for name in STRATEGIES:
    traces = run_episodes(inst, name, T, range(10))
    cmp = compare_to_bound(traces, bound)
    print(f"{name:15s} mean {cmp.mean:9.2f} +- {cmp.stderr:6.2f}  ratio {cmp.ratio:7.2f}  {cmp.flag}")

print("round-robin closed form", round_robin_regret(T, inst.n_actions, inst.gap))

# one curve, for plotting elsewhere
tr = run_episodes(inst, "cucb", T, [0])[0]
for t, r in zip(tr.t, tr.cumulative_regret):
    print(t, round(r, 3))
