import io
import math

import numpy as np
import pytest

from cmab_lowerbounds.bounds import BoundReport
from cmab_lowerbounds.instance import build_dependent_instance
from cmab_lowerbounds.rewards import Linear, make_model
from cmab_lowerbounds.sim import (
    ArmStats,
    bound_from_instance,
    checkpoints,
    compare_to_bound,
    make_strategy,
    round_robin_regret,
    run_episode,
    run_episodes,
    strategy_step,
    write_traces_csv,
)


@pytest.fixture(scope="module")
def inst():
    return build_dependent_instance(Linear(2), [0.25, 0.5], 0.05, 10)


@pytest.fixture(scope="module")
def wide_gap():
    # one free arm, three actions, a large gap: round-robin regret dwarfs the bound
    return build_dependent_instance(Linear(1), [0.5], 0.2, 3)


def test_checkpoints():
    np.testing.assert_array_equal(checkpoints(1), [1])
    np.testing.assert_array_equal(checkpoints(8), [1, 2, 4, 8])
    np.testing.assert_array_equal(checkpoints(10), [1, 2, 4, 8, 10])


def test_oracle_has_zero_regret(inst):
    traces = run_episodes(inst, "oracle", 3000, range(10))
    assert all(np.all(tr.cumulative_regret == 0.0) for tr in traces)
    cmp = compare_to_bound(traces, bound_from_instance(inst))
    assert cmp.ratio == 0.0 and cmp.flag == "degenerate"


@pytest.mark.parametrize("T", [1, 4, 5, 1000, 1003])
def test_round_robin_matches_closed_form(inst, T):
    tr = run_episode(inst, "round-robin", T, 0)
    expected = round_robin_regret(T, inst.n_actions, inst.gap, inst.optimal_index)
    assert tr.final == pytest.approx(expected, rel=1e-6)
    cyclic = inst.gap * T * (inst.n_actions - 1) / inst.n_actions
    assert abs(tr.final - cyclic) <= inst.gap * (1 + 1e-6)


def test_round_robin_flagged_high(wide_gap):
    traces = run_episodes(wide_gap, "round-robin", 5000, range(10))
    assert compare_to_bound(traces, bound_from_instance(wide_gap)).flag == "high"


@pytest.mark.parametrize("strategy", ["round-robin", "epsilon-greedy", "cucb", "bcucb"])
def test_regret_monotone_and_bounded(inst, strategy):
    for tr in run_episodes(inst, strategy, 2000, range(3)):
        assert np.all(np.diff(tr.cumulative_regret) >= -1e-12)
        assert np.all(tr.cumulative_regret <= tr.t * inst.gap * (1 + 1e-6))


def test_determinism_and_batch_independence(inst):
    a = run_episodes(inst, "cucb", 1500, [3, 9, 4])
    b = run_episodes(inst, "cucb", 1500, [4])
    c = run_episodes(inst, "cucb", 1500, [3, 9, 4])
    np.testing.assert_array_equal(a[2].cumulative_regret, b[0].cumulative_regret)
    out_a, out_c = io.StringIO(), io.StringIO()
    write_traces_csv(a, out_a)
    write_traces_csv(c, out_c)
    assert out_a.getvalue() == out_c.getvalue()
    assert out_a.getvalue().splitlines()[0] == "seed,t,cumulative_regret"


def test_round_robin_means_concentrate(inst):
    T = 20_000
    truth = inst.arm_means()
    for tr in run_episodes(inst, "round-robin", T, range(20)):
        used = tr.arm_counts > 0
        err = np.abs(tr.arm_means[used] - truth[: used.size][used])
        assert np.all(err <= 4 * np.sqrt(math.log(T) / tr.arm_counts[used]))


def test_strategy_errors(inst):
    with pytest.raises(ValueError):
        make_strategy("thompson", inst)
    nonmono = build_dependent_instance(make_model("centered-quadratic", 2), [0.1, 0.3], 0.001, 10)
    with pytest.raises(ValueError):
        make_strategy("cucb", nonmono)
    run_episode(nonmono, "round-robin", 50, 0)


def test_strategy_step_forced_init_and_ties(inst):
    strategy = make_strategy("cucb", inst)
    stats = ArmStats.zeros(2, inst.m)
    for t in range(1, inst.n_actions + 1):
        np.testing.assert_array_equal(strategy_step(strategy, stats, t), [t - 1, t - 1])
    stats.counts[:] = 10
    stats.sums[:] = 5.0
    np.testing.assert_array_equal(strategy_step(strategy, stats, inst.n_actions + 1), [0, 0])


def test_strategy_step_picks_dominant_action():
    two = build_dependent_instance(Linear(1), [0.5], 0.1, 3)
    strategy = make_strategy("cucb", two)
    stats = ArmStats.zeros(1, two.m)
    stats.counts[:] = 100
    stats.sums[:] = 40.0
    arm = two.actions[1][0]
    stats.sums[0, arm] = 60.0
    assert strategy_step(strategy, stats, 50)[0] == 1


def test_compare_checks(inst, wide_gap):
    traces = run_episodes(inst, "round-robin", 100, range(10))
    with pytest.raises(ValueError):
        compare_to_bound(traces[:9], bound_from_instance(inst))
    with pytest.raises(ValueError):
        compare_to_bound(traces, bound_from_instance(wide_gap))
    bare = BoundReport("dependent", 1.0, None, {})
    assert compare_to_bound(traces, bare).n_seeds == 10


def test_horizon_must_be_positive(inst):
    with pytest.raises(ValueError):
        run_episode(inst, "cucb", 0, 0)
