import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmab_lowerbounds.instance import (
    ConstructionError,
    CouplingDistribution,
    DisjointInstance,
    GapUnreachable,
    HorizonTooShort,
    bkl_build,
    bkl_inverse,
    build_dependent_instance,
    build_independent_instance,
    cumulative_gradient,
    epsilon_star,
    epsilon_star_matrix,
    f_ratio,
    gap_exact,
    horizon_threshold,
    kl_check,
    kl_exact,
    kl_quadratic_bound,
    outcome_probabilities,
    sample_round,
    tie_groups,
    validity_bound,
)
from cmab_lowerbounds.rewards import ExpQuadratic, Linear, PMCItem, make_model
from cmab_lowerbounds.smoothness import gini_modified

P = np.array([0.25, 0.5])


@st.composite
def thresholds(draw, n_max=8):
    n = draw(st.integers(1, n_max))
    raw = draw(st.lists(st.floats(1e-3, 1 - 1e-3), min_size=n, max_size=n, unique=True))
    p = np.sort(np.array(raw))
    if np.any(np.diff(p) <= 0):
        p = np.unique(p)
    return p


def test_cumulative_gradient_and_matrices():
    np.testing.assert_array_equal(cumulative_gradient(Linear(2), P), [2.0, 1.0])
    np.testing.assert_allclose(bkl_build(P), [[6, 2], [2, 6]])
    np.testing.assert_allclose(32 * bkl_inverse(P), [[6, -2], [-2, 6]])


def test_epsilon_star_example():
    c = np.array([2.0, 1.0])
    np.testing.assert_allclose(epsilon_star(P, c), [0.3125, 0.0625], atol=1e-15)
    np.testing.assert_allclose(epsilon_star_matrix(P, c), [0.3125, 0.0625], atol=1e-15)
    assert f_ratio(P, c, epsilon_star(P, c)) == pytest.approx(0.6875, abs=1e-12)


def test_validity_bound_examples():
    assert validity_bound(P) == pytest.approx(0.125)
    assert validity_bound([0.5]) == pytest.approx(0.25)


def test_kl_check_example():
    res = kl_check(P, [0.01, 0.01])
    assert res.applicable
    assert res.exact == pytest.approx(0.00080021, rel=1e-4)
    assert res.bound == pytest.approx(0.0032, rel=1e-12)


def test_thresholds_must_be_interior_and_increasing():
    for bad in ([0.0, 0.5], [0.5, 1.0], [0.5, 0.4]):
        with pytest.raises(ValueError):
            bkl_build(bad)


def test_outcome_probabilities_sum_to_one():
    probs = outcome_probabilities(P, [0.01, 0.02])
    assert probs.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        kl_exact(P, [0.3, 0.0])


def test_tie_groups():
    assert tie_groups([0.1, 0.5, 0.5, 0.7]) == [[0], [1, 2], [3]]


@settings(max_examples=300, deadline=None)
@given(p=thresholds(), data=st.data())
def test_kl_bounded_by_quadratic_form(p, data):
    b = validity_bound(p)
    eps = np.array(data.draw(st.lists(st.floats(-b, b), min_size=p.size, max_size=p.size)))
    assert kl_exact(p, eps) <= kl_quadratic_bound(p, eps) * (1 + 1e-12) + 1e-300


@settings(max_examples=300, deadline=None)
@given(p=thresholds(), data=st.data())
def test_closed_form_inverse_and_epsilon(p, data):
    c = np.array(data.draw(st.lists(st.floats(0.0, 5.0), min_size=p.size, max_size=p.size).filter(any)))
    np.testing.assert_allclose(bkl_build(p) @ bkl_inverse(p), np.eye(p.size), atol=1e-9)
    np.testing.assert_allclose(epsilon_star(p, c), epsilon_star_matrix(p, c), atol=1e-10)
    e = epsilon_star(p, c)
    if np.any(e != 0):
        assert f_ratio(p, c, e) == pytest.approx(float(c @ bkl_inverse(p) @ c), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(p=thresholds(), data=st.data())
def test_epsilon_star_maximizes_ratio(p, data):
    c = np.array(data.draw(st.lists(st.floats(0.1, 5.0), min_size=p.size, max_size=p.size)))
    other = np.array(data.draw(st.lists(st.floats(-1.0, 1.0), min_size=p.size, max_size=p.size)))
    best = f_ratio(p, c, epsilon_star(p, c))
    if np.any(other != 0):
        assert f_ratio(p, c, other) <= best * (1 + 1e-9)


def test_linear_gap_is_exactly_linear():
    eps = np.array([0.01, 0.003])
    assert gap_exact(Linear(2), P, eps) == pytest.approx(float(np.array([2, 1]) @ eps), abs=1e-15)


def _dependent_example():
    return build_dependent_instance(Linear(2), [0.25, 0.5], 0.01, 10)


def test_dependent_instance_example():
    inst = _dependent_example()
    assert inst.n_actions == 5
    assert inst.subset == ()
    assert inst.gap == pytest.approx(0.01, rel=1e-6)
    assert inst.bound_annotations["db_star"] == pytest.approx(25.78125, rel=1e-12)
    gaps = inst.action_gaps()
    assert gaps[inst.optimal_index] == 0.0
    np.testing.assert_allclose(np.delete(gaps, inst.optimal_index), 0.01, rtol=1e-6)


def test_actions_are_disjoint_outside_common_block():
    inst = build_dependent_instance(PMCItem(3), [0.5, 0.0, 0.0], 0.01, 12)
    assert inst.subset == (1, 2)
    assert inst.p == [0.5]
    free = [set(a[: inst.n_free]) for a in inst.actions]
    for i in range(len(free)):
        assert set(inst.actions[i][inst.n_free :]) == set(inst.common_arms)
        for j in range(i):
            assert not free[i] & free[j]
    assert len(inst.leftover_arms) == inst.m - len(inst.subset) - inst.n_actions * inst.n_free


def test_json_round_trip_is_exact():
    inst = _dependent_example()
    text = inst.to_json()
    back = DisjointInstance.from_json(text)
    assert back.to_json() == text
    assert back.fingerprint() == inst.fingerprint()
    data = json.loads(text)
    for key in ("m", "K", "I", "mu_common", "p", "epsilon", "actions", "optimal_index", "gap", "reward_name", "bound_annotations"):
        assert key in data


def test_dependent_preconditions():
    with pytest.raises(ConstructionError):
        build_dependent_instance(Linear(2), [0.25, 0.5], 0.01, 4)
    with pytest.raises(ConstructionError):
        build_dependent_instance(Linear(2), [0.25, 0.5], 0.0, 10)
    with pytest.raises(GapUnreachable) as info:
        build_dependent_instance(Linear(2), [0.25, 0.5], 0.5, 10)
    assert info.value.max_gap < 0.5


def test_boundary_means_are_rejected():
    with pytest.raises(ConstructionError):
        build_dependent_instance(Linear(2), [0.0, 1.0], 0.01, 10)


def test_non_symmetric_reward_rejected():
    with pytest.raises(ConstructionError):
        build_dependent_instance(make_model("power-gradient", 2), [0.25, 0.5], 0.01, 10)


def test_independent_instance_example():
    inst = build_independent_instance(Linear(2), [0.25, 0.5], 10, 10**6)
    notes = inst.bound_annotations
    expected_gap = np.sqrt(0.6875) / 8 * np.sqrt(8 / (2 * 10**6))
    assert notes["target_gap"] == pytest.approx(expected_gap, rel=1e-12)
    assert expected_gap == pytest.approx(2.073e-4, rel=1e-3)
    assert inst.gap == pytest.approx(expected_gap, rel=1e-6)
    assert notes["ib_star"] == pytest.approx(np.sqrt(0.6875) / 32 * np.sqrt(10**6 * 8 / 2), rel=1e-12)


def test_independent_horizon_threshold():
    mu = [0.01, 0.02]
    T0 = horizon_threshold(Linear(2), mu, 10)
    assert T0 > 1
    inst = build_independent_instance(Linear(2), mu, 10, T0)
    assert inst.gap <= inst.bound_annotations["max_certified_gap"]
    with pytest.raises(HorizonTooShort) as info:
        build_independent_instance(Linear(2), mu, 10, T0 - 1)
    assert info.value.min_horizon == T0
    with pytest.raises(ConstructionError):
        build_independent_instance(Linear(2), [0.25, 0.5], 5, 10**6)


def test_ties_share_one_threshold():
    inst = build_dependent_instance(Linear(3), [0.5, 0.5, 0.5], 0.1, 15)
    assert inst.groups == [[0, 1, 2]]
    assert inst.gap == pytest.approx(0.1, rel=1e-6)
    assert inst.bound_annotations["db_star"] == pytest.approx((15 - 6) * 3 / (32 * 0.1), rel=1e-12)


def test_nonlinear_instance_hits_gap():
    inst = build_dependent_instance(ExpQuadratic(3), [0.2, 0.4, 0.6], 1e-3, 10)
    assert inst.gap == pytest.approx(1e-3, rel=1e-6)
    modified = inst.bound_annotations["gini_modified"]
    assert modified == pytest.approx(gini_modified(ExpQuadratic(3), [0.2, 0.4, 0.6], inst.subset))


def test_staircase_marginals_and_support():
    rng = np.random.default_rng(7)
    law = CouplingDistribution(np.array([0.2, 0.5, 0.9]))
    draws = law.sample(rng, 200_000)
    np.testing.assert_allclose(draws.mean(axis=0), [0.2, 0.5, 0.9], atol=5e-3)
    # every draw is a run of zeros followed by ones
    assert np.all(np.diff(draws, axis=1) >= 0)


def test_sample_round_marginals():
    inst = _dependent_example()
    rng = np.random.default_rng(11)
    arms = inst.actions[1]
    counts = np.zeros(len(arms))
    for _ in range(20_000):
        obs = sample_round(inst, rng, 1)
        counts += [obs[a] for a in arms]
    np.testing.assert_allclose(counts / 20_000, inst.action_means(1), atol=0.015)
    with pytest.raises(ValueError):
        sample_round(inst, rng, inst.n_actions)
