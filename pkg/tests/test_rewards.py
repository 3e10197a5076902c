import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cmab_lowerbounds.rewards import (
    MODEL_NAMES,
    CenteredQuadratic,
    ExpQuadratic,
    Linear,
    PMCItem,
    PowerGradient,
    SumOfCopies,
    finite_diff_gradient,
    make_model,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def means(k_min=1, k_max=8):
    return st.integers(k_min, k_max).flatmap(lambda k: arrays(np.float64, k, elements=unit))


def test_pmc_gradient_example():
    np.testing.assert_allclose(PMCItem(2).gradient([0.3, 0.4]), [0.6, 0.7])


def test_exp_quadratic_value_example():
    assert ExpQuadratic(2).evaluate([0.5, 0.5]) == pytest.approx(1 - np.exp(-0.5), abs=1e-12)
    assert ExpQuadratic(2).evaluate([0.5, 0.5]) == pytest.approx(0.393469, abs=1e-6)


def test_linear_and_power_gradient():
    np.testing.assert_array_equal(Linear(3).gradient([0.1, 0.2, 0.9]), [1, 1, 1])
    np.testing.assert_array_equal(PowerGradient(4).gradient(np.zeros(4)), [8, 4, 2, 1])


def test_out_of_range_rejected():
    with pytest.raises(ValueError):
        Linear(2).evaluate([0.5, 1.01])
    with pytest.raises(ValueError):
        Linear(2).evaluate([0.5])
    with pytest.raises(ValueError):
        PMCItem(2).gradient([np.nan, 0.1])


def test_make_model_and_copies():
    assert set(MODEL_NAMES) >= {"linear", "pmc-item", "exp-quadratic", "power-gradient"}
    m = make_model("pmc-item", 2, copies=3)
    assert isinstance(m, SumOfCopies) and m.action_size == 6 and not m.symmetric
    mu = np.array([0.5, 0.0, 0.2, 0.1, 0.0, 0.0])
    assert m.evaluate(mu) == pytest.approx(0.5 + (1 - 0.8 * 0.9) + 0.0)
    with pytest.raises(ValueError):
        make_model("cubic", 3)


def test_flags():
    assert CenteredQuadratic(2).monotone is False
    assert PowerGradient(2).symmetric is False
    assert all(make_model(n, 3).monotone for n in ("linear", "pmc-item", "exp-quadratic", "power-gradient"))


def test_evaluate_batch_matches_scalar():
    rng = np.random.default_rng(0)
    for name in MODEL_NAMES:
        model = make_model(name, 4)
        batch = rng.uniform(size=(3, 5, 4))
        got = model.evaluate_batch(batch)
        want = np.array([[model.evaluate(x) for x in row] for row in batch])
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(MODEL_NAMES), mu=means())
def test_gradient_matches_finite_differences(name, mu):
    model = make_model(name, mu.size)
    g = model.gradient(mu)
    fd = finite_diff_gradient(model, mu)
    assert np.max(np.abs(g - fd)) <= 1e-5 * (1 + np.max(np.abs(g)))


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(("linear", "pmc-item", "exp-quadratic", "centered-quadratic")), mu=means(), data=st.data())
def test_symmetric_models_are_permutation_invariant(name, mu, data):
    model = make_model(name, mu.size)
    perm = np.array(data.draw(st.permutations(range(mu.size))))
    assert model.evaluate(mu[perm]) == pytest.approx(model.evaluate(mu), abs=1e-12)
    np.testing.assert_allclose(model.gradient(mu[perm]), model.gradient(mu)[perm], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(("linear", "pmc-item", "exp-quadratic", "power-gradient")), mu=means())
def test_monotone_models_have_nonnegative_gradient(name, mu):
    assert np.all(make_model(name, mu.size).gradient(mu) >= 0)


def test_finite_difference_at_boundary_stays_in_box():
    model = ExpQuadratic(3)
    mu = np.array([0.0, 1.0, 0.5])
    np.testing.assert_allclose(finite_diff_gradient(model, mu), model.gradient(mu), atol=1e-5)
