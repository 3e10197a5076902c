import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cmab_lowerbounds.bounds import dependent_bound, exp_quadratic_scan, independent_bound, sum_copies_bound
from cmab_lowerbounds.rewards import Linear, PMCItem, make_model

HALF = [0.5, 0.5]


def test_dependent_example():
    report = dependent_bound(Linear(2), HALF, 10, 0.01)
    assert report.value == pytest.approx(37.5, rel=1e-12)
    assert report.maximizing_subset.indices == ()
    assert not report.degenerate


def test_dependent_degenerate_when_m_small():
    report = dependent_bound(Linear(2), HALF, 4, 0.01)
    assert report.value == 0.0 and report.degenerate


def test_independent_example():
    assert independent_bound(Linear(2), HALF, 10, 10**4).value == pytest.approx(6.25, rel=1e-12)
    with pytest.raises(ValueError):
        independent_bound(Linear(2), HALF, 5, 10**4)


def test_scalings():
    r = Linear(3)
    mu = [0.2, 0.5, 0.7]
    dep = dependent_bound(r, mu, 30, 0.02).value
    assert dependent_bound(r, mu, 30, 0.08).value == pytest.approx(dep / 4, rel=1e-12)
    ind = independent_bound(r, mu, 30, 1000).value
    assert independent_bound(r, mu, 30, 4000).value == pytest.approx(2 * ind, rel=1e-12)


@pytest.mark.parametrize("K", [1, 2, 3, 5, 8])
def test_linear_half_closed_forms(K):
    mu = [0.5] * K
    m = 6 * K
    assert dependent_bound(Linear(K), mu, m, 0.05).value == pytest.approx((m - 2 * K) * K / (32 * 0.05), rel=1e-12)
    assert independent_bound(Linear(K), mu, m, 10**5).value == pytest.approx(
        math.sqrt(10**5 * K * (m - K)) / 64, rel=1e-12
    )


def test_pmc_copies():
    base = dependent_bound(PMCItem(3), [0.5, 0.0, 0.0], 30, 0.05)
    assert base.value == pytest.approx((30 - 6) * 0.25 / (8 * 0.05), rel=1e-12)
    lifted = sum_copies_bound(base, 4)
    assert lifted.value == pytest.approx(16 * base.value, rel=1e-12)
    assert lifted.inputs["copies"] == 4
    ind = independent_bound(PMCItem(3), [0.5, 0.0, 0.0], 30, 10**4)
    assert sum_copies_bound(ind, 4).value == pytest.approx(4 * ind.value, rel=1e-12)
    with pytest.raises(ValueError):
        sum_copies_bound(base, 0)
    with pytest.raises(ValueError):
        sum_copies_bound(base, 2, kind="independent")


@settings(max_examples=100, deadline=None)
@given(
    name=st.sampled_from(("linear", "pmc-item", "exp-quadratic")),
    mu=arrays(np.float64, st.integers(1, 6), elements=st.floats(0.0, 1.0)),
    gap=st.floats(1e-4, 1.0),
)
def test_bounds_nonnegative(name, mu, gap):
    r = make_model(name, mu.size)
    assert dependent_bound(r, mu, 3 * mu.size, gap).value >= 0.0
    assert independent_bound(r, mu, 3 * mu.size, 100).value >= 0.0


def test_report_to_dict():
    d = dependent_bound(Linear(2), HALF, 10, 0.01).to_dict()
    assert d["kind"] == "dependent" and d["inputs"]["m"] == 10 and d["maximizing_subset"]["indices"] == []


def test_exp_quadratic_scan_shape():
    scan = exp_quadratic_scan((1, 4, 16, 64))
    assert [row["N"] for row in scan.rows()] == [1, 4, 16, 64]
    assert np.all(scan.values > 0)
    # the maximizing uniform mean shrinks like N^{-1/2}
    assert np.all(np.diff(scan.best_p0) < 0)


def test_exp_quadratic_scan_steepens_with_size():
    small = exp_quadratic_scan((1, 4, 16, 64)).slope
    large = exp_quadratic_scan((256, 1024, 4096, 16384), np.geomspace(1e-3, 0.2, 600)).slope
    assert small > large
    assert large == pytest.approx(-0.5, abs=0.02)
