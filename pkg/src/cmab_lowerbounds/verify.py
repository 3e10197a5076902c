"""Randomized property suites for the identities and inequalities the library relies on.

Trial ``k`` of suite ``s`` draws from
``PCG64(SeedSequence(seed, spawn_key=(SUITES.index(s), k)))``, so a report
depends only on ``(suite, seed, trials)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bounds as bd
from .instance import (
    bkl_build,
    bkl_inverse,
    certified_scale,
    cumulative_gradient,
    epsilon_star,
    epsilon_star_matrix,
    f_ratio,
    gap_exact,
    kl_exact,
    kl_quadratic_bound,
    validity_bound,
)
from .rewards import (
    CenteredQuadratic,
    ExpQuadratic,
    Linear,
    PMCItem,
    PowerGradient,
    finite_diff_gradient,
    make_model,
)
from .smoothness import (
    SubsetSpec,
    gini_l1,
    gini_l2,
    gini_modified,
    maximize_over_subsets,
    modified_lower_bound_from_l1,
    norm_ratio_brute,
    norm_ratio_max,
    profile_gradient,
    sorted_profile,
    variance_form,
)

__all__ = ["SUITES", "SCHEMA_VERSION", "CheckResult", "VerifyReport", "trial_rng", "run_suite", "verify"]

SCHEMA_VERSION = 1
SUITES = (
    "gradients",
    "lemma3",
    "lemma4",
    "lemma5",
    "prop1",
    "prop2",
    "lemma6",
    "appendixE",
    "rates",
)
MONOTONE = (Linear, PMCItem, ExpQuadratic)
SYMMETRIC = MONOTONE + (CenteredQuadratic,)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    measured: float
    threshold: float
    seed: int
    trials: int

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}/{self.name}: measured={self.measured!r} threshold={self.threshold!r}"


@dataclass(frozen=True)
class VerifyReport:
    seed: int
    trials: int
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def trial_rng(seed: int, suite: str, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(SUITES.index(suite), trial))
    return np.random.Generator(np.random.PCG64(ss))


def _random_subset(rng, K) -> SubsetSpec:
    n_free = int(rng.integers(1, K + 1))
    common = rng.permutation(K)[n_free:]
    return SubsetSpec(tuple(int(i) for i in common), K)


def _random_reward(rng, pool, max_k=8):
    K = int(rng.integers(1, max_k + 1))
    return pool[int(rng.integers(len(pool)))](K)


class _Collector:
    def __init__(self, suite, seed, trials):
        self.suite, self.seed, self.trials = suite, seed, trials
        self.checks = []

    def at_most(self, name, measured, threshold):
        self.checks.append(
            CheckResult(self.suite, name, bool(measured <= threshold), float(measured), float(threshold), self.seed, self.trials)
        )

    def at_least(self, name, measured, threshold):
        self.checks.append(
            CheckResult(self.suite, name, bool(measured >= threshold), float(measured), float(threshold), self.seed, self.trials)
        )


def _gradients(out: _Collector, trials):
    for cls in (Linear, PMCItem, ExpQuadratic, PowerGradient):
        fd_err = sym_err = 0.0
        min_grad = math.inf
        for k in range(trials):
            rng = trial_rng(out.seed, out.suite, k)
            K = int(rng.integers(1, 9))
            model = cls(K)
            mu = rng.uniform(0.0, 1.0, K)
            g = model.gradient(mu)
            fd = finite_diff_gradient(model, mu)
            fd_err = max(fd_err, float(np.max(np.abs(g - fd)) / (1.0 + np.max(np.abs(g)))))
            min_grad = min(min_grad, float(g.min()))
            if model.symmetric:
                perm = rng.permutation(K)
                gp = model.gradient(mu[perm])
                value_err = abs(model.evaluate(mu[perm]) - model.evaluate(mu))
                sym_err = max(sym_err, float(np.max(np.abs(gp - g[perm]))), value_err)
        out.at_most(f"{cls.name}/finite-difference", fd_err, 1e-5)
        out.at_least(f"{cls.name}/monotone", min_grad, -1e-12)
        if cls.symmetric:
            out.at_most(f"{cls.name}/symmetry", sym_err, 1e-12)


def _lemma5(out: _Collector, trials):
    f_err = eps_err = inv_err = var_err = 0.0
    for k in range(trials):
        rng = trial_rng(out.seed, out.suite, k)
        reward = _random_reward(rng, MONOTONE)
        K = reward.action_size
        mu = rng.uniform(0.0, 1.0, K)
        subset = _random_subset(rng, K)
        prof = sorted_profile(mu, subset)
        p = prof.free
        c = cumulative_gradient(reward, prof.values, prof.n_free)
        closed = epsilon_star(p, c)
        matrix = epsilon_star_matrix(p, c)
        eps_err = max(eps_err, float(np.max(np.abs(closed - matrix))))
        modified = gini_modified(reward, mu, subset)
        f_err = max(f_err, abs(f_ratio(p, c, closed) - modified))
        var_err = max(var_err, abs(variance_form(reward, mu, subset) - modified))
        inv_err = max(inv_err, float(np.max(np.abs(bkl_build(p) @ bkl_inverse(p) - np.eye(p.size)))))
    out.at_most("f_ratio(eps*) = modified", f_err, 1e-9)
    out.at_most("closed-form eps* = B^-1 c", eps_err, 1e-10)
    out.at_most("B B^-1 = I", inv_err, 1e-9)
    out.at_most("variance form = modified", var_err, 1e-10)


def _lemma3(out: _Collector, trials):
    violations = 0
    worst = -math.inf
    for k in range(trials):
        rng = trial_rng(out.seed, out.suite, k)
        n = int(rng.integers(1, 9))
        p = np.sort(rng.uniform(0.0, 1.0, n))
        b = validity_bound(p)
        eps = rng.uniform(-b, b, n)
        exact = kl_exact(p, eps)
        bound = kl_quadratic_bound(p, eps)
        worst = max(worst, exact - bound)
        violations += int(exact > bound * (1.0 + 1e-12))
    out.at_most("violations of KL <= 2 e^T B e", violations, 0)
    out.at_most("max(KL - 2 e^T B e)", max(worst, 0.0), 1e-15)


def _lemma4(out: _Collector, trials):
    violations = 0
    linear_err = 0.0
    for k in range(trials):
        rng = trial_rng(out.seed, out.suite, k)
        reward = _random_reward(rng, SYMMETRIC)
        K = reward.action_size
        while True:
            mu = rng.uniform(0.02, 0.98, K)
            subset = _random_subset(rng, K)
            prof = sorted_profile(mu, subset)
            c = cumulative_gradient(reward, prof.values, prof.n_free)
            if np.any(c != 0.0):
                break
        u = epsilon_star(prof.free, c)
        scale, _ = certified_scale(reward, prof.values, u)
        eps = rng.uniform(0.0, 1.0) * scale * u
        gap = gap_exact(reward, prof.values, eps)
        violations += int(gap < 0.5 * float(c @ eps))
        if isinstance(reward, Linear):
            linear_err = max(linear_err, abs(gap - float(c @ eps)))
    out.at_most("violations of gap >= c^T e / 2", violations, 0)
    out.at_most("linear gap = c^T e", linear_err, 1e-12)


def _prop1(out: _Collector, trials):
    violations = 0
    negative = 0.0
    for k in range(trials):
        rng = trial_rng(out.seed, out.suite, k)
        reward = _random_reward(rng, SYMMETRIC)
        K = reward.action_size
        mu = rng.uniform(0.0, 1.0, K)
        subset = _random_subset(rng, K)
        modified = gini_modified(reward, mu, subset)
        rhs = modified_lower_bound_from_l1(reward, mu, subset)
        negative = min(negative, modified)
        violations += int(modified < rhs - 1e-12 * (1.0 + rhs))
    out.at_most("violations of modified >= l1 / log factor", violations, 0)
    out.at_least("min modified smoothness", negative, -1e-12)


def _prop2(out: _Collector, trials):
    first = second = 0
    dominance = 0
    for k in range(trials):
        rng = trial_rng(out.seed, out.suite, k)
        reward = _random_reward(rng, MONOTONE)
        K = reward.action_size
        mu = rng.uniform(0.0, 1.0, K)
        l2 = gini_l2(reward, mu)
        _, l1_best = maximize_over_subsets("l1", "per-arm", reward, mu)
        _, mod_best = maximize_over_subsets("modified", "per-arm", reward, mu)
        rhs1 = l2 / (1.0 + math.log(K))
        first += int(l1_best < rhs1 - 1e-12 * (1.0 + rhs1))
        inner = mu[(mu > 0.0) & (mu < 1.0)]
        rhs2 = rhs1 / (3.0 + math.log(1.0 / inner.min()) + math.log(1.0 / (1.0 - inner.max())))
        second += int(mod_best < rhs2 - 1e-12 * (1.0 + rhs2))
        subset = _random_subset(rng, K)
        m2 = gini_modified(reward, mu, subset)
        dominance += int(m2 < gini_l2(reward, mu, subset) - 1e-12 * (1.0 + m2))
        dominance += int(gini_l1(reward, mu, subset) < gini_l2(reward, mu, subset) * (1.0 - 1e-12))
    out.at_most("violations of max l1/N >= l2 / (1 + ln K)", first, 0)
    out.at_most("violations of max modified/N >= l2 / log factors", second, 0)
    out.at_most("violations of modified >= l2 and l1 >= l2", dominance, 0)


def _lemma6(out: _Collector, trials):
    mismatch = 0.0
    violations = 0
    for k in range(trials):
        rng = trial_rng(out.seed, out.suite, k)
        n = int(rng.integers(2, 13))
        x = rng.normal(size=n)
        _, fast = norm_ratio_max(x)
        _, slow = norm_ratio_brute(x)
        mismatch = max(mismatch, abs(fast - slow) / (1.0 + slow))
        violations += int(fast < float(x @ x) / (1.0 + math.log(n)) * (1.0 - 1e-12))
    out.at_most("prefix scan = brute force", mismatch, 1e-12)
    out.at_most("violations of the norm inequality", violations, 0)


def _tightness(out: _Collector, trials):
    worst = 0.0
    for K in (4, 8, 12):
        reward = PowerGradient(K)
        mu = 2.0 ** (-2.0 * (K - np.arange(1, K + 1)) - 1.0)
        for code in range(1, 1 << K):
            common = tuple(i for i in range(K) if not (code >> i) & 1)
            subset = SubsetSpec(common, K)
            ratio = gini_modified(reward, mu, subset) / gini_l1(reward, mu, subset)
            worst = max(worst, ratio * subset.complement_size)
    out.at_most("power-gradient max ratio * N_I", worst, 8.0)
    ratio_err = 0.0
    slack = math.inf
    for n in range(2, 65):
        i = np.arange(1, n + 1)
        x = np.sqrt(i) - np.sqrt(i - 1)
        _, value = norm_ratio_max(x)
        ratio_err = max(ratio_err, abs(value - 1.0))
        slack = min(slack, float(x @ x) - math.log(n + 1) / 4.0)
    out.at_most("sqrt-difference |norm ratio - 1|", ratio_err, 1e-12)
    out.at_least("sqrt-difference min(||x||^2 - ln(n+1)/4)", slack, 0.0)


def _rel(a, b):
    return abs(a - b) / abs(b)


def _rates(out: _Collector, trials):
    # linear rows: closed forms and doubling sweeps
    closed = sweep = 0.0
    for K in (2, 3, 4):
        mu = np.full(K, 0.5)
        reward = Linear(K)
        for m in (8 * K, 32 * K):
            for gap in (0.1, 0.01):
                dep = bd.dependent_bound(reward, mu, m, gap).value
                closed = max(closed, _rel(dep, (m - 2 * K) * K / (32.0 * gap)))
                sweep = max(sweep, _rel(bd.dependent_bound(reward, mu, m, gap / 2).value / dep, 2.0))
                sweep = max(sweep, _rel(bd.dependent_bound(reward, mu, m, 4 * gap).value / dep, 0.25))
                predicted_m = (2 * m - 2 * K) / (m - 2 * K)
                sweep = max(sweep, _rel(bd.dependent_bound(reward, mu, 2 * m, gap).value / dep, predicted_m))
                big = bd.dependent_bound(Linear(2 * K), np.full(2 * K, 0.5), m, gap).value
                predicted_k = (m - 4 * K) * 2 * K / ((m - 2 * K) * K)
                sweep = max(sweep, _rel(big / dep, predicted_k))
                for T in (10**4, 10**6):
                    ind = bd.independent_bound(reward, mu, m, T).value
                    closed = max(closed, _rel(ind, math.sqrt(T * K * (m - K)) / 64.0))
                    sweep = max(sweep, _rel(bd.independent_bound(reward, mu, m, 4 * T).value / ind, 2.0))
    out.at_most("linear closed forms", closed, 1e-12)
    out.at_most("linear doubling sweeps", sweep, 1e-9)

    pmc = 0.0
    for K in (2, 4, 6):
        reward = make_model("pmc-item", K)
        mu = np.zeros(K)
        mu[0] = 0.5
        m, gap, T = 10 * K, 0.05, 10**5
        dep = bd.dependent_bound(reward, mu, m, gap)
        ind = bd.independent_bound(reward, mu, m, T)
        if dep.maximizing_subset.indices != tuple(range(1, K)):
            pmc = math.inf
        pmc = max(pmc, _rel(dep.value, (m - 2 * K) * 0.25 / (8.0 * gap)))
        for M in (1, 2, 3, 5, 8):
            pmc = max(pmc, _rel(bd.sum_copies_bound(dep, M).value, M * M * dep.value))
            pmc = max(pmc, _rel(bd.sum_copies_bound(ind, M).value, M * ind.value))
    out.at_most("PMC copies scalings", pmc, 1e-12)

    scan = bd.exp_quadratic_scan((1, 4, 16, 64))
    out.at_least("exp-quadratic slope >= -0.6", scan.slope, -0.6)
    out.at_most("exp-quadratic slope <= -0.4", scan.slope, -0.4)


_RUNNERS = {
    "gradients": _gradients,
    "lemma3": _lemma3,
    "lemma4": _lemma4,
    "lemma5": _lemma5,
    "prop1": _prop1,
    "prop2": _prop2,
    "lemma6": _lemma6,
    "appendixE": _tightness,
    "rates": _rates,
}


def run_suite(suite: str, seed: int = 1, trials: int = 1000) -> list:
    if suite not in _RUNNERS:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES} or 'all'")
    out = _Collector(suite, int(seed), int(trials))
    _RUNNERS[suite](out, int(trials))
    return out.checks


def verify(suite: str = "all", seed: int = 1, trials: int = 1000) -> VerifyReport:
    names = SUITES if suite == "all" else (suite,)
    checks = []
    for name in names:
        checks.extend(run_suite(name, seed, trials))
    return VerifyReport(int(seed), int(trials), tuple(checks))
