"""Worst-case I-disjoint instances built on coupled staircase distributions.

The free arms of an action share a single uniform draw ``U`` per round:
free arm ``i`` (in sorted-profile order) reports 1 iff ``U <= q_i``. With
``q = p`` this is the optimal law; with ``q = p - cumsum(eps)`` it is the
perturbed law carried by every other action. Equal profile values are
merged into one threshold group, so their observations coincide and only the
first member of a group carries a perturbation.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect
from scipy.special import xlog1py

from .rewards import RewardModel, make_model
from .smoothness import SubsetSpec, maximize_over_subsets, sorted_profile

__all__ = [
    "SCHEMA_VERSION",
    "ConstructionError",
    "GapUnreachable",
    "HorizonTooShort",
    "CouplingDistribution",
    "DisjointInstance",
    "KLCheck",
    "tie_groups",
    "cumulative_gradient",
    "bkl_build",
    "bkl_inverse",
    "epsilon_star",
    "epsilon_star_matrix",
    "f_ratio",
    "validity_bound",
    "outcome_probabilities",
    "kl_exact",
    "kl_quadratic_bound",
    "kl_check",
    "gap_exact",
    "certified_scale",
    "staircase",
    "build_dependent_instance",
    "build_independent_instance",
    "horizon_threshold",
    "sample_round",
]

SCHEMA_VERSION = 1
GAP_RTOL = 1e-6
_GRID = 64


class ConstructionError(ValueError):
    pass


class GapUnreachable(ConstructionError):
    def __init__(self, target, max_gap):
        super().__init__(
            f"gap {target!r} is not reachable within the validity bounds; "
            f"largest certified gap is {max_gap!r}"
        )
        self.target = target
        self.max_gap = max_gap


class HorizonTooShort(ConstructionError):
    def __init__(self, horizon, min_horizon):
        super().__init__(f"horizon T={horizon} is below the smallest admissible T0={min_horizon}")
        self.horizon = horizon
        self.min_horizon = min_horizon


# ---------------------------------------------------------------------------
# thresholds and the KL quadratic form


def tie_groups(p) -> list:
    """Positions of a sorted vector grouped by equal value."""
    p = np.asarray(p, dtype=float)
    groups = []
    for i, v in enumerate(p):
        if groups and p[groups[-1][0]] == v:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _starts(p):
    return np.array([g[0] for g in tie_groups(p)], dtype=int)


def _check_thresholds(q):
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("thresholds must be a non-empty vector")
    if not (q[0] > 0.0 and q[-1] < 1.0 and np.all(np.diff(q) > 0.0)):
        raise ValueError(f"thresholds must satisfy 0 < p_1 < ... < p_N < 1, got {q.tolist()}")
    return q


def cumulative_gradient(reward: RewardModel, p, n_free: int | None = None) -> np.ndarray:
    """Suffix sums ``c_j = sum_{i >= j} grad_i r(p)`` over the free block."""
    p = np.asarray(p, dtype=float)
    n = p.size if n_free is None else int(n_free)
    g = reward.gradient(p)[:n]
    return np.cumsum(g[::-1])[::-1]


def bkl_build(p) -> np.ndarray:
    """``diag(1 / (p_i - p_{i-1})) + 11^T / (1 - p_N)`` for distinct interior ``p``."""
    q = _check_thresholds(p)
    d = np.diff(q, prepend=0.0)
    return np.diag(1.0 / d) + np.full((q.size, q.size), 1.0 / (1.0 - q[-1]))


def bkl_inverse(p) -> np.ndarray:
    """Closed-form inverse of :func:`bkl_build` via the rank-one update formula.

    The update denominator is ``1 + p_N / (1 - p_N) = 1 / (1 - p_N)``, which
    cancels the ``1 / (1 - p_N)`` prefactor and leaves ``diag(d) - d d^T``.
    """
    q = _check_thresholds(p)
    d = np.diff(q, prepend=0.0)
    return np.diag(d) - np.outer(d, d)


def epsilon_star(p, c, eps0: float = 1.0) -> np.ndarray:
    """Perturbation maximizing ``(c^T e)^2 / e^T B e``, scaled by ``eps0``.

    Coordinate ``i`` is ``eps0 (p_i - p_{i-1}) (c_i - sum_j (p_j - p_{j-1}) c_j)``.
    Tied profile values form one group whose trailing members get 0.
    """
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float)
    if c.shape != p.shape:
        raise ValueError("c must have the same length as p")
    if not np.any(c != 0.0):
        raise ValueError("c must be non-zero")
    starts = _starts(p)
    q = _check_thresholds(p[starts])
    cr = c[starts]
    d = np.diff(q, prepend=0.0)
    out = np.zeros_like(p)
    out[starts] = eps0 * d * (cr - np.dot(d, cr))
    return out


def epsilon_star_matrix(p, c, eps0: float = 1.0) -> np.ndarray:
    """``eps0 * B^{-1} c`` by a dense linear solve (distinct ``p`` only)."""
    return eps0 * np.linalg.solve(bkl_build(p), np.asarray(c, dtype=float))


def _reduced_eps(p, eps):
    p = np.asarray(p, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != p.shape:
        raise ValueError("eps must have the same length as p")
    starts = _starts(p)
    mask = np.ones(p.size, dtype=bool)
    mask[starts] = False
    if np.any(eps[mask] != 0.0):
        raise ValueError("eps must vanish on tied positions after the first of each group")
    return p[starts], eps[starts], starts


def f_ratio(p, c, eps) -> float:
    """``(c^T eps)^2 / (eps^T B eps)`` for a non-zero perturbation."""
    q, er, starts = _reduced_eps(p, eps)
    if not np.any(er != 0.0):
        raise ValueError("eps must be non-zero")
    # the ratio is scale-free; normalizing keeps tiny perturbations out of underflow
    scale = float(np.max(np.abs(er)))
    er = er / scale
    B = bkl_build(q)
    num = float(np.dot(np.asarray(c, dtype=float), np.asarray(eps, dtype=float) / scale)) ** 2
    return num / float(er @ B @ er)


def validity_bound(p) -> float:
    """Largest sup-norm of a perturbation admitted by the KL bound.

    ``b0 = min(min_i (p_i - p_{i-1}), (1 - p_N) / N)`` keeps every outcome
    probability non-negative; the returned value is half of
    ``min(p_1, min_i (p_i - p_{i-1}), (1 - p_N) / N, b0)``. Ties are merged
    first, so ``N`` counts distinct values.
    """
    p = np.asarray(p, dtype=float)
    q = _check_thresholds(p[_starts(p)])
    d = np.diff(q, prepend=0.0)
    tail = (1.0 - q[-1]) / q.size
    b0 = min(float(d.min()), tail)
    return 0.5 * min(float(q[0]), float(d.min()), tail, b0)


def outcome_probabilities(p, eps=None) -> np.ndarray:
    """Probabilities of the ``N + 1`` staircase outcomes (all ones first, all zeros last)."""
    p = np.asarray(p, dtype=float)
    probs = np.diff(np.concatenate([[0.0], p, [1.0]]))
    if eps is not None:
        eps = np.asarray(eps, dtype=float)
        if eps.shape != p.shape:
            raise ValueError("eps must have the same length as p")
        probs = probs - np.concatenate([eps, [-eps.sum()]])
    return probs


_SERIES_CUTOFF = 1e-3


def _kl_term(delta):
    """``(1 + d) log(1 + d) - d``, by its power series near 0 to avoid cancellation."""
    delta = np.asarray(delta, dtype=float)
    out = xlog1py(1.0 + delta, delta) - delta
    small = np.abs(delta) < _SERIES_CUTOFF
    d = delta[small]
    # sum_{k>=2} (-1)^k d^k / (k (k - 1)); six terms reach double precision here
    series = np.zeros_like(d)
    for k in range(7, 1, -1):
        series = d * (series + (-1) ** k / (k * (k - 1)))
    out[small] = d * series
    return out


def kl_exact(p, eps) -> float:
    """``KL(nu, nu*)`` between the perturbed and optimal staircase laws.

    Each outcome contributes ``nu*_k h((nu_k - nu*_k) / nu*_k)`` with
    ``h(d) = (1 + d) log(1 + d) - d``; the ``-d`` terms sum to zero, and
    keeping them makes every term non-negative so tiny perturbations do not
    drown in rounding.
    """
    star = outcome_probabilities(p)
    nu = outcome_probabilities(p, eps)
    if np.any(star < 0.0):
        raise ValueError("p must be sorted within [0, 1]")
    if np.any(nu < 0.0):
        raise ValueError(f"perturbed law is not a distribution: {nu.tolist()}")
    if np.any((nu > 0.0) & (star == 0.0)):
        raise ValueError("perturbed law puts mass outside the support of the optimal law")
    support = star > 0.0
    delta = (nu[support] - star[support]) / star[support]
    return float(np.sum(star[support] * _kl_term(delta)))


def kl_quadratic_bound(p, eps) -> float:
    """``2 eps^T B eps`` on the tie-reduced thresholds."""
    q, er, _ = _reduced_eps(p, eps)
    return 2.0 * float(er @ bkl_build(q) @ er)


@dataclass(frozen=True)
class KLCheck:
    exact: float
    bound: float
    applicable: bool


def kl_check(p, eps) -> KLCheck:
    """Exact KL next to the quadratic bound; ``applicable`` is False outside the validity box."""
    q, er, _ = _reduced_eps(p, eps)
    applicable = bool(np.max(np.abs(er)) <= validity_bound(q))
    return KLCheck(kl_exact(p, eps), kl_quadratic_bound(p, eps), applicable)


def gap_exact(reward: RewardModel, p, eps) -> float:
    """``r(p) - r(p - a)`` where ``a`` is ``cumsum(eps)`` on the free block and 0 on the common arms."""
    p = np.asarray(p, dtype=float)
    eps = np.asarray(eps, dtype=float)
    shift = np.zeros_like(p)
    shift[: eps.size] = np.cumsum(eps)
    return reward.evaluate(p) - reward.evaluate(p - shift)


def certified_scale(reward: RewardModel, p, direction):
    """Largest halving of the validity scale on which the gap behaves.

    Starting from the scale that puts ``eps0 * direction`` on the validity
    bound, the scale is halved until, on a grid of 64 points in
    ``(0, scale]``, the gap is strictly increasing and at least
    ``0.5 * c^T eps``. Returns ``(scale, gap at scale)``.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(direction, dtype=float)
    n = u.size
    c = cumulative_gradient(reward, p, n)
    slope = float(c @ u)
    if slope <= 0.0:
        raise ConstructionError("direction must satisfy c^T u > 0")
    scale = validity_bound(p[:n]) / float(np.max(np.abs(u)))
    grid = np.arange(1, _GRID + 1) / _GRID
    for _ in range(80):
        gaps = np.array([gap_exact(reward, p, e * u) for e in scale * grid])
        if np.all(np.diff(gaps) > 0.0) and np.all(gaps >= 0.5 * slope * scale * grid):
            return scale, float(gaps[-1])
        scale *= 0.5
    raise ConstructionError("could not certify a perturbation scale")


def staircase(q, u: float) -> np.ndarray:
    """Observation of the free block for one uniform draw: ``1`` iff ``u <= q_i``."""
    return (u <= np.asarray(q, dtype=float)).astype(np.int8)


@dataclass(frozen=True)
class CouplingDistribution:
    """Staircase law with non-decreasing thresholds; coordinate ``i`` has mean ``q_i``."""

    thresholds: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.thresholds, dtype=float)
        if q.ndim != 1 or np.any(q < 0.0) or np.any(q > 1.0) or np.any(np.diff(q) < 0.0):
            raise ValueError("thresholds must be non-decreasing within [0, 1]")
        object.__setattr__(self, "thresholds", q)

    def outcome_probabilities(self) -> np.ndarray:
        return outcome_probabilities(self.thresholds)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        u = rng.random(size)
        return (np.asarray(u)[..., None] <= self.thresholds).astype(np.int8)


# ---------------------------------------------------------------------------
# instances


@dataclass
class DisjointInstance:
    """An I-disjoint problem: one action carries the optimal law, the rest the perturbed one.

    Arms ``0 .. |I|-1`` are the common arms. Action ``a`` owns free arms
    ``|I| + a*N .. |I| + (a+1)*N - 1``; its arm list is ordered as the
    sorted profile (free block first, then the common arms). ``p`` and
    ``epsilon`` live on distinct threshold groups; ``groups`` maps each group
    to its free positions.
    """

    m: int
    K: int
    subset: tuple
    mu: list
    mu_common: list
    p: list
    groups: list
    epsilon: list
    actions: list
    optimal_index: int
    gap: float
    reward_name: str
    bound_annotations: dict = field(default_factory=dict)

    @property
    def n_free(self) -> int:
        return self.K - len(self.subset)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def common_arms(self) -> list:
        return list(range(len(self.subset)))

    @property
    def leftover_arms(self) -> list:
        used = len(self.subset) + self.n_actions * self.n_free
        return list(range(used, self.m))

    def reward(self) -> RewardModel:
        return make_model(self.reward_name, self.K)

    def thresholds(self, optimal: bool) -> np.ndarray:
        """Per-position thresholds of the free block."""
        q = np.asarray(self.p, dtype=float)
        if not optimal:
            q = q - np.cumsum(self.epsilon)
        out = np.empty(self.n_free)
        for value, members in zip(q, self.groups):
            out[members] = value
        return out

    def action_means(self, index: int) -> np.ndarray:
        return np.concatenate([self.thresholds(index == self.optimal_index), self.mu_common])

    def arm_means(self) -> np.ndarray:
        """True mean of every arm; leftover arms are reported as NaN."""
        means = np.full(self.m, np.nan)
        means[: len(self.subset)] = self.mu_common
        for a, arms in enumerate(self.actions):
            means[arms[: self.n_free]] = self.thresholds(a == self.optimal_index)
        return means

    def action_gaps(self) -> np.ndarray:
        r = self.reward()
        values = np.array([r.evaluate(self.action_means(a)) for a in range(self.n_actions)])
        return values.max() - values

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "m": self.m,
            "K": self.K,
            "I": list(self.subset),
            "mu": [float(v) for v in self.mu],
            "mu_common": [float(v) for v in self.mu_common],
            "p": [float(v) for v in self.p],
            "groups": [list(map(int, g)) for g in self.groups],
            "epsilon": [float(v) for v in self.epsilon],
            "actions": [list(map(int, a)) for a in self.actions],
            "optimal_index": self.optimal_index,
            "gap": float(self.gap),
            "reward_name": self.reward_name,
            "bound_annotations": self.bound_annotations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DisjointInstance":
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported instance schema_version {version}")
        return cls(
            m=int(data["m"]),
            K=int(data["K"]),
            subset=tuple(data["I"]),
            mu=list(data["mu"]),
            mu_common=list(data["mu_common"]),
            p=list(data["p"]),
            groups=[list(g) for g in data["groups"]],
            epsilon=list(data["epsilon"]),
            actions=[list(a) for a in data["actions"]],
            optimal_index=int(data["optimal_index"]),
            gap=float(data["gap"]),
            reward_name=data["reward_name"],
            bound_annotations=dict(data.get("bound_annotations", {})),
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "DisjointInstance":
        return cls.from_dict(json.loads(text))

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class _Plan:
    subset: SubsetSpec
    profile: np.ndarray
    per_arm: float
    direction: np.ndarray
    scale: float
    max_gap: float

    @property
    def n_free(self):
        return self.subset.complement_size

    @property
    def modified(self):
        return self.per_arm * self.n_free

    def gap_at(self, reward, eps0):
        return gap_exact(reward, self.profile, eps0 * self.direction)


def _check_reward(reward: RewardModel):
    if not reward.symmetric:
        raise ConstructionError(
            f"{reward!r} is not index invariant; instances need a symmetric reward "
            "(build on the base reward and scale bounds for sums of copies)"
        )


def _plan(reward: RewardModel, mu) -> _Plan:
    _check_reward(reward)
    mu = reward.check(mu)
    subset, per_arm = maximize_over_subsets("modified", "per-arm", reward, mu)
    if not per_arm > 0.0:
        raise ConstructionError("modified smoothness is zero for every subset; no instance exists")
    prof = sorted_profile(mu, subset)
    free = prof.free
    if not (free[0] > 0.0 and free[-1] < 1.0):
        raise ConstructionError(f"maximizing free block is not interior: {free.tolist()}")
    c = cumulative_gradient(reward, prof.values, prof.n_free)
    direction = epsilon_star(free, c, 1.0)
    scale, max_gap = certified_scale(reward, prof.values, direction)
    return _Plan(subset, prof.values, per_arm, direction, scale, max_gap)


def _solve_scale(reward, plan: _Plan, target_gap: float) -> float:
    if target_gap > plan.max_gap:
        raise GapUnreachable(target_gap, plan.max_gap)
    if target_gap == plan.max_gap:
        return plan.scale
    eps0 = bisect(
        lambda e: plan.gap_at(reward, e) - target_gap,
        0.0,
        plan.scale,
        xtol=1e-18 * plan.scale,
        rtol=4 * np.finfo(float).eps,
        maxiter=400,
    )
    achieved = plan.gap_at(reward, eps0)
    if abs(achieved - target_gap) > GAP_RTOL * target_gap:
        raise ConstructionError(f"bisection reached gap {achieved!r}, wanted {target_gap!r}")
    return eps0


def _assemble(reward, mu, m, plan: _Plan, eps0, annotations, optimal_index) -> DisjointInstance:
    K = reward.action_size
    n = plan.n_free
    n_common = K - n
    n_actions = (m - n_common) // n
    if not 0 <= optimal_index < n_actions:
        raise ValueError(f"optimal_index must be in [0, {n_actions}), got {optimal_index}")
    free = plan.profile[:n]
    starts = _starts(free)
    eps = (eps0 * plan.direction)[starts]
    common = list(range(n_common))
    actions = [[n_common + a * n + j for j in range(n)] + common for a in range(n_actions)]
    gap = plan.gap_at(reward, eps0)
    inst = DisjointInstance(
        m=int(m),
        K=K,
        subset=plan.subset.indices,
        mu=[float(v) for v in mu],
        mu_common=[float(v) for v in plan.profile[n:]],
        p=[float(v) for v in free[starts]],
        groups=tie_groups(free),
        epsilon=[float(v) for v in eps],
        actions=actions,
        optimal_index=int(optimal_index),
        gap=float(gap),
        reward_name=reward.name,
    )
    full_eps = np.zeros(n)
    full_eps[starts] = eps
    annotations = dict(annotations)
    annotations.update(
        gini_modified=plan.modified,
        n_free=n,
        eps0=float(eps0),
        kl_exact=kl_exact(free, full_eps),
        kl_quadratic_bound=kl_quadratic_bound(free, full_eps),
        max_certified_gap=plan.max_gap,
    )
    inst.bound_annotations = annotations
    return inst


def build_dependent_instance(
    reward: RewardModel, mu, target_gap: float, m: int, optimal_index: int = 0
) -> DisjointInstance:
    """Instance whose gap equals ``target_gap`` and whose lower bound is the dependent one."""
    K = reward.action_size
    if not m > 2 * K:
        raise ConstructionError(f"need m > 2K, got m={m}, K={K}")
    if not target_gap > 0.0:
        raise ConstructionError(f"target gap must be positive, got {target_gap}")
    plan = _plan(reward, mu)
    eps0 = _solve_scale(reward, plan, float(target_gap))
    db_star = (m - 2 * K) * plan.modified / (8.0 * plan.n_free * target_gap)
    return _assemble(
        reward,
        mu,
        m,
        plan,
        eps0,
        {"kind": "dependent", "target_gap": float(target_gap), "db_star": db_star},
        optimal_index,
    )


def _independent_gap(modified, n_free, m, K, T):
    return math.sqrt(modified) / 8.0 * math.sqrt((m - K) / (T * n_free))


def _horizon_threshold(plan: _Plan, m, K) -> int:
    T0 = max(1, math.ceil(plan.modified * (m - K) / (64.0 * plan.n_free * plan.max_gap**2)))
    while _independent_gap(plan.modified, plan.n_free, m, K, T0) > plan.max_gap:
        T0 += 1
    return T0


def horizon_threshold(reward: RewardModel, mu, m: int) -> int:
    """Smallest horizon whose prescribed gap is reachable within the validity bounds."""
    return _horizon_threshold(_plan(reward, mu), m, reward.action_size)


def build_independent_instance(
    reward: RewardModel, mu, m: int, T: int, optimal_index: int = 0
) -> DisjointInstance:
    """Instance with gap ``(gamma/8) sqrt((m - K) / (T N))`` for horizon ``T``."""
    K = reward.action_size
    if m < 3 * K:
        raise ConstructionError(f"need m >= 3K, got m={m}, K={K}")
    if T < 1:
        raise ConstructionError(f"horizon must be positive, got {T}")
    plan = _plan(reward, mu)
    T0 = _horizon_threshold(plan, m, K)
    if T < T0:
        raise HorizonTooShort(T, T0)
    target = _independent_gap(plan.modified, plan.n_free, m, K, T)
    eps0 = _solve_scale(reward, plan, target)
    ib_star = math.sqrt(plan.modified) / 32.0 * math.sqrt(T * (m - K) / plan.n_free)
    return _assemble(
        reward,
        mu,
        m,
        plan,
        eps0,
        {
            "kind": "independent",
            "horizon": int(T),
            "min_horizon": T0,
            "target_gap": target,
            "ib_star": ib_star,
        },
        optimal_index,
    )


def sample_round(instance: DisjointInstance, rng: np.random.Generator, chosen_action: int) -> dict:
    """Draw one round of semi-bandit feedback for ``chosen_action`` as ``{arm: 0/1}``."""
    if not 0 <= chosen_action < instance.n_actions:
        raise ValueError(f"unknown action {chosen_action}")
    arms = instance.actions[chosen_action]
    n = instance.n_free
    free = staircase(instance.thresholds(chosen_action == instance.optimal_index), rng.random())
    common = (rng.random(len(instance.mu_common)) < np.asarray(instance.mu_common)).astype(np.int8)
    obs = {int(a): int(x) for a, x in zip(arms[:n], free)}
    obs.update({int(a): int(x) for a, x in zip(arms[n:], common)})
    return obs
