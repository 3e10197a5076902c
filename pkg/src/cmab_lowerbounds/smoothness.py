"""Gini-weighted smoothness measures and the subset searches built on them.

Indices are 0-based throughout. A subset ``I`` names the common coordinates;
its complement (size ``N_I = K - |I|``) is the free block whose means are
sorted ascending to form the profile ``p``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .rewards import RewardModel

__all__ = [
    "SubsetSpec",
    "SortedProfile",
    "SmoothnessReport",
    "as_subset",
    "sorted_profile",
    "profile_gradient",
    "gini_l2",
    "gini_l1",
    "gini_modified",
    "variance_form",
    "modified_lower_bound_from_l1",
    "smoothness_report",
    "maximize_over_subsets",
    "norm_ratio_max",
    "norm_ratio_brute",
    "MEASURES",
    "OBJECTIVES",
    "BRUTE_FORCE_MAX_K",
]

MEASURES = ("l2", "l1", "modified")
OBJECTIVES = ("raw", "per-arm")
BRUTE_FORCE_MAX_K = 22
NORM_BRUTE_MAX_N = 12
_CHUNK = 1 << 16
WORKERS_ENV = "CMAB_LB_WORKERS"


@dataclass(frozen=True)
class SubsetSpec:
    """A set of common coordinates ``I`` inside an action of ``size`` arms."""

    indices: tuple
    size: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise ValueError(f"subset indices must be distinct, got {self.indices}")
        if idx and (idx[0] < 0 or idx[-1] >= self.size):
            raise ValueError(f"subset indices must lie in [0, {self.size}), got {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def complement_size(self) -> int:
        return self.size - len(self.indices)

    @property
    def complement(self) -> tuple:
        members = set(self.indices)
        return tuple(i for i in range(self.size) if i not in members)

    def to_dict(self):
        return {"indices": list(self.indices), "complement_size": self.complement_size}


def as_subset(I, size: int) -> SubsetSpec:
    if isinstance(I, SubsetSpec):
        if I.size != size:
            raise ValueError(f"subset was built for K={I.size}, not K={size}")
        return I
    if I is None:
        I = ()
    return SubsetSpec(tuple(I), size)


@dataclass(frozen=True)
class SortedProfile:
    """``values = mu[permutation]``: sorted free block followed by ``mu_I``."""

    values: np.ndarray
    permutation: np.ndarray
    n_free: int

    @property
    def free(self) -> np.ndarray:
        return self.values[: self.n_free]


def sorted_profile(mu, I=()) -> SortedProfile:
    mu = np.asarray(mu, dtype=float)
    subset = as_subset(I, mu.size)
    free = np.array(subset.complement, dtype=int)
    # stable sort keeps ties in original index order
    free = free[np.argsort(mu[free], kind="stable")]
    perm = np.concatenate([free, np.array(subset.indices, dtype=int)])
    return SortedProfile(mu[perm], perm, subset.complement_size)


def profile_gradient(reward: RewardModel, mu, I=(), check: bool = True):
    """Return ``(p_free, grad_free)``: the free block of the profile and the gradient there.

    For symmetric rewards the gradient at the profile must equal the
    permuted gradient at ``mu``; a mismatch beyond 1e-12 raises. Rewards
    that are not symmetric use the permuted gradient at ``mu``.
    """
    prof = sorted_profile(mu, I)
    g = reward.gradient(mu)[prof.permutation]
    if check and reward.symmetric:
        g_p = reward.gradient(prof.values)
        tol = 1e-12 * (1.0 + float(np.max(np.abs(g_p), initial=0.0)))
        if np.max(np.abs(g_p - g), initial=0.0) > tol:
            raise ValueError(f"{reward.name} is not index invariant at {np.asarray(mu).tolist()}")
        g = g_p
    n = prof.n_free
    return prof.free, g[:n]


def gini_l2(reward: RewardModel, mu, I=()) -> float:
    p, g = profile_gradient(reward, mu, I)
    return float(np.sum(p * (1.0 - p) * g * g))


def gini_l1(reward: RewardModel, mu, I=()) -> float:
    p, g = profile_gradient(reward, mu, I)
    return float(np.sum(np.sqrt(p * (1.0 - p)) * g)) ** 2


def _modified_from_block(p, g) -> float:
    diag = np.sum(p * (1.0 - p) * g * g)
    b = (1.0 - p) * g
    tail = np.cumsum(b[::-1])[::-1] - b  # sum over j > i
    return float(diag + 2.0 * np.sum(p * g * tail))


def gini_modified(reward: RewardModel, mu, I=()) -> float:
    """Diagonal Gini terms plus the ordered cross terms ``2 p_i (1 - p_j) g_i g_j``, ``i < j``."""
    p, g = profile_gradient(reward, mu, I)
    return _modified_from_block(p, g)


def _variance_from_block(p, g) -> float:
    c = np.cumsum(g[::-1])[::-1]
    w = np.diff(p, prepend=0.0)
    return float(np.sum(w * c * c) - np.sum(w * c) ** 2)


def variance_form(reward: RewardModel, mu, I=()) -> float:
    """Variance of ``X`` with ``P(X = c_i) = p_i - p_{i-1}`` and ``P(X = 0) = 1 - p_N``."""
    p, g = profile_gradient(reward, mu, I)
    return _variance_from_block(p, g)


def modified_lower_bound_from_l1(reward: RewardModel, mu, I=()) -> float:
    """``gini_l1 / (3 + ln(1/p_1) + ln(1/(1 - p_N)))``, defined as 0 at the boundary."""
    p, _ = profile_gradient(reward, mu, I)
    if p.size == 0 or p[0] <= 0.0 or p[-1] >= 1.0:
        return 0.0
    return gini_l1(reward, mu, I) / (3.0 - math.log(p[0]) - math.log1p(-p[-1]))


@dataclass(frozen=True)
class SmoothnessReport:
    l2: float
    l1: float
    modified: float
    subset: SubsetSpec

    def to_dict(self):
        return {
            "l2": self.l2,
            "l1": self.l1,
            "modified": self.modified,
            "subset": self.subset.to_dict(),
        }


def smoothness_report(reward: RewardModel, mu, I=()) -> SmoothnessReport:
    subset = as_subset(I, reward.action_size)
    return SmoothnessReport(
        gini_l2(reward, mu, subset),
        gini_l1(reward, mu, subset),
        gini_modified(reward, mu, subset),
        subset,
    )


_SCALAR = {"l2": gini_l2, "l1": gini_l1, "modified": gini_modified}


def _check_choice(measure, objective):
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def _table(ms, gs, codes, measure, objective):
    K = ms.size
    bits = ((codes[:, None] >> np.arange(K)) & 1).astype(float)
    if measure == "l2":
        val = bits @ (ms * (1.0 - ms) * gs * gs)
    elif measure == "l1":
        val = (bits @ (np.sqrt(ms * (1.0 - ms)) * gs)) ** 2
    else:
        b = bits * ((1.0 - ms) * gs)
        tail = b.sum(axis=1, keepdims=True) - np.cumsum(b, axis=1)
        val = bits @ (ms * (1.0 - ms) * gs * gs) + 2.0 * np.sum(bits * (ms * gs) * tail, axis=1)
    if objective == "per-arm":
        val = val / bits.sum(axis=1)
    return val


def _chunk_best(ms, gs, lo, hi, measure, objective):
    codes = np.arange(lo, hi, dtype=np.int64)
    val = _table(ms, gs, codes, measure, objective)
    best = float(val.max())
    tol = 1e-12 * max(1.0, abs(best))
    return best, codes[val >= best - tol]


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def maximize_over_subsets(
    measure: str,
    objective: str,
    reward: RewardModel,
    mu,
    method: str = "brute",
    workers: int | None = None,
):
    """Maximize a smoothness measure over subsets ``I`` with a non-empty complement.

    Returns ``(SubsetSpec, value)``. Near-ties (relative 1e-12) go to the
    lexicographically smallest index tuple. ``method="prefix"`` scans only
    complements made of the top-d arms by ``sqrt(mu(1-mu)) * grad``; it is
    exact for the L1 per-arm objective and a heuristic otherwise.
    """
    _check_choice(measure, objective)
    mu = reward.check(mu)
    K = mu.size
    if method == "prefix":
        return _prefix_search(measure, objective, reward, mu)
    if method != "brute":
        raise ValueError(f"method must be 'brute' or 'prefix', got {method!r}")
    if K > BRUTE_FORCE_MAX_K:
        raise ValueError(f"brute-force search supports K <= {BRUTE_FORCE_MAX_K}, got K={K}")

    order = np.argsort(mu, kind="stable")
    ms = mu[order]
    gs = reward.gradient(mu)[order]
    total = 1 << K
    bounds = [(lo, min(lo + _CHUNK, total)) for lo in range(1, total, _CHUNK)]
    n_workers = _workers(workers)
    if n_workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(lambda b: _chunk_best(ms, gs, b[0], b[1], measure, objective), bounds))
    else:
        parts = [_chunk_best(ms, gs, lo, hi, measure, objective) for lo, hi in bounds]

    best = max(v for v, _ in parts)
    tol = 1e-12 * max(1.0, abs(best))
    candidates = []
    for v, codes in parts:
        if v >= best - tol:
            candidates.extend(int(c) for c in codes)
    chosen = min(
        tuple(sorted(int(order[j]) for j in range(K) if not (code >> j) & 1)) for code in candidates
    )
    subset = SubsetSpec(chosen, K)
    return subset, _objective_value(measure, objective, reward, mu, subset)


def _objective_value(measure, objective, reward, mu, subset):
    value = _SCALAR[measure](reward, mu, subset)
    if objective == "per-arm":
        value /= subset.complement_size
    return value


def _prefix_search(measure, objective, reward, mu):
    if not reward.monotone:
        raise ValueError("prefix search requires a monotone reward")
    K = mu.size
    weight = np.sqrt(mu * (1.0 - mu)) * reward.gradient(mu)
    order = np.argsort(-weight, kind="stable")
    scored = []
    for d in range(1, K + 1):
        subset = SubsetSpec(tuple(order[d:]), K)
        scored.append((subset, _objective_value(measure, objective, reward, mu, subset)))
    best = max(v for _, v in scored)
    tol = 1e-12 * max(1.0, abs(best))
    return min(((s, v) for s, v in scored if v >= best - tol), key=lambda sv: sv[0].indices)


def norm_ratio_max(x):
    """``max_A ||x_A||_1^2 / |A|`` over non-empty ``A``, via the sorted-prefix scan.

    For a fixed size the best subset holds the largest entries in absolute
    value, so only the ``n`` prefixes of the sorted vector are examined.
    Returns ``(indices, value)``.
    """
    a = np.abs(np.asarray(x, dtype=float).ravel())
    if a.size == 0:
        raise ValueError("norm_ratio_max needs a non-empty vector")
    order = np.argsort(-a, kind="stable")
    sums = np.cumsum(a[order])
    ratios = sums * sums / np.arange(1, a.size + 1)
    k = int(np.argmax(ratios))
    return tuple(sorted(int(i) for i in order[: k + 1])), float(ratios[k])


def norm_ratio_brute(x):
    """Exhaustive version of :func:`norm_ratio_max` for ``n <= 12``."""
    a = np.abs(np.asarray(x, dtype=float).ravel())
    n = a.size
    if n == 0:
        raise ValueError("norm_ratio_brute needs a non-empty vector")
    if n > NORM_BRUTE_MAX_N:
        raise ValueError(f"brute force supports n <= {NORM_BRUTE_MAX_N}, got {n}")
    codes = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(float)
    ratios = (bits @ a) ** 2 / bits.sum(axis=1)
    k = int(np.argmax(ratios))
    return tuple(int(i) for i in np.flatnonzero(bits[k])), float(ratios[k])
