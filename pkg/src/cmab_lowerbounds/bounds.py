"""Problem-dependent and problem-independent regret lower bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rewards import ExpQuadratic, RewardModel
from .smoothness import SubsetSpec, gini_modified, maximize_over_subsets

__all__ = [
    "BoundReport",
    "dependent_bound",
    "independent_bound",
    "sum_copies_bound",
    "ScanResult",
    "exp_quadratic_scan",
]


@dataclass(frozen=True)
class BoundReport:
    kind: str
    value: float
    maximizing_subset: SubsetSpec | None
    inputs: dict = field(default_factory=dict)
    degenerate: bool = False

    def to_dict(self):
        return {
            "kind": self.kind,
            "value": self.value,
            "maximizing_subset": None
            if self.maximizing_subset is None
            else self.maximizing_subset.to_dict(),
            "inputs": self.inputs,
            "degenerate": self.degenerate,
        }


def _inputs(mu, m, K, **extra):
    return {"mu": [float(v) for v in np.asarray(mu, dtype=float)], "m": int(m), "K": int(K), "copies": 1, **extra}


def dependent_bound(reward: RewardModel, mu, m: int, gap: float) -> BoundReport:
    """``max_I (m - 2K) gamma~^2(mu; I) / (8 N_I gap)``, the per-``ln T`` regret floor.

    For ``m <= 2K`` the bound is reported as 0 with ``degenerate=True``.
    """
    mu = reward.check(mu)
    K = reward.action_size
    if not gap > 0.0:
        raise ValueError(f"gap must be positive, got {gap}")
    inputs = _inputs(mu, m, K, gap=float(gap))
    if m <= 2 * K:
        return BoundReport("dependent", 0.0, None, inputs, degenerate=True)
    subset, per_arm = maximize_over_subsets("modified", "per-arm", reward, mu)
    return BoundReport("dependent", (m - 2 * K) * per_arm / (8.0 * gap), subset, inputs)


def independent_bound(reward: RewardModel, mu, m: int, T: int) -> BoundReport:
    """``max_I (gamma~(mu; I) / 32) sqrt(T (m - K) / N_I)``."""
    mu = reward.check(mu)
    K = reward.action_size
    if m < 3 * K:
        raise ValueError(f"need m >= 3K, got m={m}, K={K}")
    if T < 1:
        raise ValueError(f"horizon must be at least 1, got {T}")
    subset, per_arm = maximize_over_subsets("modified", "per-arm", reward, mu)
    value = math.sqrt(max(per_arm, 0.0)) / 32.0 * math.sqrt(T * (m - K))
    return BoundReport("independent", value, subset, _inputs(mu, m, K, horizon=int(T)))


def sum_copies_bound(base_report: BoundReport, M: int, kind: str | None = None) -> BoundReport:
    """Lift a single-copy bound to a sum of ``M`` identical copies (``M^2`` or ``M``)."""
    kind = base_report.kind if kind is None else kind
    if kind != base_report.kind:
        raise ValueError(f"report is {base_report.kind!r}, not {kind!r}")
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    factor = M * M if kind == "dependent" else M
    inputs = dict(base_report.inputs, copies=int(M) * base_report.inputs.get("copies", 1))
    return replace(base_report, value=base_report.value * factor, inputs=inputs)


@dataclass(frozen=True)
class ScanResult:
    sizes: np.ndarray
    best_p0: np.ndarray
    values: np.ndarray
    slope: float

    def rows(self):
        return [
            {"N": int(n), "p0": float(p), "value": float(v)}
            for n, p, v in zip(self.sizes, self.best_p0, self.values)
        ]


def exp_quadratic_scan(sizes=(1, 4, 16, 64), p0_grid=None) -> ScanResult:
    """Best ``gamma~^2 / N`` over uniform means ``p0`` for the exp-quadratic reward.

    Grid endpoints 0 and 1 are dropped. The slope is a least-squares fit of
    ``log(value)`` against ``log(N)``.
    """
    if p0_grid is None:
        p0_grid = np.geomspace(1e-4, 1.0, 4001)
    p0_grid = np.asarray(p0_grid, dtype=float)
    p0_grid = p0_grid[(p0_grid > 0.0) & (p0_grid < 1.0)]
    sizes = np.asarray(sizes, dtype=int)
    best_p0 = np.empty(sizes.size)
    values = np.empty(sizes.size)
    for k, n in enumerate(sizes):
        reward = ExpQuadratic(int(n))
        scores = np.array([gini_modified(reward, np.full(n, p0)) / n for p0 in p0_grid])
        j = int(np.argmax(scores))
        best_p0[k], values[k] = p0_grid[j], scores[j]
    slope = float(np.polyfit(np.log(sizes), np.log(values), 1)[0])
    return ScanResult(sizes, best_p0, values, slope)
