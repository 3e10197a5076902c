"""Semi-bandit simulation of baseline strategies on disjoint instances.

Replications run as a batch: every array carries a leading seed axis, but
each seed draws from its own streams, so a seed's trace does not depend on
which other seeds share the batch. A seed spawns three PCG64 streams via
``numpy.random.SeedSequence(seed).spawn(3)``: the shared uniform of the
free block, the common-arm Bernoullis and the exploration coins.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundReport
from .instance import DisjointInstance

__all__ = [
    "STRATEGIES",
    "ArmStats",
    "Strategy",
    "make_strategy",
    "strategy_step",
    "RegretTrace",
    "run_episode",
    "run_episodes",
    "checkpoints",
    "round_robin_regret",
    "Comparison",
    "compare_to_bound",
    "bound_from_instance",
    "write_traces_csv",
]

STRATEGIES = ("oracle", "round-robin", "epsilon-greedy", "cucb", "bcucb")
_BLOCK = 4096


@dataclass
class ArmStats:
    """Per-seed, per-arm pull counts and observation sums."""

    counts: np.ndarray
    sums: np.ndarray
    sumsq: np.ndarray

    @classmethod
    def zeros(cls, n_seeds: int, n_arms: int) -> "ArmStats":
        shape = (n_seeds, n_arms)
        return cls(np.zeros(shape, dtype=np.int64), np.zeros(shape), np.zeros(shape))

    def means(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)

    def variances(self) -> np.ndarray:
        mean = self.means()
        return np.maximum(self.sumsq / np.maximum(self.counts, 1) - mean * mean, 0.0)


class Strategy:
    """Chooses one action index per seed from the running statistics."""

    name = "strategy"
    needs_monotone = False
    forced_init = True

    def __init__(self, instance: DisjointInstance):
        self.instance = instance
        self.reward = instance.reward()
        self.actions = np.asarray(instance.actions, dtype=np.int64)
        self.n_actions = len(instance.actions)

    def select(self, stats: ArmStats, t: int, explore=None) -> np.ndarray:
        n_seeds = stats.counts.shape[0]
        if self.forced_init and t <= self.n_actions:
            return np.full(n_seeds, t - 1, dtype=np.int64)
        return self._select(stats, t, explore)

    def _select(self, stats, t, explore):
        raise NotImplementedError

    def _best(self, arm_values: np.ndarray) -> np.ndarray:
        # argmax picks the lowest index among ties
        scores = self.reward.evaluate_batch(arm_values[:, self.actions])
        return np.argmax(scores, axis=1)


class Oracle(Strategy):
    name = "oracle"
    forced_init = False

    def _select(self, stats, t, explore):
        return np.full(stats.counts.shape[0], self.instance.optimal_index, dtype=np.int64)


class RoundRobin(Strategy):
    name = "round-robin"

    def _select(self, stats, t, explore):
        return np.full(stats.counts.shape[0], (t - 1) % self.n_actions, dtype=np.int64)


class EpsilonGreedy(Strategy):
    """Greedy on empirical means; explores uniformly with probability ``min(1, scale * A / t)``."""

    name = "epsilon-greedy"

    def __init__(self, instance, scale: float = 5.0):
        super().__init__(instance)
        self.scale = scale

    def _select(self, stats, t, explore):
        greedy = self._best(stats.means())
        rate = min(1.0, self.scale * self.n_actions / t)
        coin, pick = explore[:, 0], explore[:, 1]
        random_action = np.minimum((pick * self.n_actions).astype(np.int64), self.n_actions - 1)
        return np.where(coin < rate, random_action, greedy)


class CUCB(Strategy):
    """Hoeffding index ``mean + sqrt(1.5 ln t / n)``, clamped to [0, 1]."""

    name = "cucb"
    needs_monotone = True

    def _bonus(self, stats, t):
        return np.sqrt(1.5 * math.log(t) / stats.counts)

    def _select(self, stats, t, explore):
        return self._best(np.clip(stats.means() + self._bonus(stats, t), 0.0, 1.0))


class BCUCB(CUCB):
    """Empirical-Bernstein index ``mean + sqrt(2 V ln t / n) + 3 ln t / n``."""

    name = "bcucb"

    def _bonus(self, stats, t):
        lt = math.log(t)
        return np.sqrt(2.0 * stats.variances() * lt / stats.counts) + 3.0 * lt / stats.counts


_STRATEGY_CLASSES = {cls.name: cls for cls in (Oracle, RoundRobin, EpsilonGreedy, CUCB, BCUCB)}


def make_strategy(name: str, instance: DisjointInstance) -> Strategy:
    try:
        cls = _STRATEGY_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {STRATEGIES}") from None
    strategy = cls(instance)
    if strategy.needs_monotone and not strategy.reward.monotone:
        raise ValueError(f"{name} needs a monotone reward, {strategy.reward.name} is not")
    return strategy


def strategy_step(strategy: Strategy, stats: ArmStats, t: int, explore=None) -> np.ndarray:
    """Action index per seed at round ``t`` (1-based)."""
    return strategy.select(stats, t, explore)


def checkpoints(T: int) -> np.ndarray:
    """Powers of two up to ``T``, plus ``T`` itself."""
    pts = [1 << k for k in range(int(T).bit_length()) if (1 << k) <= T]
    if pts[-1] != T:
        pts.append(int(T))
    return np.array(pts, dtype=np.int64)


@dataclass
class RegretTrace:
    strategy: str
    horizon: int
    seed: int
    t: np.ndarray
    cumulative_regret: np.ndarray
    instance_ref: str
    bound: dict = field(default_factory=dict)
    arm_counts: np.ndarray | None = None
    arm_means: np.ndarray | None = None

    @property
    def final(self) -> float:
        return float(self.cumulative_regret[-1])

    def rows(self):
        return [(self.seed, int(t), float(r)) for t, r in zip(self.t, self.cumulative_regret)]


def _streams(seed: int):
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(3)]


def run_episodes(instance: DisjointInstance, strategy_name: str, T: int, seeds) -> list:
    """Run one episode per seed and return their regret traces."""
    T = int(T)
    if T < 1:
        raise ValueError(f"horizon must be at least 1, got {T}")
    seeds = [int(s) for s in seeds]
    strategy = make_strategy(strategy_name, instance)
    S = len(seeds)
    n = instance.n_free
    n_common = len(instance.mu_common)
    n_used = n_common + instance.n_actions * n
    free_arms = strategy.actions[:, :n]
    thresholds = np.array(
        [instance.thresholds(a == instance.optimal_index) for a in range(instance.n_actions)]
    )
    mu_common = np.asarray(instance.mu_common, dtype=float)
    gaps = instance.action_gaps()
    streams = [_streams(s) for s in seeds]
    rows = np.arange(S)[:, None]

    stats = ArmStats.zeros(S, n_used)
    marks = checkpoints(T)
    recorded = np.zeros((S, marks.size))
    regret = np.zeros(S)
    mark = 0
    for start in range(0, T, _BLOCK):
        size = min(_BLOCK, T - start)
        u = np.stack([st[0].random(size) for st in streams])
        com = np.stack([st[1].random((size, n_common)) for st in streams])
        exp = np.stack([st[2].random((size, 2)) for st in streams])
        for k in range(size):
            t = start + k + 1
            a = strategy.select(stats, t, exp[:, k])
            arms = free_arms[a]
            obs = (u[:, k, None] <= thresholds[a]).astype(float)
            stats.counts[rows, arms] += 1
            stats.sums[rows, arms] += obs
            stats.sumsq[rows, arms] += obs
            if n_common:
                cobs = (com[:, k] < mu_common).astype(float)
                stats.counts[:, :n_common] += 1
                stats.sums[:, :n_common] += cobs
                stats.sumsq[:, :n_common] += cobs
            regret += gaps[a]
            if t == marks[mark]:
                recorded[:, mark] = regret
                mark += 1

    bound = {k: v for k, v in instance.bound_annotations.items() if k in ("kind", "db_star", "ib_star")}
    ref = instance.fingerprint()
    return [
        RegretTrace(
            strategy=strategy_name,
            horizon=T,
            seed=seeds[i],
            t=marks.copy(),
            cumulative_regret=recorded[i],
            instance_ref=ref,
            bound=bound,
            arm_counts=stats.counts[i].copy(),
            arm_means=stats.means()[i],
        )
        for i in range(S)
    ]


def run_episode(instance: DisjointInstance, strategy_name: str, T: int, seed: int) -> RegretTrace:
    return run_episodes(instance, strategy_name, T, [seed])[0]


def round_robin_regret(T: int, n_actions: int, gap: float, optimal_index: int = 0) -> float:
    """Exact pseudo-regret of cyclic play over ``T`` rounds with one optimal action."""
    optimal_plays = 0 if T <= optimal_index else (T - 1 - optimal_index) // n_actions + 1
    return gap * (T - optimal_plays)


def bound_from_instance(instance: DisjointInstance) -> BoundReport:
    notes = instance.bound_annotations
    kind = notes.get("kind")
    if kind not in ("dependent", "independent"):
        raise ValueError("instance carries no bound annotation")
    value = notes["db_star"] if kind == "dependent" else notes["ib_star"]
    return BoundReport(kind, float(value), None, {"instance_ref": instance.fingerprint()})


@dataclass(frozen=True)
class Comparison:
    n_seeds: int
    horizon: int
    mean: float
    stderr: float
    target: float
    ratio: float
    flag: str

    def to_dict(self):
        return self.__dict__.copy()


def compare_to_bound(traces, bound: BoundReport, low: float = 0.05, high: float = 100.0) -> Comparison:
    """Final-checkpoint regret against ``DB* ln T`` (dependent) or ``IB*`` (independent).

    ``flag`` is ``"ok"`` inside ``[low, high]``, ``"low"``/``"high"``
    outside it, and ``"degenerate"`` when every trace has zero regret.
    """
    traces = list(traces)
    if len(traces) < 10:
        raise ValueError(f"need at least 10 seeds, got {len(traces)}")
    refs = {tr.instance_ref for tr in traces}
    expected = bound.inputs.get("instance_ref")
    if len(refs) != 1 or (expected is not None and refs != {expected}):
        raise ValueError("traces and bound refer to different instances")
    horizons = {tr.horizon for tr in traces}
    if len(horizons) != 1:
        raise ValueError("traces have different horizons")
    T = horizons.pop()
    finals = np.array([tr.final for tr in traces])
    mean = float(finals.mean())
    stderr = float(finals.std(ddof=1) / math.sqrt(finals.size))
    target = bound.value * math.log(T) if bound.kind == "dependent" else bound.value
    ratio = mean / target if target > 0 else math.inf
    if np.all(finals == 0.0):
        flag = "degenerate"
    elif ratio < low:
        flag = "low"
    elif ratio > high:
        flag = "high"
    else:
        flag = "ok"
    return Comparison(len(traces), T, mean, stderr, target, ratio, flag)


def write_traces_csv(traces, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["seed", "t", "cumulative_regret"])
    for tr in traces:
        for seed, t, r in tr.rows():
            writer.writerow([seed, t, repr(r)])
