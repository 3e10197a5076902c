"""Reward functions of arm means with analytic gradients.

Every model maps a vector of ``K`` Bernoulli means in ``[0, 1]^K`` to a real
reward. Inputs are validated, never clamped. The private ``_value`` and
``_grad`` methods work on the last axis of arbitrarily shaped arrays so the
simulator can score many candidate actions at once.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "RewardModel",
    "Linear",
    "PMCItem",
    "ExpQuadratic",
    "PowerGradient",
    "CenteredQuadratic",
    "SumOfCopies",
    "evaluate",
    "gradient",
    "finite_diff_gradient",
    "make_model",
    "MODEL_NAMES",
]

BOUNDARY_STEP = 1e-7


class RewardModel:
    """Base class for rewards ``r(mu)`` over ``K`` arms.

    Subclasses implement ``_value`` and ``_grad`` on the last axis.
    ``symmetric`` marks models whose value is invariant to any permutation
    of the coordinates, which is what the instance construction relies on.
    """

    name = "reward"
    monotone = True
    symmetric = True

    def __init__(self, action_size: int):
        action_size = int(action_size)
        if action_size < 1:
            raise ValueError(f"action_size must be positive, got {action_size}")
        self.action_size = action_size

    def __repr__(self):
        return f"{type(self).__name__}(action_size={self.action_size})"

    def check(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.action_size,):
            raise ValueError(
                f"{self.name} expects a vector of length {self.action_size}, "
                f"got shape {mu.shape}"
            )
        if not np.all(np.isfinite(mu)) or np.any(mu < 0.0) or np.any(mu > 1.0):
            raise ValueError(f"means must lie in [0, 1], got {mu.tolist()}")
        return mu

    def evaluate(self, mu) -> float:
        return float(self._value(self.check(mu)))

    def gradient(self, mu) -> np.ndarray:
        return self._grad(self.check(mu))

    def evaluate_batch(self, mus) -> np.ndarray:
        """Evaluate along the last axis of ``mus`` (no range validation)."""
        mus = np.asarray(mus, dtype=float)
        if mus.shape[-1] != self.action_size:
            raise ValueError("last axis must have length action_size")
        return self._value(mus)

    def _value(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError


class Linear(RewardModel):
    """``r(mu) = sum_i mu_i``."""

    name = "linear"

    def _value(self, x):
        return x.sum(axis=-1)

    def _grad(self, x):
        return np.ones_like(x)


class PMCItem(RewardModel):
    """Coverage probability of one item: ``1 - prod_j (1 - mu_j)``."""

    name = "pmc-item"

    def _value(self, x):
        return 1.0 - np.prod(1.0 - x, axis=-1)

    def _grad(self, x):
        q = 1.0 - x
        one = np.ones_like(q[..., :1])
        # product over j != i without dividing by q_i (q_i may be zero)
        left = np.cumprod(np.concatenate([one, q[..., :-1]], axis=-1), axis=-1)
        rq = np.flip(q, axis=-1)
        right = np.flip(np.cumprod(np.concatenate([one, rq[..., :-1]], axis=-1), axis=-1), axis=-1)
        return left * right


class ExpQuadratic(RewardModel):
    """``r(mu) = 1 - exp(-sum_i mu_i^2)``."""

    name = "exp-quadratic"

    def _value(self, x):
        return -np.expm1(-np.sum(x * x, axis=-1))

    def _grad(self, x):
        s = np.sum(x * x, axis=-1, keepdims=True)
        return 2.0 * x * np.exp(-s)


class PowerGradient(RewardModel):
    """Weighted linear reward with weights ``2^(K-1), ..., 2, 1``.

    This is the simplest reward whose gradient is ``2^(K-i)`` (1-based ``i``)
    at every point. It is not index invariant, so it is only meant for the
    tightness counterexample and is refused by the instance builders.
    """

    name = "power-gradient"
    symmetric = False

    def __init__(self, action_size: int):
        super().__init__(action_size)
        self.weights = 2.0 ** np.arange(self.action_size - 1, -1, -1, dtype=float)

    def _value(self, x):
        return x @ self.weights

    def _grad(self, x):
        return np.broadcast_to(self.weights, x.shape).copy()


class CenteredQuadratic(RewardModel):
    """``r(mu) = -sum_i (mu_i - 1/2)^2``, a symmetric non-monotone reward."""

    name = "centered-quadratic"
    monotone = False

    def _value(self, x):
        return -np.sum((x - 0.5) ** 2, axis=-1)

    def _grad(self, x):
        return -2.0 * (x - 0.5)


class SumOfCopies(RewardModel):
    """``sum_k base(mu_k)`` over ``copies`` stacked blocks of ``base.action_size`` arms."""

    symmetric = False

    def __init__(self, base: RewardModel, copies: int):
        copies = int(copies)
        if copies < 1:
            raise ValueError(f"copies must be positive, got {copies}")
        super().__init__(base.action_size * copies)
        self.base = base
        self.copies = copies
        self.monotone = base.monotone
        self.name = base.name if copies == 1 else f"{base.name}x{copies}"

    def __repr__(self):
        return f"SumOfCopies({self.base!r}, copies={self.copies})"

    def _blocks(self, x):
        return x.reshape(x.shape[:-1] + (self.copies, self.base.action_size))

    def _value(self, x):
        return self.base._value(self._blocks(x)).sum(axis=-1)

    def _grad(self, x):
        return self.base._grad(self._blocks(x)).reshape(x.shape)


_MODELS = {
    cls.name: cls
    for cls in (Linear, PMCItem, ExpQuadratic, PowerGradient, CenteredQuadratic)
}
MODEL_NAMES = tuple(_MODELS)


def make_model(name: str, action_size: int, copies: int = 1) -> RewardModel:
    """Build a model from its CLI name, wrapping in ``SumOfCopies`` when ``copies > 1``."""
    try:
        cls = _MODELS[name]
    except KeyError:
        raise ValueError(f"unknown reward model {name!r}; choose from {MODEL_NAMES}") from None
    model = cls(action_size)
    if copies != 1:
        model = SumOfCopies(model, copies)
    return model


def evaluate(model: RewardModel, mu) -> float:
    return model.evaluate(mu)


def gradient(model: RewardModel, mu) -> np.ndarray:
    return model.gradient(mu)


def finite_diff_gradient(model: RewardModel, mu, h: float = 1e-5) -> np.ndarray:
    """Central differences, falling back to one-sided ones near the box edges.

    A coordinate within ``h`` of 0 or 1 uses a forward (or backward)
    difference with step ``BOUNDARY_STEP`` so every probe stays in ``[0, 1]``.
    """
    mu = model.check(mu)
    out = np.empty_like(mu)
    for i in range(mu.size):
        up = mu.copy()
        down = mu.copy()
        if mu[i] - h >= 0.0 and mu[i] + h <= 1.0:
            up[i] += h
            down[i] -= h
            out[i] = (model.evaluate(up) - model.evaluate(down)) / (2.0 * h)
        elif mu[i] + BOUNDARY_STEP <= 1.0:
            up[i] += BOUNDARY_STEP
            out[i] = (model.evaluate(up) - model.evaluate(down)) / BOUNDARY_STEP
        else:
            down[i] -= BOUNDARY_STEP
            out[i] = (model.evaluate(up) - model.evaluate(down)) / BOUNDARY_STEP
    return out
