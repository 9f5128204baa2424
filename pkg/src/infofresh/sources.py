"""Markov source models, their information-vs-age curves, and age penalties.

A source model knows how much information a sample of age ``delta`` still
carries about the current source state, as a curve r(delta) in bits.  The
curve is non-negative and non-increasing for every model here.  Age
penalties are the non-decreasing scoring functions the solver minimizes;
negating an information curve yields one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class GaussianAR1:
    """First-order autoregressive Gaussian source x[n] = a*x[n-1] + noise.

    ``a`` must lie in (-1, 1); ``sigma2`` is the noise variance.  The
    information curve is -0.5*log2(1 - a^(2*delta)) bits, which is +inf at
    delta = 0 (a real-valued state has infinite absolute entropy).
    """

    a: float
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        if not -1.0 < self.a < 1.0:
            raise ValueError(f"AR(1) coefficient must be in (-1, 1), got {self.a}")
        if not self.sigma2 > 0.0:
            raise ValueError(f"noise variance must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class BinarySymmetric:
    """Binary state flipped each step by an independent Bernoulli(q) bit.

    ``q`` in [0, 1/2].  The information curve is 1 - h((1 - (1-2q)^delta)/2)
    bits with h the binary entropy function; it equals 1 at delta = 0 and
    decays to 0 (identically 0 for delta >= 1 when q = 1/2).
    """

    q: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 0.5:
            raise ValueError(f"flip probability must be in [0, 0.5], got {self.q}")


@dataclass(frozen=True)
class Tabulated:
    """Information curve given directly as a table r(0), r(1), ..., r(max).

    Values must be non-negative and non-increasing.  Ages past the table
    evaluate to 0 (the curve has decayed off the table).
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("tabulated curve needs at least one value")
        if any(v < 0.0 for v in vals):
            raise ValueError("tabulated curve values must be non-negative")
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise ValueError("tabulated curve values must be non-increasing")
        object.__setattr__(self, "values", vals)


MarkovSourceModel = Union[GaussianAR1, BinarySymmetric, Tabulated]


def binary_entropy(x: float) -> float:
    """Binary entropy -x*log2(x) - (1-x)*log2(1-x), with 0*log2(0) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy argument must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def mutual_information(model: MarkovSourceModel, delta: int) -> float:
    """Information (bits) a sample of age ``delta`` retains about the state.

    Non-negative and non-increasing in ``delta``; may be +inf (Gaussian at
    age 0).  Total on valid models.
    """
    if delta < 0:
        raise ValueError(f"age must be non-negative, got {delta}")
    if isinstance(model, GaussianAR1):
        if delta == 0:
            return math.inf
        t = (model.a * model.a) ** delta
        return -0.5 * math.log1p(-t) / _LN2 + 0.0  # +0.0 folds -0.0 (a = 0 case)
    if isinstance(model, BinarySymmetric):
        # 1 - h((1-t)/2) rewritten to avoid cancellation near h = 1:
        #   ((1-t)*log2(1-t) + (1+t)*log2(1+t)) / 2,  t = (1-2q)^delta
        t = (1.0 - 2.0 * model.q) ** delta
        if t >= 1.0:
            return 1.0
        if t < 1e-8:
            # quadratic asymptote; exact to double precision here and, unlike
            # the sum above, monotone through the underflow regime
            return t * t / (2.0 * _LN2)
        return ((1.0 - t) * math.log1p(-t) + (1.0 + t) * math.log1p(t)) / (2.0 * _LN2)
    if isinstance(model, Tabulated):
        if delta < len(model.values):
            return model.values[delta]
        return 0.0
    raise TypeError(f"unknown source model {model!r}")


@dataclass(frozen=True)
class NegatedMI:
    """Penalty p(delta) = -r(delta): non-positive, non-decreasing."""

    model: MarkovSourceModel


@dataclass(frozen=True)
class PenaltyTable:
    """Penalty given as a non-decreasing table, extended by its last value."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("penalty table needs at least one value")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("penalty table values must be non-decreasing")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Affine:
    """Penalty slope*delta + intercept; slope >= 0 keeps it non-decreasing."""

    slope: float
    intercept: float = 0.0

    def __post_init__(self) -> None:
        if self.slope < 0.0:
            raise ValueError(f"slope must be non-negative, got {self.slope}")


AgePenalty = Union[NegatedMI, PenaltyTable, Affine]


def penalty_value(penalty: AgePenalty, delta: int) -> float:
    """Evaluate a penalty at age ``delta`` (non-decreasing in delta)."""
    if delta < 0:
        raise ValueError(f"age must be non-negative, got {delta}")
    if isinstance(penalty, NegatedMI):
        return -mutual_information(penalty.model, delta)
    if isinstance(penalty, PenaltyTable):
        if delta < len(penalty.values):
            return penalty.values[delta]
        return penalty.values[-1]
    if isinstance(penalty, Affine):
        return penalty.slope * delta + penalty.intercept
    raise TypeError(f"unknown penalty {penalty!r}")


def metric_function(metric: "MarkovSourceModel | AgePenalty") -> Callable[[int], float]:
    """Adapt a source model (information curve) or a penalty to delta -> value."""
    if isinstance(metric, (GaussianAR1, BinarySymmetric, Tabulated)):
        return lambda d: mutual_information(metric, d)
    if isinstance(metric, (NegatedMI, PenaltyTable, Affine)):
        return lambda d: penalty_value(metric, d)
    raise TypeError(f"metric must be a source model or an age penalty, got {metric!r}")


def sample_source_path(model: MarkovSourceModel, horizon: int, seed: int) -> np.ndarray:
    """Draw a state path of length ``horizon``, deterministic given ``seed``.

    The chain starts from its stationary distribution.  Tabulated curves
    carry no generative model and are rejected.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be positive, got {horizon}")
    rng = np.random.Generator(np.random.PCG64(seed))
    if isinstance(model, GaussianAR1):
        sigma = math.sqrt(model.sigma2)
        path = np.empty(horizon)
        path[0] = rng.standard_normal() * sigma / math.sqrt(1.0 - model.a * model.a)
        noise = rng.standard_normal(horizon - 1) * sigma
        for n in range(1, horizon):
            path[n] = model.a * path[n - 1] + noise[n - 1]
        return path
    if isinstance(model, BinarySymmetric):
        x0 = int(rng.integers(0, 2))
        flips = (rng.random(horizon - 1) < model.q).astype(np.int64)
        path = np.empty(horizon, dtype=np.int64)
        path[0] = x0
        path[1:] = (x0 + np.cumsum(flips)) % 2
        return path
    raise TypeError(f"cannot sample a path from {type(model).__name__}")
