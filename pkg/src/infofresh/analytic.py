"""Exact renewal-reward evaluation and the exhaustive ground-truth oracle.

For any fixed waiting function the age process regenerates at deliveries,
so the long-run time average of the penalty equals the expected cycle
reward over the expected cycle length.  That makes small instances exactly
solvable by enumeration, which is what the solver is tested against:
deterministic waits suffice for optimality, so trying every wait vector up
to a cap finds the true optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .service import ServiceTimeDist
from .solver import WaitingFunction, cycle_stats, zero_waiting
from .sources import (
    Affine,
    AgePenalty,
    BinarySymmetric,
    GaussianAR1,
    NegatedMI,
    penalty_value,
)

DEFAULT_ENUMERATION_BUDGET = 10_000_000


class BudgetExceeded(Exception):
    """The candidate space is larger than the enumeration budget allows."""


@dataclass(frozen=True)
class OracleResult:
    best_ratio: float
    best_waiting: WaitingFunction
    enumerated: int


def renewal_average(
    penalty: AgePenalty, dist: ServiceTimeDist, waiting: WaitingFunction
) -> float:
    """Exact long-run time average of p(age) under the given waits."""
    return cycle_stats(penalty, dist, waiting).ratio


def zero_wait_average(penalty: AgePenalty, dist: ServiceTimeDist) -> float:
    """Exact long-run average when every sample is taken at the delivery."""
    return renewal_average(penalty, dist, zero_waiting(dist))


def brute_force_optimum(
    penalty: AgePenalty,
    dist: ServiceTimeDist,
    z_cap: int,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> OracleResult:
    """Minimize the renewal average over all waits Z: support -> {0..z_cap}.

    Evaluates every candidate with the same exact cycle arithmetic as
    ``renewal_average`` (vectorized via penalty prefix sums).  Ties go to
    the lexicographically smallest wait vector ordered by ascending y.
    """
    ys = np.asarray(dist.support, dtype=np.int64)
    ps = np.asarray(dist.probs)
    s = len(ys)
    count = (z_cap + 1) ** s
    if count > budget:
        raise BudgetExceeded(
            f"(z_cap+1)^|support| = {count} exceeds the enumeration budget {budget}"
        )

    top = int(ys.max()) * 2 + z_cap  # exclusive bound on summed ages
    cum = np.zeros(top + 1)
    vals = [penalty_value(penalty, n) for n in range(1, top)]
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("penalty must be finite at every age >= 1")
    cum[2:] = np.cumsum(vals)  # cum[k] = sum of p(n) for 1 <= n < k

    # Row-major grid: the wait for the smallest y varies slowest, so flat
    # order is lexicographic and argmin's first hit is the tie-break winner.
    grid = np.meshgrid(*([np.arange(z_cap + 1)] * s), indexing="ij")
    zmat = np.stack([g.reshape(-1) for g in grid])  # shape (s, count)

    reward = np.zeros(count)
    for j in range(s):
        for k in range(s):
            reward += ps[j] * ps[k] * (cum[ys[j] + zmat[j] + ys[k]] - cum[ys[j]])
    length = dist.mean() + ps @ zmat
    ratio = reward / length
    i = int(np.argmin(ratio))
    best = WaitingFunction({int(y): int(z) for y, z in zip(ys, zmat[:, i])})
    return OracleResult(best_ratio=float(ratio[i]), best_waiting=best, enumerated=count)


def random_instances(count: int, seed: int) -> list[tuple[AgePenalty, ServiceTimeDist]]:
    """Randomized small (penalty, service) instances for solver verification.

    Service supports have 1 to 3 distinct points in 1..6 with a random pmf;
    penalties cycle through negated binary information (q in [0.05, 0.45]),
    negated AR(1) information (a in [0.3, 0.95]), and affine penalties.
    Deterministic given ``seed``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    instances: list[tuple[AgePenalty, ServiceTimeDist]] = []
    for i in range(count):
        size = int(rng.integers(1, 4))
        support = sorted(rng.choice(np.arange(1, 7), size=size, replace=False).tolist())
        raw = rng.random(size) + 0.1
        probs = raw / raw.sum()
        dist = ServiceTimeDist({int(y): float(p) for y, p in zip(support, probs)})
        kind = i % 3
        if kind == 0:
            penalty: AgePenalty = NegatedMI(BinarySymmetric(q=float(rng.uniform(0.05, 0.45))))
        elif kind == 1:
            penalty = NegatedMI(GaussianAR1(a=float(rng.uniform(0.3, 0.95))))
        else:
            penalty = Affine(slope=float(rng.uniform(0.0, 2.0)), intercept=float(rng.uniform(-1.0, 1.0)))
        instances.append((penalty, dist))
    return instances
