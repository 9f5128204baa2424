"""Optimal sampling threshold solver.

The sampler we optimize waits Z(y) steps after each delivery, where y is
the service time of the sample just delivered, then generates the next
sample.  The long-run time average of a non-decreasing age penalty p is a
ratio of expected cycle reward to expected cycle length, and the optimal
policy is a threshold rule: wait until the expected penalty at the next
delivery reaches a threshold beta, which equals the optimal average
itself.  Following Dinkelbach's transform for fractional programs, the
signed slack

    h(c) = min over waits of E[cycle reward] - c * E[cycle length]

is non-increasing in c and changes sign exactly at the optimal ratio, so
a single bisection on c finds beta.  All cycle sums here are exact
accumulations over the finite (y, z, y') grid; nothing is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

from .service import ServiceTimeDist
from .sources import AgePenalty, MarkovSourceModel, NegatedMI, penalty_value

DEFAULT_Z_MAX = 10_000
_MAX_BISECT_ITERS = 200
_BRACKET_SLACK = 1e-9


class ThresholdUnreachable(Exception):
    """The wait condition never triggered within z_max steps.

    Signals a penalty bounded above below the requested threshold; enlarge
    z_max only if the penalty actually grows past the threshold.
    """


class BracketInvalid(Exception):
    """Internal error: the bisection bracket lost its sign guarantee."""


class WaitingFunction(Mapping[int, int]):
    """Deterministic wait (in steps) after a delivery, keyed by service time."""

    __slots__ = ("_waits",)

    def __init__(self, waits: Mapping[int, int]):
        items = sorted(waits.items())
        for y, z in items:
            if z < 0 or int(z) != z:
                raise ValueError(f"waits must be non-negative integers, got Z({y}) = {z!r}")
        self._waits = {int(y): int(z) for y, z in items}

    def __getitem__(self, y: int) -> int:
        return self._waits[y]

    def __iter__(self) -> Iterator[int]:
        return iter(self._waits)

    def __len__(self) -> int:
        return len(self._waits)

    def __repr__(self) -> str:
        body = ", ".join(f"{y}: {z}" for y, z in self._waits.items())
        return f"WaitingFunction({{{body}}})"


def zero_waiting(dist: ServiceTimeDist) -> WaitingFunction:
    """The sample-immediately-on-delivery policy: Z identically 0."""
    return WaitingFunction({y: 0 for y in dist.support})


@dataclass(frozen=True)
class CycleStats:
    """Exact per-cycle expectations for a given waiting function."""

    expected_reward: float
    expected_length: float
    ratio: float


@dataclass(frozen=True)
class SolverResult:
    """Solved threshold; beta equals the optimal time average itself."""

    beta: float
    waiting: WaitingFunction
    h_residual: float
    iterations: int


def optimal_wait(
    penalty: AgePenalty,
    dist: ServiceTimeDist,
    y_prev: int,
    beta: float,
    z_max: int = DEFAULT_Z_MAX,
) -> int:
    """Smallest n >= 0 with E[p(y_prev + n + Y')] >= beta.

    The expectation is non-decreasing in n because p is non-decreasing, so
    the first n scanned that satisfies the condition is the minimizer.
    """
    if y_prev not in dist:
        raise ValueError(f"y_prev = {y_prev} is not in the service support {dist.support}")
    if z_max < 1:
        raise ValueError(f"z_max must be >= 1, got {z_max}")
    for n in range(z_max + 1):
        if dist.expect(lambda y2: penalty_value(penalty, y_prev + n + y2)) >= beta:
            return n
    raise ThresholdUnreachable(
        f"E[p({y_prev} + n + Y')] stayed below beta = {beta} through n = {z_max}; "
        f"the penalty may be bounded above below beta"
    )


def cycle_stats(
    penalty: AgePenalty, dist: ServiceTimeDist, waiting: Mapping[int, int]
) -> CycleStats:
    """Exact expected cycle reward, length, and their ratio.

    One cycle runs from a delivery to the next; conditional on the previous
    service y, the wait z = Z(y), and the next service y', the per-step ages
    are y, y+1, ..., y+z+y'-1 and the cycle length is z + y'.
    """
    ys, ps = dist.support, dist.probs
    zs = []
    for y in ys:
        if y not in waiting:
            raise ValueError(f"waiting function is missing support point {y}")
        zs.append(waiting[y])
    top = max(y + z for y, z in zip(ys, zs)) + max(ys)  # largest exclusive age bound
    cum = [0.0] * (top + 1)
    acc = 0.0
    for n in range(1, top):
        v = penalty_value(penalty, n)
        if not math.isfinite(v):
            raise ValueError(f"penalty is not finite at age {n}; cycle sums require finite values")
        acc += v
        cum[n + 1] = acc
    reward = math.fsum(
        py * py2 * (cum[y + z + y2] - cum[y])
        for y, py, z in zip(ys, ps, zs)
        for y2, py2 in zip(ys, ps)
    )
    length = dist.mean() + math.fsum(py * z for py, z in zip(ps, zs))
    return CycleStats(expected_reward=reward, expected_length=length, ratio=reward / length)


def h_of_c(
    penalty: AgePenalty, dist: ServiceTimeDist, c: float, z_max: int = DEFAULT_Z_MAX
) -> float:
    """Signed slack E[reward] - c * E[length] at the best waits for level c.

    The per-sample minimizer of reward - c*length is the threshold rule at
    beta = c, so this is the exact infimum over stationary waits.  It is
    non-increasing and concave in c, positive below the optimal ratio and
    negative above it.
    """
    waits = {y: optimal_wait(penalty, dist, y, c, z_max) for y in dist.support}
    st = cycle_stats(penalty, dist, waits)
    return st.expected_reward - c * st.expected_length


def solve_beta(
    penalty: AgePenalty,
    dist: ServiceTimeDist,
    tol: float = 1e-10,
    z_max: int = DEFAULT_Z_MAX,
) -> SolverResult:
    """Minimize the time-average penalty over waiting policies.

    Bisects h on [p(y_min), zero-wait ratio]: every cycle's per-step
    penalty is at least p(y_min) since ages never drop below the smallest
    service time, so no policy averages below the lower end, and the upper
    end is achievable.  Stops when the bracket is narrower than ``tol`` and
    returns its midpoint with the corresponding waits.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    lo = penalty_value(penalty, dist.y_min)
    hi = cycle_stats(penalty, dist, zero_waiting(dist)).ratio
    if hi < lo:
        hi = lo  # zero-wait ratio can round a hair below the floor
    h_lo = h_of_c(penalty, dist, lo, z_max)
    if h_lo < -_BRACKET_SLACK * max(1.0, abs(lo)):
        raise BracketInvalid(
            f"h({lo}) = {h_lo} < 0 at the penalty floor; "
            f"this cannot happen for a non-decreasing penalty"
        )
    iterations = 0
    while hi - lo > tol and iterations < _MAX_BISECT_ITERS:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket at floating-point resolution
        if h_of_c(penalty, dist, mid, z_max) >= 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    beta = 0.5 * (lo + hi)
    waiting = WaitingFunction({y: optimal_wait(penalty, dist, y, beta, z_max) for y in dist.support})
    return SolverResult(
        beta=beta,
        waiting=waiting,
        h_residual=h_of_c(penalty, dist, beta, z_max),
        iterations=iterations,
    )


def solve_mi(
    model: MarkovSourceModel,
    dist: ServiceTimeDist,
    tol: float = 1e-10,
    z_max: int = DEFAULT_Z_MAX,
) -> SolverResult:
    """Maximize the time-average information; beta is the optimum itself.

    Runs the penalty solver on the negated information curve and flips the
    sign of beta.  The waiting rule is unchanged: wait until the expected
    information at the next delivery has decayed to beta.
    """
    res = solve_beta(NegatedMI(model), dist, tol=tol, z_max=z_max)
    return SolverResult(
        beta=-res.beta,
        waiting=res.waiting,
        h_residual=res.h_residual,
        iterations=res.iterations,
    )
