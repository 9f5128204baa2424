"""Finite-support distributions of the integer per-sample service times."""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping

import numpy as np

_PROB_SUM_TOL = 1e-12


class ServiceTimeDist:
    """Probability mass function on distinct integer service times >= 1.

    Probabilities must sum to 1 within 1e-12 and are then renormalized
    exactly, so downstream exact sums stay consistent.  Zero service time
    is rejected: every delivery must age a sample by at least one step.

    Instances are immutable and safe to share.  Sampling uses the inverse
    CDF over the sorted support and a caller-owned numpy generator (PCG64
    throughout this package), so sequences replay exactly given a seed.
    """

    __slots__ = ("support", "probs", "_cdf")

    def __init__(self, pmf: Mapping[int, float] | Iterable[tuple[int, float]]):
        pairs = sorted(dict(pmf).items()) if not isinstance(pmf, Mapping) else sorted(pmf.items())
        if not pairs:
            raise ValueError("service distribution needs at least one support point")
        ys = [y for y, _ in pairs]
        ps = [float(p) for _, p in pairs]
        if len(set(ys)) != len(ys):
            raise ValueError("support points must be distinct")
        for y in ys:
            if not (isinstance(y, (int, np.integer)) and y >= 1):
                raise ValueError(f"service times must be integers >= 1, got {y!r}")
        for p in ps:
            if not 0.0 < p <= 1.0:
                raise ValueError(f"probabilities must be in (0, 1], got {p}")
        total = math.fsum(ps)
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, expected 1 within {_PROB_SUM_TOL}")
        self.support: tuple[int, ...] = tuple(int(y) for y in ys)
        self.probs: tuple[float, ...] = tuple(p / total for p in ps)
        self._cdf = np.cumsum(self.probs)

    def __repr__(self) -> str:
        body = ", ".join(f"{y}: {p:g}" for y, p in zip(self.support, self.probs))
        return f"ServiceTimeDist({{{body}}})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ServiceTimeDist):
            return NotImplemented
        return self.support == other.support and self.probs == other.probs

    def __hash__(self) -> int:
        return hash((self.support, self.probs))

    def __contains__(self, y: int) -> bool:
        return y in self.support

    @property
    def y_min(self) -> int:
        return self.support[0]

    @property
    def y_max(self) -> int:
        return self.support[-1]

    def mean(self) -> float:
        """Exact expected service time."""
        return math.fsum(y * p for y, p in zip(self.support, self.probs))

    def expect(self, f: Callable[[int], float]) -> float:
        """Exact expectation of f over the support; +inf terms absorb."""
        return math.fsum(p * f(y) for y, p in zip(self.support, self.probs))

    def sample(self, rng: np.random.Generator) -> int:
        """One draw via inverse CDF; advances ``rng`` by one uniform."""
        return int(self.sample_many(rng, 1)[0])

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` draws via inverse CDF on ``n`` uniforms, in draw order."""
        u = rng.random(n)
        idx = np.searchsorted(self._cdf, u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return np.asarray(self.support, dtype=np.int64)[idx]
