"""Exact arithmetic over finite-support distributions.

Everything downstream (reservation prices, thresholds, brute-force oracles)
relies on supports being finite and small, so expectations, tail
probabilities, and positive-part expectations are computed as exact sums
rather than estimated. Continuous inputs must be quantized by the caller.

Distribution objects are immutable after construction and safe to share
across workers. Random state is always passed in explicitly; see
:func:`trial_stream` for the seeding contract.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DiscreteDist",
    "JointVC",
    "expect",
    "expect_excess",
    "tail",
    "max_tail",
    "trial_stream",
]

#: Tolerance for "probabilities sum to one" at construction time.
PROB_TOL = 1e-12

#: Name of the bit generator behind every stream. Fixed so that results are
#: reproducible across builds; do not change without bumping a major version.
BIT_GENERATOR = "PCG64"


def trial_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Derive the deterministic random stream for one trial.

    The contract: stream ``(master_seed, trial_index)`` is
    ``numpy.random.Generator(PCG64(SeedSequence([master_seed, trial_index])))``.
    SeedSequence hashes its entropy words, so distinct trials get
    statistically independent streams while the same pair always reproduces
    the same draw sequence, bit for bit.
    """
    if master_seed < 0 or trial_index < 0:
        raise ValueError("master_seed and trial_index must be nonnegative")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(master_seed), int(trial_index)]))
    )


def _merge_atoms(pairs: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sort by value and merge duplicates, summing probabilities."""
    merged: dict[float, float] = {}
    for v, p in pairs:
        v = float(v)
        p = float(p)
        if not math.isfinite(v):
            raise ValueError(f"non-finite support value {v!r}")
        if p <= 0.0 or p > 1.0 + PROB_TOL:
            raise ValueError(f"atom probability {p!r} outside (0, 1]")
        merged[v] = merged.get(v, 0.0) + p
    if not merged:
        raise ValueError("distribution needs at least one atom")
    return sorted(merged.items())


@dataclass(frozen=True)
class DiscreteDist:
    """Finite-support distribution over real values.

    Atoms are stored sorted ascending by value with duplicates merged at
    construction. Probabilities must sum to one within ``PROB_TOL``.
    Negative values are permitted; callers that need positivity (the
    multi-arm model does) enforce it themselves.
    """

    atoms: tuple[tuple[float, float], ...]
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __init__(self, atoms: Iterable[tuple[float, float]]):
        merged = _merge_atoms(atoms)
        total = math.fsum(p for _, p in merged)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {PROB_TOL}")
        object.__setattr__(self, "atoms", tuple(merged))
        cum: list[float] = []
        acc = 0.0
        for _, p in merged:
            acc += p
            cum.append(acc)
        cum[-1] = 1.0  # guard searchsorted against rounding at the top
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def point(cls, value: float) -> "DiscreteDist":
        return cls([(value, 1.0)])

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.atoms)

    @property
    def cum_probs(self) -> tuple[float, ...]:
        """Cumulative atom probabilities; the last entry is exactly 1."""
        return self._cum

    @property
    def min_value(self) -> float:
        return self.atoms[0][0]

    @property
    def max_value(self) -> float:
        return self.atoms[-1][0]

    def expect(self) -> float:
        """E[v] as an exact atom sum."""
        return math.fsum(p * v for v, p in self.atoms)

    def expect_excess(self, y: float) -> float:
        """E[(v - y)^+], the expected value in excess of a threshold ``y``.

        Nonincreasing, convex, and piecewise linear in ``y``; equals
        ``expect() - y`` below the support and 0 at or above its maximum.
        """
        return math.fsum(p * (v - y) for v, p in self.atoms if v > y)

    def tail(self, y: float) -> float:
        """Pr[v >= y]."""
        return math.fsum(p for v, p in self.atoms if v >= y)

    def cdf(self, y: float) -> float:
        """Pr[v <= y]."""
        return math.fsum(p for v, p in self.atoms if v <= y)

    def sample(self, rng: np.random.Generator) -> float:
        """Draw one value using a single uniform from ``rng``."""
        u = rng.random()
        return self.atoms[bisect_left(self._cum, u)][0]

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Vectorized draws; equivalent in law to repeated :meth:`sample`."""
        u = rng.random(size)
        idx = np.searchsorted(np.asarray(self._cum), u, side="left")
        return np.asarray(self.values)[idx]

    def shift(self, delta: float) -> "DiscreteDist":
        return DiscreteDist([(v + delta, p) for v, p in self.atoms])

    def cap(self, sigma: float) -> "DiscreteDist":
        """Law of min(v, sigma)."""
        return DiscreteDist([(min(v, sigma), p) for v, p in self.atoms])

    def __iter__(self):
        return iter(self.atoms)


@dataclass(frozen=True)
class JointVC:
    """Joint law of one box's (value, cost) conditional on its type.

    Costs must be nonnegative: the searcher pays to open. Value and cost may
    be correlated; policies only ever see the cost after paying it, so all
    decision logic runs off :meth:`value_marginal` and
    :meth:`expected_cost`.
    """

    atoms: tuple[tuple[float, float, float], ...]
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __init__(self, atoms: Iterable[tuple[float, float, float]]):
        merged: dict[tuple[float, float], float] = {}
        for v, c, p in atoms:
            v, c, p = float(v), float(c), float(p)
            if not (math.isfinite(v) and math.isfinite(c)):
                raise ValueError("non-finite value or cost")
            if c < 0.0:
                raise ValueError(f"negative cost {c!r} not allowed")
            if p <= 0.0 or p > 1.0 + PROB_TOL:
                raise ValueError(f"atom probability {p!r} outside (0, 1]")
            merged[(v, c)] = merged.get((v, c), 0.0) + p
        if not merged:
            raise ValueError("joint distribution needs at least one atom")
        cleaned = [(v, c, p) for (v, c), p in sorted(merged.items())]
        total = math.fsum(p for _, _, p in cleaned)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {PROB_TOL}")
        object.__setattr__(self, "atoms", tuple(cleaned))
        cum: list[float] = []
        acc = 0.0
        for _, _, p in cleaned:
            acc += p
            cum.append(acc)
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def independent(cls, values: DiscreteDist, cost: float) -> "JointVC":
        """Product of a value law and a deterministic cost."""
        return cls([(v, cost, p) for v, p in values.atoms])

    def value_marginal(self) -> DiscreteDist:
        return DiscreteDist([(v, p) for v, _, p in self.atoms])

    def expected_cost(self) -> float:
        return math.fsum(p * c for _, c, p in self.atoms)

    def sample(self, rng: np.random.Generator) -> tuple[float, float]:
        """Draw one (value, cost) pair using a single uniform."""
        u = rng.random()
        v, c, _ = self.atoms[bisect_left(self._cum, u)]
        return v, c

    def __iter__(self):
        return iter(self.atoms)


def expect(d: DiscreteDist) -> float:
    return d.expect()


def expect_excess(d: DiscreteDist, y: float) -> float:
    return d.expect_excess(y)


def tail(d: DiscreteDist, y: float) -> float:
    return d.tail(y)


def max_tail(ds: Sequence[DiscreteDist], y: float) -> float:
    """Pr[max_i v_i >= y] for independent draws, one per distribution.

    The empty collection has max over nothing; by convention the probability
    is 0.
    """
    prod = 1.0
    for d in ds:
        prod *= 1.0 - d.tail(y)
    return 1.0 - prod
