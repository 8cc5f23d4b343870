"""Ground-truth oracles by exhaustive enumeration on small instances.

Three benchmarks, all exact:

* :func:`offline_opt` - the adaptive optimum that sees every box's type,
  opens in any order it likes, learns (value, cost) only by paying, and
  keeps the best feasible subset at the end. Dynamic program over
  (unopened set, a keep-sufficient statistic of what has been seen).
* :func:`clairvoyant_value` - sees all realized values and costs before
  opening anything and may abstain; an unbeatable upper bound.
* :func:`clairvoyant_take_one_value` - the classical demonstration's
  adversary for keep-one instances: always claims the single best box,
  paying its cost even at a loss. This is the accounting under which the
  identical-boxes family has value 1 - 2^(1-n) while no online algorithm
  can clear zero.

:func:`exact_policy_value` evaluates any deterministic-given-realization
policy over the full support; randomized plans enumerate their weighted
variants. Everything raises :class:`SizeLimitError` beyond desk scale.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

from .model import (
    Instance,
    KeepAtMost,
    KeepKnapsack,
    KeepOne,
    KeepPartition,
    enumerate_realizations,
)

__all__ = [
    "SizeLimitError",
    "offline_opt",
    "clairvoyant_value",
    "clairvoyant_take_one_value",
    "exact_policy_value",
    "MAX_BOXES",
    "MAX_JOINT_ATOMS",
]

MAX_BOXES = 10
MAX_JOINT_ATOMS = 4


class SizeLimitError(ValueError):
    """Instance too large for exhaustive enumeration."""


def _check_limits(instance: Instance) -> None:
    if instance.n > MAX_BOXES:
        raise SizeLimitError(
            f"{instance.n} boxes exceeds the oracle limit of {MAX_BOXES}"
        )
    for i, b in enumerate(instance.boxes):
        atoms = b.joint_atom_count()
        if atoms > MAX_JOINT_ATOMS:
            raise SizeLimitError(
                f"box {i} has {atoms} joint atoms, oracle limit is {MAX_JOINT_ATOMS}"
            )


# --------------------------------------------------------------------------
# Keep statistics: the part of the observed history that matters for the
# final keeping decision, canonicalized for memoization.
# --------------------------------------------------------------------------


def _stat_initial(keep):
    if isinstance(keep, KeepOne):
        return 0.0
    if isinstance(keep, KeepAtMost):
        return ()
    if isinstance(keep, KeepKnapsack):
        return ()
    if isinstance(keep, KeepPartition):
        return ()
    raise TypeError(f"unknown keep constraint {keep!r}")


def _stat_update(keep, stat, t, v: float):
    if v <= 0.0:
        return stat  # worthless prizes never enter an optimal kept set
    if isinstance(keep, KeepOne):
        return max(stat, v)
    if isinstance(keep, KeepAtMost):
        top = sorted(stat + (v,), reverse=True)[: keep.k]
        return tuple(top)
    if isinstance(keep, KeepKnapsack):
        return tuple(sorted(stat + ((v, keep.size_of(t)),)))
    if isinstance(keep, KeepPartition):
        g = keep.group(t)
        return tuple(sorted(stat + ((g, v),)))
    raise TypeError(f"unknown keep constraint {keep!r}")


def _stat_value(keep, stat) -> float:
    if isinstance(keep, KeepOne):
        return stat
    if isinstance(keep, KeepAtMost):
        return math.fsum(stat)
    if isinstance(keep, KeepKnapsack):
        return _best_knapsack(stat, keep.capacity)
    if isinstance(keep, KeepPartition):
        total = 0.0
        by_group: dict[str, list[float]] = {}
        for g, v in stat:
            by_group.setdefault(g, []).append(v)
        for g, vs in by_group.items():
            total += math.fsum(sorted(vs, reverse=True)[: keep.caps[g]])
        return total
    raise TypeError(f"unknown keep constraint {keep!r}")


def _best_knapsack(items: tuple[tuple[float, float], ...], capacity: float) -> float:
    best = 0.0
    for r in range(1, len(items) + 1):
        for combo in itertools.combinations(items, r):
            if math.fsum(s for _, s in combo) <= capacity + 1e-12:
                best = max(best, math.fsum(v for v, _ in combo))
    return best


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------


def _type_profiles(instance: Instance):
    per_box = [box.type_probs for box in instance.boxes]
    for combo in itertools.product(*per_box):
        prob = 1.0
        for _, p in combo:
            prob *= p
        yield prob, tuple(t for t, _ in combo)


def offline_opt(instance: Instance) -> float:
    """Exact expected utility of the adaptive, type-informed optimum."""
    _check_limits(instance)
    keep = instance.keep
    total = 0.0
    for type_prob, types in _type_profiles(instance):
        joints = [instance.boxes[i].per_type[types[i]] for i in range(instance.n)]
        mean_costs = [j.expected_cost() for j in joints]

        @lru_cache(maxsize=None)
        def value(mask: int, stat) -> float:
            best = _stat_value(keep, stat)
            m = mask
            while m:
                bit = m & -m
                i = bit.bit_length() - 1
                m ^= bit
                cont = -mean_costs[i]
                for v, _, p in joints[i]:
                    cont += p * value(mask ^ bit, _stat_update(keep, stat, types[i], v))
                if cont > best:
                    best = cont
            return best

        total += type_prob * value((1 << instance.n) - 1, _stat_initial(keep))
        value.cache_clear()
    return total


def _best_hindsight(instance: Instance, realization) -> float:
    """Best feasible net selection for one realized world, abstention allowed."""
    keep = instance.keep
    nets = [(o.value - o.cost, o.type) for o in realization]
    if isinstance(keep, KeepOne):
        return max(0.0, max(n for n, _ in nets))
    if isinstance(keep, KeepAtMost):
        top = sorted((n for n, _ in nets), reverse=True)[: keep.k]
        return math.fsum(n for n in top if n > 0.0)
    if isinstance(keep, KeepKnapsack):
        items = tuple((n, keep.size_of(t)) for n, t in nets if n > 0.0)
        return _best_knapsack(items, keep.capacity)
    if isinstance(keep, KeepPartition):
        by_group: dict[str, list[float]] = {}
        for n, t in nets:
            if n > 0.0:
                by_group.setdefault(keep.group(t), []).append(n)
        return math.fsum(
            math.fsum(sorted(vs, reverse=True)[: keep.caps[g]])
            for g, vs in by_group.items()
        )
    raise TypeError(f"unknown keep constraint {keep!r}")


def clairvoyant_value(instance: Instance) -> float:
    """E[best feasible hindsight selection]; dominates every other benchmark."""
    _check_limits(instance)
    return math.fsum(
        p * _best_hindsight(instance, r) for p, r in enumerate_realizations(instance)
    )


def clairvoyant_take_one_value(instance: Instance) -> float:
    """E[max_i (v_i - c_i)]: the adversary that always claims one box.

    Keep-one instances only. Unlike :func:`clairvoyant_value` it cannot
    abstain, so on a realization where every box nets a loss it still pays
    for the least bad one; that is the accounting behind the classical
    identical-boxes gap table.
    """
    _check_limits(instance)
    if not isinstance(instance.keep, KeepOne):
        raise ValueError("take-one accounting is defined for keep-one instances")
    return math.fsum(
        p * max(o.value - o.cost for o in r)
        for p, r in enumerate_realizations(instance)
    )


def exact_policy_value(policy, instance: Instance) -> float:
    """Expected utility of a policy, exact over the full support.

    The policy must expose ``trace(instance, realization)`` deterministic
    given the realization, and ``variants()`` enumerating weighted
    deterministic variants when it randomizes (weights summing to one).
    """
    _check_limits(instance)
    total = 0.0
    for weight, variant in policy.variants():
        total += weight * math.fsum(
            p * variant.trace(instance, r).utility
            for p, r in enumerate_realizations(instance)
        )
    return total
