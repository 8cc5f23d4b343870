"""Threshold policies for free-to-open boxes under keeping constraints.

Every plan here exposes the same interface: a per-(box, type) threshold, a
trial-local feasibility state, and an optional set of weighted variants (the
knapsack plan commits to one of two regimes by coin flip at the start of a
trial). The keep decision is always exactly

    keep  <=>  value >= threshold(box, type)  and  keeping is feasible.

Thresholds are static; adaptivity enters only through feasibility gating.
Plans are immutable and safe to share; all per-trial state lives in the
runner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dist import DiscreteDist
from .model import (
    BoxSpec,
    Instance,
    KeepAtMost,
    KeepConstraint,
    KeepKnapsack,
    KeepOne,
    KeepPartition,
    PolicyTrace,
    Realization,
    TypeLabel,
)

__all__ = [
    "expected_max",
    "single_item_threshold",
    "SingleItemPlan",
    "KUniformPlan",
    "KnapsackPlan",
    "PartitionPlan",
    "FixedTauPlan",
    "k_uniform_thresholds",
    "knapsack_thresholds",
    "partition_matroid_thresholds",
    "run_threshold_policy",
    "ThresholdPolicyRunner",
]


def expected_max(ds: Sequence[DiscreteDist]) -> float:
    """Exact E[max_i v_i] for independent draws via the product of CDFs."""
    if not ds:
        raise ValueError("need at least one distribution")
    support = sorted({v for d in ds for v in d.values})
    total = 0.0
    prev_cdf = 0.0
    for b in support:
        cdf = 1.0
        for d in ds:
            cdf *= d.cdf(b)
        total += b * (cdf - prev_cdf)
        prev_cdf = cdf
    return total


def single_item_threshold(capped: Sequence[DiscreteDist]) -> float:
    """Threshold for the keep-exactly-one policy: half the expected maximum.

    With atomic value laws no threshold hits Pr[max >= tau] = 1/2 exactly,
    and snapping the would-be median to a support breakpoint can lose the
    factor-two guarantee outright (a two-box instance with a heavy upper
    atom already breaks it). Half of E[max] is the standard fix: with the
    keep rule v >= tau,

        E[kept] >= tau * Pr[max >= tau] + (1 - Pr[max >= tau]) * (E[max] - tau)

    equals E[max] / 2 at tau = E[max] / 2 regardless of where the atoms sit.
    Clamped at zero so boxes capped below zero are simply never kept.
    """
    if not capped:
        raise ValueError("need at least one distribution")
    return max(0.0, 0.5 * expected_max(capped))


# --------------------------------------------------------------------------
# Plans
# --------------------------------------------------------------------------


class _PlanBase:
    """Shared no-op variant logic; concrete plans define gating."""

    label: str = "plan"

    def variants(self):
        return [(1.0, self)]

    def resolve(self, rng: np.random.Generator | None):
        return self

    def taus_jsonable(self, instance: Instance) -> list[dict]:
        return [
            {str(t): self.tau(i, t) for t in box.types}
            for i, box in enumerate(instance.boxes)
        ]


@dataclass(frozen=True)
class SingleItemPlan(_PlanBase):
    threshold: float
    label: str = "single"

    def tau(self, i: int, t: TypeLabel) -> float:
        return self.threshold

    def initial_state(self):
        return 0

    def can_keep(self, state, i: int, t: TypeLabel) -> bool:
        return state == 0

    def after_keep(self, state, i: int, t: TypeLabel):
        return state + 1


@dataclass(frozen=True)
class KUniformPlan(_PlanBase):
    k: int
    threshold: float
    label: str = "k_uniform"

    def tau(self, i: int, t: TypeLabel) -> float:
        return self.threshold

    def initial_state(self):
        return 0

    def can_keep(self, state, i: int, t: TypeLabel) -> bool:
        return state < self.k

    def after_keep(self, state, i: int, t: TypeLabel):
        return state + 1


@dataclass(frozen=True)
class _KnapsackRegime(_PlanBase):
    """One committed regime of the knapsack plan.

    Large regime: keep at most one item of size above capacity/2, priced by
    a single-item threshold over the large portions. Small regime: keep
    small items at a price per unit size, within a capacity/2 reserve so the
    knapsack can never overflow.
    """

    constraint: KeepKnapsack
    regime: str  # "large" | "small"
    tau_large: float
    rho: float
    label: str = "knapsack"

    def tau(self, i: int, t: TypeLabel) -> float:
        s = self.constraint.size_of(t)
        large = s > self.constraint.capacity / 2.0
        if self.regime == "large":
            return self.tau_large if large else math.inf
        return math.inf if large else self.rho * s

    def initial_state(self):
        return 0.0

    def can_keep(self, state, i: int, t: TypeLabel) -> bool:
        s = self.constraint.size_of(t)
        if self.regime == "large":
            return state == 0.0
        return state + s <= self.constraint.capacity / 2.0 + 1e-12

    def after_keep(self, state, i: int, t: TypeLabel):
        return state + self.constraint.size_of(t)


@dataclass(frozen=True)
class KnapsackPlan(_PlanBase):
    """Coin-flip mixture of the two knapsack regimes.

    A trial commits to the large regime with probability 1/2 (first draw
    from the trial stream), unless one side is empty, in which case the plan
    collapses to the other regime deterministically.
    """

    large: _KnapsackRegime
    small: _KnapsackRegime
    has_large: bool
    has_small: bool
    label: str = "knapsack"

    def variants(self):
        if not self.has_small:
            return [(1.0, self.large)]
        if not self.has_large:
            return [(1.0, self.small)]
        return [(0.5, self.large), (0.5, self.small)]

    def resolve(self, rng: np.random.Generator | None):
        v = self.variants()
        if len(v) == 1:
            return v[0][1]
        if rng is None:
            raise ValueError("knapsack plan needs a trial rng to commit to a regime")
        return self.large if rng.random() < 0.5 else self.small

    def tau(self, i: int, t: TypeLabel):
        raise ValueError("unresolved knapsack plan; call resolve() or variants()")

    def initial_state(self):
        raise ValueError("unresolved knapsack plan; call resolve() or variants()")


@dataclass(frozen=True)
class PartitionPlan(_PlanBase):
    constraint: KeepPartition
    tau_by_group: Mapping[str, float]
    label: str = "partition"

    def tau(self, i: int, t: TypeLabel) -> float:
        return self.tau_by_group[self.constraint.group(t)]

    def initial_state(self):
        return self.constraint.initial_state()

    def can_keep(self, state, i: int, t: TypeLabel) -> bool:
        return self.constraint.can_keep(state, t)

    def after_keep(self, state, i: int, t: TypeLabel):
        return self.constraint.after_keep(state, t)


@dataclass(frozen=True)
class FixedTauPlan(_PlanBase):
    """Arbitrary per-(box, type) thresholds gated by the instance constraint.

    Mostly a test vehicle: the utility-preservation theorem holds for any
    thresholds, not just the shipped constructions.
    """

    constraint: KeepConstraint
    taus: Mapping[tuple[int, TypeLabel], float]
    label: str = "fixed"

    def tau(self, i: int, t: TypeLabel) -> float:
        return self.taus[(i, t)]

    def initial_state(self):
        return self.constraint.initial_state()

    def can_keep(self, state, i: int, t: TypeLabel) -> bool:
        return self.constraint.can_keep(state, t)

    def after_keep(self, state, i: int, t: TypeLabel):
        return self.constraint.after_keep(state, t)


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def _nonneg_breakpoints(ds: Sequence[DiscreteDist]) -> list[float]:
    return sorted({v for d in ds for v in d.values if v >= 0.0})


def k_uniform_thresholds(capped: Sequence[DiscreteDist], k: int) -> KUniformPlan:
    """Common threshold for keeping up to k items.

    The threshold is the largest support breakpoint at which the expected
    number of clearing values is still at least

        target = max(k - sqrt(2 k ln k), k / 2),

    a concentration-style surrogate for filling most of the k slots without
    overshooting. Candidates below zero are discarded; if nothing qualifies
    the threshold falls back to 0 (keep anything nonnegative).
    """
    n = len(capped)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of boxes {n}")
    target = max(k - math.sqrt(2.0 * k * math.log(k)), k / 2.0)
    best = 0.0
    for b in _nonneg_breakpoints(capped):
        if math.fsum(d.tail(b) for d in capped) >= target:
            best = max(best, b)
    return KUniformPlan(k=k, threshold=best)


def knapsack_thresholds(capped_instance: Instance) -> KnapsackPlan:
    """Two-regime knapsack plan from a capped (zero-cost) instance.

    Types with size above capacity/2 are "large" and compete for a single
    slot under a single-item threshold computed on the large portions of
    the value laws. The rest are "small" and are kept at price rho per unit
    size inside a capacity/2 reserve, rho chosen as the smallest candidate
    price at which the expected total size of clearing small items is at
    most capacity/2.
    """
    keep = capped_instance.keep
    if not isinstance(keep, KeepKnapsack):
        raise ValueError("instance does not carry a knapsack constraint")
    half = keep.capacity / 2.0
    all_types = {t for b in capped_instance.boxes for t in b.types}
    large_types = {t for t in all_types if keep.size_of(t) > half}
    small_types = all_types - large_types

    if large_types:
        large_marginals = [b.masked_marginal(large_types) for b in capped_instance.boxes]
        tau_large = single_item_threshold(large_marginals)
    else:
        tau_large = math.inf

    rho = 0.0
    if small_types:
        candidates = sorted(
            {
                v / keep.size_of(t)
                for b in capped_instance.boxes
                for t in b.types
                if t in small_types
                for v, _, _ in b.per_type[t]
                if v > 0.0
            }
        )

        def clearing_size(price: float) -> float:
            total = 0.0
            for b in capped_instance.boxes:
                for pt_prob, t, v, _ in b.outcomes():
                    if t in small_types and v >= price * keep.size_of(t):
                        total += pt_prob * keep.size_of(t)
            return total

        rho = 0.0
        if clearing_size(0.0) > half:
            rho = (candidates[-1] + 1.0) if candidates else 1.0
            for c in candidates:
                if clearing_size(c) <= half:
                    rho = c
                    break

    large = _KnapsackRegime(constraint=keep, regime="large", tau_large=tau_large, rho=rho)
    small = _KnapsackRegime(constraint=keep, regime="small", tau_large=tau_large, rho=rho)
    return KnapsackPlan(
        large=large,
        small=small,
        has_large=bool(large_types),
        has_small=bool(small_types),
    )


def partition_matroid_thresholds(capped_instance: Instance) -> PartitionPlan:
    """Independent per-group thresholds under a partition matroid.

    Each group runs its own selection over the group members' value
    portions: a single-item threshold when the cap is one, otherwise the
    k-uniform rule with k equal to the cap (clipped to the member count).
    """
    keep = capped_instance.keep
    if not isinstance(keep, KeepPartition):
        raise ValueError("instance does not carry a partition constraint")
    groups: dict[str, set] = {}
    for b in capped_instance.boxes:
        for t in b.types:
            groups.setdefault(keep.group(t), set()).add(t)
    tau_by_group: dict[str, float] = {}
    for g, types in sorted(groups.items(), key=lambda kv: kv[0]):
        members = [
            b.masked_marginal(types)
            for b in capped_instance.boxes
            if any(t in types for t in b.types)
        ]
        cap = keep.caps[g]
        if cap <= 1:
            tau_by_group[g] = single_item_threshold(members)
        else:
            tau_by_group[g] = k_uniform_thresholds(members, min(cap, len(members))).threshold
    for g in keep.caps:
        tau_by_group.setdefault(g, 0.0)
    return PartitionPlan(constraint=keep, tau_by_group=tau_by_group)


# --------------------------------------------------------------------------
# Runner
# --------------------------------------------------------------------------


def run_threshold_policy(
    instance: Instance,
    plan,
    realization: Realization,
    rng: np.random.Generator | None = None,
) -> PolicyTrace:
    """Execute a threshold plan on a zero-cost instance.

    Every box is opened (opening is free); an opened value is kept iff it
    clears its threshold and keeping is feasible. ``rng`` is only consulted
    when the plan randomizes over regimes.
    """
    plan = plan.resolve(rng)
    state = plan.initial_state()
    kept: list[int] = []
    for i, out in enumerate(realization):
        if out.value >= plan.tau(i, out.type) and plan.can_keep(state, i, out.type):
            kept.append(i)
            state = plan.after_keep(state, i, out.type)
    return PolicyTrace.build(list(range(len(realization))), kept, realization)


@dataclass(frozen=True)
class ThresholdPolicyRunner:
    """Adapter giving a plan the generic policy protocol (trace/variants)."""

    plan: object

    @property
    def label(self) -> str:
        return self.plan.label

    def variants(self):
        return [(w, ThresholdPolicyRunner(p)) for w, p in self.plan.variants()]

    def trace(
        self,
        instance: Instance,
        realization: Realization,
        rng: np.random.Generator | None = None,
    ) -> PolicyTrace:
        return run_threshold_policy(instance, self.plan, realization, rng)
