"""Instance data model: boxes, constraints, realizations, and traces.

A box draws a type, and conditionally on the type a joint (value, cost)
pair. The searcher sees the type on arrival for free, pays the realized cost
to open, and then decides irrevocably whether to keep the prize. Feasible
kept sets are described by a keep constraint; the open constraint slot
exists for round-structured variants (see the multi-arm module, which owns
its own instance type).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .dist import PROB_TOL, DiscreteDist, JointVC

__all__ = [
    "BoxSpec",
    "Instance",
    "KeepOne",
    "KeepAtMost",
    "KeepKnapsack",
    "KeepPartition",
    "BoxOutcome",
    "Realization",
    "PolicyTrace",
    "enumerate_realizations",
    "draw_realization",
    "validate_trace",
]

TypeLabel = str | int


@dataclass(frozen=True)
class BoxSpec:
    """One box: a type distribution plus a per-type (value, cost) joint."""

    type_probs: tuple[tuple[TypeLabel, float], ...]
    per_type: Mapping[TypeLabel, JointVC]

    def __init__(
        self,
        type_probs: Iterable[tuple[TypeLabel, float]],
        per_type: Mapping[TypeLabel, JointVC],
    ):
        tp = tuple((t, float(p)) for t, p in type_probs)
        if not tp:
            raise ValueError("box needs at least one type")
        total = math.fsum(p for _, p in tp)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"type probabilities sum to {total!r}, expected 1")
        seen = set()
        for t, p in tp:
            if p <= 0.0:
                raise ValueError(f"type {t!r} has nonpositive probability")
            if t in seen:
                raise ValueError(f"duplicate type {t!r}")
            seen.add(t)
            if t not in per_type:
                raise ValueError(f"type {t!r} missing a (value, cost) distribution")
        object.__setattr__(self, "type_probs", tp)
        object.__setattr__(self, "per_type", dict(per_type))

    @classmethod
    def fixed_type(cls, t: TypeLabel, joint: JointVC) -> "BoxSpec":
        return cls([(t, 1.0)], {t: joint})

    @classmethod
    def simple(cls, values: DiscreteDist, cost: float, t: TypeLabel = "x") -> "BoxSpec":
        """Deterministic type, independent deterministic cost."""
        return cls.fixed_type(t, JointVC.independent(values, cost))

    @property
    def types(self) -> tuple[TypeLabel, ...]:
        return tuple(t for t, _ in self.type_probs)

    @property
    def single_type(self) -> TypeLabel:
        if len(self.type_probs) != 1:
            raise ValueError("box does not have a deterministic type")
        return self.type_probs[0][0]

    def joint_atom_count(self) -> int:
        return sum(len(self.per_type[t].atoms) for t in self.types)

    def value_marginal(self) -> DiscreteDist:
        """Type-collapsed law of the value."""
        atoms: list[tuple[float, float]] = []
        for t, pt in self.type_probs:
            for v, _, p in self.per_type[t]:
                atoms.append((v, pt * p))
        return DiscreteDist(atoms)

    def masked_marginal(self, types: set) -> DiscreteDist:
        """Value law with mass outside ``types`` collapsed to an atom at 0.

        Used by constraint-aware threshold builders that only care about
        values arriving under a subset of types.
        """
        atoms: list[tuple[float, float]] = []
        excluded = 0.0
        for t, pt in self.type_probs:
            if t in types:
                for v, _, p in self.per_type[t]:
                    atoms.append((v, pt * p))
            else:
                excluded += pt
        if excluded > 0.0:
            atoms.append((0.0, excluded))
        return DiscreteDist(atoms)

    def outcomes(self) -> Iterator[tuple[float, TypeLabel, float, float]]:
        """Yield (prob, type, value, cost) over the full joint support."""
        for t, pt in self.type_probs:
            for v, c, p in self.per_type[t]:
                yield pt * p, t, v, c

    def sample(self, rng: np.random.Generator) -> tuple[TypeLabel, float, float]:
        """Draw (type, value, cost); one uniform for the type, one for the pair."""
        u = rng.random()
        acc = 0.0
        t = self.type_probs[-1][0]
        for label, pt in self.type_probs:
            acc += pt
            if u < acc:
                t = label
                break
        v, c = self.per_type[t].sample(rng)
        return t, v, c


# --------------------------------------------------------------------------
# Keep constraints. Each one knows how to gate sequential keeping (state,
# can_keep, after_keep) and how to check a final kept set.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KeepOne:
    kind: str = field(default="one", init=False)

    def initial_state(self):
        return 0

    def can_keep(self, state, t: TypeLabel) -> bool:
        return state == 0

    def after_keep(self, state, t: TypeLabel):
        return state + 1

    def kept_feasible(self, types: Sequence[TypeLabel]) -> bool:
        return len(types) <= 1


@dataclass(frozen=True)
class KeepAtMost:
    k: int
    kind: str = field(default="cardinality", init=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("cardinality bound must be >= 1")

    def initial_state(self):
        return 0

    def can_keep(self, state, t: TypeLabel) -> bool:
        return state < self.k

    def after_keep(self, state, t: TypeLabel):
        return state + 1

    def kept_feasible(self, types: Sequence[TypeLabel]) -> bool:
        return len(types) <= self.k


@dataclass(frozen=True)
class KeepKnapsack:
    """Kept boxes must fit a capacity; each type has a fixed size."""

    sizes: Mapping[TypeLabel, float]
    capacity: float
    kind: str = field(default="knapsack", init=False)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        for t, s in self.sizes.items():
            if not (0.0 < s <= self.capacity):
                raise ValueError(f"size of type {t!r} must lie in (0, capacity]")

    def size_of(self, t: TypeLabel) -> float:
        if t not in self.sizes:
            raise ValueError(f"type {t!r} has no size")
        return self.sizes[t]

    def initial_state(self):
        return 0.0

    def can_keep(self, state, t: TypeLabel) -> bool:
        return state + self.size_of(t) <= self.capacity + 1e-12

    def after_keep(self, state, t: TypeLabel):
        return state + self.size_of(t)

    def kept_feasible(self, types: Sequence[TypeLabel]) -> bool:
        return math.fsum(self.size_of(t) for t in types) <= self.capacity + 1e-9


@dataclass(frozen=True)
class KeepPartition:
    """Per-group cardinality caps over disjoint groups of types."""

    group_of: Mapping[TypeLabel, str]
    caps: Mapping[str, int]
    kind: str = field(default="partition", init=False)

    def __post_init__(self):
        for t, g in self.group_of.items():
            if g not in self.caps:
                raise ValueError(f"type {t!r} mapped to unknown group {g!r}")
        for g, cap in self.caps.items():
            if cap < 1:
                raise ValueError(f"group {g!r} cap must be >= 1")

    def group(self, t: TypeLabel) -> str:
        if t not in self.group_of:
            raise ValueError(f"type {t!r} has no group")
        return self.group_of[t]

    def initial_state(self):
        return ()

    def can_keep(self, state, t: TypeLabel) -> bool:
        g = self.group(t)
        return sum(1 for x in state if x == g) < self.caps[g]

    def after_keep(self, state, t: TypeLabel):
        return state + (self.group(t),)

    def kept_feasible(self, types: Sequence[TypeLabel]) -> bool:
        counts: dict[str, int] = {}
        for t in types:
            g = self.group(t)
            counts[g] = counts.get(g, 0) + 1
        return all(n <= self.caps[g] for g, n in counts.items())


KeepConstraint = KeepOne | KeepAtMost | KeepKnapsack | KeepPartition


@dataclass(frozen=True)
class Instance:
    """An ordered arrival sequence of boxes plus constraint descriptors.

    Arrival order is the list order; the adversary fixed it when writing the
    instance. ``open_constraint`` is "none" for every instance handled here
    (round-structured opening lives in the multi-arm model).
    """

    boxes: tuple[BoxSpec, ...]
    keep: KeepConstraint
    open_constraint: str = "none"
    name: str = ""

    def __init__(
        self,
        boxes: Iterable[BoxSpec],
        keep: KeepConstraint,
        open_constraint: str = "none",
        name: str = "",
    ):
        bx = tuple(boxes)
        if not bx:
            raise ValueError("instance needs at least one box")
        if open_constraint != "none":
            raise ValueError("only open_constraint='none' is supported here")
        for i, b in enumerate(bx):
            for t in b.types:
                if isinstance(keep, KeepKnapsack):
                    keep.size_of(t)
                elif isinstance(keep, KeepPartition):
                    keep.group(t)
        object.__setattr__(self, "boxes", bx)
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "open_constraint", open_constraint)
        object.__setattr__(self, "name", name)

    @property
    def n(self) -> int:
        return len(self.boxes)

    def value_marginals(self) -> list[DiscreteDist]:
        return [b.value_marginal() for b in self.boxes]

    def reordered(self, order: Sequence[int]) -> "Instance":
        if sorted(order) != list(range(self.n)):
            raise ValueError("order must be a permutation of box indices")
        return Instance(
            [self.boxes[i] for i in order], self.keep, self.open_constraint, self.name
        )


@dataclass(frozen=True)
class BoxOutcome:
    type: TypeLabel
    value: float
    cost: float


#: One realized world: the revealed outcome of every box, in arrival order.
Realization = tuple[BoxOutcome, ...]


def enumerate_realizations(instance: Instance) -> Iterator[tuple[float, Realization]]:
    """Yield (probability, realization) over the full product support."""
    per_box = [list(b.outcomes()) for b in instance.boxes]
    for combo in itertools.product(*per_box):
        prob = 1.0
        outs = []
        for p, t, v, c in combo:
            prob *= p
            outs.append(BoxOutcome(t, v, c))
        yield prob, tuple(outs)


def draw_realization(instance: Instance, rng: np.random.Generator) -> Realization:
    """Sample one realization, box by box in arrival order."""
    return tuple(BoxOutcome(*b.sample(rng)) for b in instance.boxes)


@dataclass(frozen=True)
class PolicyTrace:
    """Record of one run: opened set S, kept set R, and the utility.

    Utility is sum of kept values minus sum of realized opening costs,
    using the actual drawn costs (not their conditional means).
    """

    opened: tuple[int, ...]
    kept: tuple[int, ...]
    types: tuple[TypeLabel, ...]
    values: tuple[float, ...]  # realized value per opened box, aligned with `opened`
    costs: tuple[float, ...]  # realized cost per opened box, aligned with `opened`
    utility: float

    @classmethod
    def build(
        cls,
        opened: Sequence[int],
        kept: Sequence[int],
        realization: Realization,
    ) -> "PolicyTrace":
        opened = tuple(opened)
        kept = tuple(kept)
        values = tuple(realization[i].value for i in opened)
        costs = tuple(realization[i].cost for i in opened)
        kept_set = set(kept)
        utility = math.fsum(
            realization[i].value for i in kept
        ) - math.fsum(costs)
        return cls(
            opened=opened,
            kept=kept,
            types=tuple(o.type for o in realization),
            values=values,
            costs=costs,
            utility=utility,
        )


def validate_trace(instance: Instance, trace: PolicyTrace) -> None:
    """Raise AssertionError if a trace violates the instance's constraints."""
    opened = set(trace.opened)
    kept = list(trace.kept)
    assert len(opened) == len(trace.opened), "box opened twice"
    assert len(set(kept)) == len(kept), "box kept twice"
    assert set(kept) <= opened, "kept a box that was never opened"
    kept_types = [trace.types[i] for i in kept]
    assert instance.keep.kept_feasible(kept_types), "kept set infeasible"
