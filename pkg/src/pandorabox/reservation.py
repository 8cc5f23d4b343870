"""Reservation prices, sigma caps, and the classic descending-index policy.

The reservation price of a box with value law ``d`` and expected opening
cost ``c`` is the threshold ``sigma`` at which inspecting is exactly
break-even: E[(v - sigma)^+] = c. The same quantity caps a costly box into
its free surrogate: the box with value min(v, sigma) and cost zero behaves,
in expectation, exactly like the original under any policy that opens only
when sigma clears its keep threshold (see the reduction module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .dist import DiscreteDist, JointVC
from .model import BoxOutcome, BoxSpec, Instance, KeepOne, PolicyTrace, Realization, TypeLabel

__all__ = [
    "solve_sigma",
    "SigmaTable",
    "sigma_table",
    "cap_box",
    "cap_instance",
    "WeitzmanPolicy",
]


def solve_sigma(value_dist: DiscreteDist, expected_cost: float) -> float:
    """Invert E[(v - y)^+] = expected_cost exactly.

    The excess function is piecewise linear with breakpoints at the support,
    so a single scan from the top finds the segment containing the solution
    and inverts it in closed form. Conventions:

    * cost 0 returns the supremum of the support (opening is free, so the
      cap never binds);
    * a cost exceeding E[(v - min)^+] extends along the slope -1 segment to
      sigma = E[v] - cost, which may be negative. A negative sigma means the
      box is never worth opening; downstream policies skip it.
    """
    if expected_cost < 0:
        raise ValueError("expected cost must be nonnegative")
    if expected_cost == 0.0:
        return value_dist.max_value
    atoms = value_dist.atoms
    # Scan segments top down: on [v_j, v_{j+1}) the excess is linear with
    # slope -(probability mass strictly above v_j).
    tail_mass = 0.0
    excess_at = 0.0  # E[(v - y)^+] evaluated at the current breakpoint
    prev_v = atoms[-1][0]
    for v, p in reversed(atoms):
        excess_here = excess_at + tail_mass * (prev_v - v)
        if excess_here >= expected_cost:
            # Solution sits in [v, prev_v): walk back down from prev_v.
            return prev_v - (expected_cost - excess_at) / tail_mass
        excess_at = excess_here
        tail_mass += p
        prev_v = v
    # Below the support the slope is -1 (all mass is in excess).
    return value_dist.expect() - expected_cost


@dataclass(frozen=True)
class SigmaTable:
    """Per-box, per-type reservation prices for one instance."""

    sigmas: tuple[Mapping[TypeLabel, float], ...]

    def sigma(self, box_index: int, t: TypeLabel) -> float:
        by_type = self.sigmas[box_index]
        if t not in by_type:
            raise KeyError(f"no sigma for box {box_index}, type {t!r}")
        return by_type[t]

    def to_jsonable(self) -> list[dict]:
        return [
            {str(t): s for t, s in sorted(by_type.items(), key=lambda kv: str(kv[0]))}
            for by_type in self.sigmas
        ]


def sigma_table(instance: Instance) -> SigmaTable:
    """Solve the reservation price for every (box, type) of an instance."""
    rows = []
    for box in instance.boxes:
        rows.append(
            {
                t: solve_sigma(
                    box.per_type[t].value_marginal(), box.per_type[t].expected_cost()
                )
                for t in box.types
            }
        )
    return SigmaTable(tuple(rows))


def cap_box(box: BoxSpec, sigmas: Mapping[TypeLabel, float]) -> BoxSpec:
    """Zero-cost surrogate: per type, value law becomes min(v, sigma_t).

    The type distribution is unchanged; every capped joint carries cost 0.
    """
    capped = {}
    for t in box.types:
        if t not in sigmas:
            raise ValueError(f"missing sigma for type {t!r}")
        s = sigmas[t]
        capped[t] = JointVC([(min(v, s), 0.0, p) for v, _, p in box.per_type[t]])
    return BoxSpec(box.type_probs, capped)


def cap_instance(instance: Instance, table: SigmaTable) -> Instance:
    boxes = [cap_box(b, table.sigmas[i]) for i, b in enumerate(instance.boxes)]
    return Instance(boxes, instance.keep, instance.open_constraint, instance.name)


class WeitzmanPolicy:
    """Descending reservation-price search for the keep-one setting.

    This is the offline classic: the searcher orders boxes freely, opens in
    order of decreasing sigma, and stops as soon as the best prize in hand
    is at least the largest reservation price among unopened boxes (at an
    exact tie we stop; both branches have equal expected value and stopping
    avoids paying another cost). Used as the exact optimality oracle on
    keep-one instances.
    """

    label = "weitzman_oracle"

    def __init__(self, instance: Instance):
        if not isinstance(instance.keep, KeepOne):
            raise ValueError("the descending-index policy applies to keep-one only")
        self.instance = instance
        self._sigma = []
        for box in instance.boxes:
            t = box.single_type  # adaptive ordering needs types known up front
            joint = box.per_type[t]
            self._sigma.append(solve_sigma(joint.value_marginal(), joint.expected_cost()))
        # Descending sigma, ties broken by arrival index.
        self.order = sorted(range(instance.n), key=lambda i: (-self._sigma[i], i))

    @property
    def sigma(self) -> list[float]:
        return list(self._sigma)

    def variants(self):
        return [(1.0, self)]

    def trace(self, instance: Instance, realization: Realization, rng=None) -> PolicyTrace:
        best = 0.0
        best_index: int | None = None
        opened: list[int] = []
        for i in self.order:
            if best >= self._sigma[i]:
                break
            opened.append(i)
            v = realization[i].value
            if v > best:
                best = v
                best_index = i
        kept = [best_index] if best_index is not None and best > 0.0 else []
        return PolicyTrace.build(opened, kept, realization)
