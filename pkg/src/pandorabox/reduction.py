"""Wrap a free-box threshold plan into a policy for costly boxes.

The wrapper inspects a box only when doing so is safe and worthwhile: box i
of type t is opened iff keeping is currently feasible and sigma_i(t) is at
least the plan's threshold tau_i(t). An opened box is kept iff its capped
value min(v_i, sigma_i) clears tau_i(t); since the box was only opened when
sigma_i >= tau_i, a draw at or above the cap is always kept, which is the
commitment property that makes the capped game faithful. Utility is
accounted with the realized value and realized cost.

For any thresholds, the expected utility of the wrapped policy on the
costly instance equals the expected kept value of the plan on the capped
zero-cost instance; the approximation factor of the plan therefore carries
over unchanged.
"""

from __future__ import annotations

import numpy as np

from .model import Instance, PolicyTrace, Realization
from .reservation import SigmaTable

__all__ = ["PandoraPolicy", "reduce_plan", "run_pandora"]


class PandoraPolicy:
    """A threshold plan plus a sigma table, executing on costly boxes."""

    def __init__(self, instance: Instance, plan, sigmas: SigmaTable):
        if len(sigmas.sigmas) != instance.n:
            raise ValueError("sigma table does not cover every box")
        for i, box in enumerate(instance.boxes):
            for t in box.types:
                sigmas.sigma(i, t)  # raises on a missing (box, type) entry
        self.instance = instance
        self.plan = plan
        self.sigmas = sigmas

    @property
    def label(self) -> str:
        return self.plan.label

    def variants(self):
        return [(w, PandoraPolicy(self.instance, p, self.sigmas)) for w, p in self.plan.variants()]

    def trace(
        self,
        instance: Instance,
        realization: Realization,
        rng: np.random.Generator | None = None,
    ) -> PolicyTrace:
        plan = self.plan.resolve(rng)
        state = plan.initial_state()
        opened: list[int] = []
        kept: list[int] = []
        for i, out in enumerate(realization):
            t = out.type
            sigma = self.sigmas.sigma(i, t)
            if not plan.can_keep(state, i, t) or sigma < plan.tau(i, t):
                continue
            opened.append(i)
            if min(out.value, sigma) >= plan.tau(i, t):
                kept.append(i)
                state = plan.after_keep(state, i, t)
        return PolicyTrace.build(opened, kept, realization)


def reduce_plan(instance: Instance, plan, sigmas: SigmaTable) -> PandoraPolicy:
    """Build the costly-box policy from a plan defined on the capped boxes.

    The plan must have been computed from cap_box outputs under the same
    sigma table; the policy re-derives capped values from the table itself
    at run time, so a mismatched table fails loudly at construction (missing
    types) rather than silently shifting thresholds.
    """
    return PandoraPolicy(instance, plan, sigmas)


def run_pandora(
    policy: PandoraPolicy,
    instance: Instance,
    realization: Realization,
    rng: np.random.Generator | None = None,
) -> PolicyTrace:
    """Execute one arrival sequence; see :class:`PandoraPolicy`."""
    return policy.trace(instance, realization, rng)
