"""Seeded random instance generators shared across the test suite.

Values and probabilities come from small grids (quarters and eighths) so
exact enumeration stays numerically clean; probabilities are integer
weights normalized to floats, which sum to 1 well within the construction
tolerance.
"""

from __future__ import annotations

import numpy as np

from pandorabox import (
    BoxSpec,
    DiscreteDist,
    Instance,
    JointVC,
    KeepAtMost,
    KeepKnapsack,
    KeepOne,
    KeepPartition,
)
from pandorabox.multiarm import MultiArmInstance, arm_sigmas
from pandorabox.prophet import FixedTauPlan

VALUE_GRID = np.arange(0, 33) / 4.0  # 0 .. 8 in quarter steps
COST_GRID = np.arange(0, 13) / 4.0  # 0 .. 3


def rand_weights(rng: np.random.Generator, k: int) -> np.ndarray:
    w = rng.integers(1, 9, size=k).astype(float)
    return w / w.sum()


def rand_value_dist(rng: np.random.Generator, max_atoms: int = 4) -> DiscreteDist:
    k = int(rng.integers(1, max_atoms + 1))
    vals = rng.choice(VALUE_GRID, size=k, replace=False)
    return DiscreteDist([(float(v), float(p)) for v, p in zip(vals, rand_weights(rng, k))])


def rand_joint(rng: np.random.Generator, atoms: int) -> JointVC:
    pairs: set[tuple[float, float]] = set()
    while len(pairs) < atoms:
        pairs.add((float(rng.choice(VALUE_GRID)), float(rng.choice(COST_GRID))))
    ordered = sorted(pairs)
    w = rand_weights(rng, len(ordered))
    return JointVC([(v, c, float(p)) for (v, c), p in zip(ordered, w)])


def rand_box(rng: np.random.Generator, index: int, max_atoms: int = 3) -> BoxSpec:
    """Box with one or two types; total joint atoms bounded by max_atoms."""
    ntypes = 1 if (max_atoms < 2 or rng.random() < 0.7) else 2
    labels = [f"t{index}"] if ntypes == 1 else [f"t{index}a", f"t{index}b"]
    budget = int(rng.integers(ntypes, max_atoms + 1))
    per_type = {}
    remaining = budget
    for j, t in enumerate(labels):
        left_for_rest = ntypes - 1 - j
        hi = remaining - left_for_rest
        a = hi if j == ntypes - 1 else int(rng.integers(1, hi + 1))
        remaining -= a
        per_type[t] = rand_joint(rng, a)
    return BoxSpec(list(zip(labels, rand_weights(rng, ntypes))), per_type)


def rand_keep_one_instance(
    rng: np.random.Generator, max_boxes: int = 4, max_atoms: int = 4
) -> Instance:
    n = int(rng.integers(1, max_boxes + 1))
    boxes = []
    for i in range(n):
        k = int(rng.integers(1, max_atoms + 1))
        boxes.append(BoxSpec.fixed_type(f"t{i}", rand_joint(rng, k)))
    return Instance(boxes, KeepOne(), name=f"keepone-{n}")


def rand_constraint(rng: np.random.Generator, types: list, n_boxes: int) -> object:
    kind = rng.choice(["one", "k", "knapsack", "partition"])
    if kind == "one":
        return KeepOne()
    if kind == "k":
        return KeepAtMost(int(rng.integers(1, n_boxes + 1)))
    if kind == "knapsack":
        capacity = 2.0
        sizes = {t: float(rng.choice([0.5, 0.8, 1.2, 2.0])) for t in types}
        return KeepKnapsack(sizes, capacity)
    groups = {t: ("g1" if rng.random() < 0.5 else "g2") for t in types}
    caps = {"g1": 1, "g2": int(rng.integers(1, 3))}
    return KeepPartition(groups, caps)


def rand_general_instance(
    rng: np.random.Generator, max_boxes: int = 5, max_atoms: int = 3
) -> Instance:
    n = int(rng.integers(1, max_boxes + 1))
    boxes = [rand_box(rng, i, max_atoms) for i in range(n)]
    types = sorted({t for b in boxes for t in b.types})
    return Instance(boxes, rand_constraint(rng, types, n), name=f"general-{n}")


TAU_CHOICES = (0.0, 0.25, 0.5, 1.0, 1.5, 2.5, 4.0, float("inf"))


def rand_fixed_plan(rng: np.random.Generator, instance: Instance) -> FixedTauPlan:
    taus = {
        (i, t): float(rng.choice(TAU_CHOICES))
        for i, b in enumerate(instance.boxes)
        for t in b.types
    }
    return FixedTauPlan(instance.keep, taus)


def rand_multiarm_instance(
    rng: np.random.Generator, max_types: int = 4, max_rounds: int = 8
) -> MultiArmInstance:
    """Costly multi-arm instance with every reservation price positive."""
    while True:
        m = int(rng.integers(1, max_types + 1))
        rounds = int(rng.integers(1, max_rounds + 1))
        costs, dists = [], []
        for _ in range(m):
            k = int(rng.integers(2, 4))
            vals = rng.choice(np.arange(2, 21) / 4.0, size=k, replace=False)
            dists.append(
                DiscreteDist([(float(v), float(p)) for v, p in zip(vals, rand_weights(rng, k))])
            )
            costs.append(float(rng.choice([0.1, 0.25, 0.5])))
        inst = MultiArmInstance(costs, dists, rounds)
        if all(s > 0.0 for s in arm_sigmas(inst)):
            return inst


def rand_tiny_multiarm(rng: np.random.Generator) -> MultiArmInstance:
    m = int(rng.integers(1, 3))
    rounds = int(rng.integers(0, 4))
    costs, dists = [], []
    for _ in range(m):
        k = int(rng.integers(1, 4))
        vals = rng.choice(np.arange(1, 13) / 2.0, size=k, replace=False)
        dists.append(
            DiscreteDist([(float(v), float(p)) for v, p in zip(vals, rand_weights(rng, k))])
        )
        costs.append(float(rng.choice([0.0, 0.25, 1.0])))
    return MultiArmInstance(costs, dists, rounds)
