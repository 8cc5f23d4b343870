"""Round-structured search with typed arms and one open per round.

``J`` rounds, ``m`` arm types; every round at most one box may be opened, a
box of type ``t`` costs ``c_t`` and pays a draw from ``F_t``, and at the end
at most one prize per type counts: the objective is

    sum_t ( max value observed of type t  -  c_t * #opened of type t ).

Two actors are implemented. The benchmark opener ("prophet") must open one
box each round, does so greedily by maximal marginal gain, and afterwards
keeps the best observed prize of each type for free. The threshold policy
commits online: it opens the eligible type with the highest expected
clearing value and keeps a draw iff it strictly exceeds that type's
threshold, retiring the type on success. Thresholds are half of the
prophet's per-type collected value, estimated by seeded simulation.

Randomness is represented by the profile ``w[t][k]``: the value revealed by
the k-th opened box of type t, drawn i.i.d. from ``F_t`` up front. Any
opening strategy's behavior is a deterministic function of the profile,
which is what both the scalar and the vectorized engines consume.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .dist import DiscreteDist, trial_stream
from .reservation import solve_sigma

__all__ = [
    "MultiArmInstance",
    "ArmThresholds",
    "MultiArmTrace",
    "prophet_greedy_step",
    "simulate_prophet",
    "batch_prophet",
    "estimate_arm_thresholds",
    "run_multiarm_policy",
    "batch_policy",
    "exact_greedy_prophet_value",
    "optimal_opening_value",
    "arm_sigmas",
    "cap_arms",
    "batch_reduced_policy",
]


@dataclass(frozen=True)
class MultiArmInstance:
    """Arm types with per-type cost and value law, over J rounds.

    All boxes of a type share one cost and one distribution across rounds,
    and every support value must be strictly positive (a zero prize is
    expressed by not keeping anything).
    """

    costs: tuple[float, ...]
    dists: tuple[DiscreteDist, ...]
    rounds: int
    name: str = ""

    def __init__(
        self,
        costs: Sequence[float],
        dists: Sequence[DiscreteDist],
        rounds: int,
        name: str = "",
    ):
        costs = tuple(float(c) for c in costs)
        dists = tuple(dists)
        if len(costs) != len(dists) or not costs:
            raise ValueError("need one cost per arm type, at least one type")
        if rounds < 0:
            raise ValueError("rounds must be nonnegative")
        for i, c in enumerate(costs):
            if c < 0:
                raise ValueError(f"arm {i} has negative cost")
            if dists[i].min_value <= 0.0:
                raise ValueError(f"arm {i} needs strictly positive support")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "dists", dists)
        object.__setattr__(self, "rounds", int(rounds))
        object.__setattr__(self, "name", name)

    @property
    def m(self) -> int:
        return len(self.costs)


@dataclass(frozen=True)
class ArmThresholds:
    """Per-type thresholds: exactly half the estimated prophet take.

    ``prophet_value_estimates[t]`` is the Monte Carlo mean of the value the
    benchmark opener collects from type t; ``taus[t]`` is half of it. The
    seed and sample count are kept so the estimate can be reproduced, and
    ``ci_halfwidths`` are 3-sigma halfwidths of the per-type means.
    """

    taus: tuple[float, ...]
    prophet_value_estimates: tuple[float, ...]
    sample_count: int
    ci_halfwidths: tuple[float, ...]
    seed: int

    def __post_init__(self):
        for tau, est in zip(self.taus, self.prophet_value_estimates):
            if tau != est / 2.0:
                raise ValueError("threshold must be exactly half the estimate")


@dataclass(frozen=True)
class MultiArmTrace:
    opened: tuple[int | None, ...]  # type opened per round, None for idle rounds
    kept: tuple[tuple[int, float], ...]  # (type, value) pairs
    utility: float


# --------------------------------------------------------------------------
# Profiles
# --------------------------------------------------------------------------

Profile = tuple[tuple[float, ...], ...]  # w[t][k]


def draw_profile(instance: MultiArmInstance, rng: np.random.Generator) -> Profile:
    """Draw w[t][k] for k < rounds, type by type in index order."""
    return tuple(
        tuple(d.sample(rng) for _ in range(instance.rounds)) for d in instance.dists
    )


def enumerate_profiles(instance: MultiArmInstance):
    """Yield (probability, profile) over the full product support.

    Exponential in m * rounds; intended for the tiny exactness checks only.
    """
    per_slot = [list(d.atoms) for d in instance.dists for _ in range(instance.rounds)]
    m, J = instance.m, instance.rounds
    for combo in itertools.product(*per_slot):
        prob = 1.0
        for _, p in combo:
            prob *= p
        vals = [v for v, _ in combo]
        profile = tuple(tuple(vals[t * J : (t + 1) * J]) for t in range(m))
        yield prob, profile


# --------------------------------------------------------------------------
# Benchmark opener
# --------------------------------------------------------------------------


def prophet_greedy_step(instance: MultiArmInstance, bests: Sequence[float]) -> int:
    """Type to open next: maximal marginal gain, ties to the lowest index.

    The marginal gain of opening one more box of type t, were the game to
    end immediately, is E[(v - best_t)^+] - c_t. The opener must open every
    round, so the argmax is taken even when all gains are negative.
    """
    best_t = 0
    best_gain = -math.inf
    for t in range(instance.m):
        gain = instance.dists[t].expect_excess(bests[t]) - instance.costs[t]
        if gain > best_gain:
            best_gain = gain
            best_t = t
    return best_t


def prophet_on_profile(instance: MultiArmInstance, profile: Profile) -> MultiArmTrace:
    """Deterministic greedy run of the benchmark opener on one profile."""
    m = instance.m
    bests = [0.0] * m
    counts = [0] * m
    opened: list[int | None] = []
    for _ in range(instance.rounds):
        t = prophet_greedy_step(instance, bests)
        v = profile[t][counts[t]]
        counts[t] += 1
        if v > bests[t]:
            bests[t] = v
        opened.append(t)
    kept = tuple((t, bests[t]) for t in range(m) if counts[t] > 0 and bests[t] > 0.0)
    utility = math.fsum(bests) - math.fsum(
        instance.costs[t] * counts[t] for t in range(m)
    )
    return MultiArmTrace(tuple(opened), kept, utility)


def simulate_prophet(
    instance: MultiArmInstance, rng: np.random.Generator
) -> MultiArmTrace:
    return prophet_on_profile(instance, draw_profile(instance, rng))


def _type_tables(instance: MultiArmInstance):
    """Per-type lookup tables for the vectorized engines.

    B[t]   best-so-far levels: 0 followed by the support values
    G[t]   marginal gain at each best level
    NB[t]  NB[b, a] = new best level index after observing atom a at level b
    """
    B, G, NB, cums, vals = [], [], [], [], []
    for t in range(instance.m):
        d = instance.dists[t]
        levels = np.array([0.0] + list(d.values))
        B.append(levels)
        G.append(
            np.array([d.expect_excess(b) - instance.costs[t] for b in levels])
        )
        v = np.asarray(d.values)
        nb = np.empty((len(levels), len(v)), dtype=np.int64)
        for bi, b in enumerate(levels):
            for ai, av in enumerate(v):
                nb[bi, ai] = ai + 1 if av > b else bi
        NB.append(nb)
        cums.append(np.asarray(d.cum_probs))
        vals.append(v)
    return B, G, NB, cums, vals


def batch_prophet(
    instance: MultiArmInstance, trials: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized benchmark runs.

    Returns (per_type_values, utilities): the value collected from each type
    (shape trials x m) and the net utility per trial. Statistically
    equivalent to looping :func:`simulate_prophet`, but on its own stream
    layout: atom indices for all (type, round) slots are drawn up front.
    """
    m, J = instance.m, instance.rounds
    B, G, NB, cums, _ = _type_tables(instance)
    w_idx = [
        np.searchsorted(cums[t], rng.random((trials, J)), side="left")
        for t in range(m)
    ]
    best_idx = np.zeros((trials, m), dtype=np.int64)
    counts = np.zeros((trials, m), dtype=np.int64)
    rows = np.arange(trials)
    for _ in range(J):
        gains = np.column_stack([G[t][best_idx[:, t]] for t in range(m)])
        chosen = np.argmax(gains, axis=1)
        for t in range(m):
            mask = chosen == t
            if not mask.any():
                continue
            r = rows[mask]
            atoms = w_idx[t][r, counts[r, t]]
            best_idx[r, t] = NB[t][best_idx[r, t], atoms]
            counts[r, t] += 1
    per_type = np.column_stack([B[t][best_idx[:, t]] for t in range(m)])
    utilities = per_type.sum(axis=1) - counts @ np.asarray(instance.costs)
    return per_type, utilities


def estimate_arm_thresholds(
    instance: MultiArmInstance, n_samples: int = 100_000, seed: int = 0
) -> ArmThresholds:
    """Estimate thresholds by simulating the benchmark opener.

    Each type's threshold is half the sample mean of the value the opener
    collects from that type. Precision is the caller's choice through
    ``n_samples``; the 3-sigma halfwidth of each mean is reported so tests
    can budget for estimation error.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    per_type, _ = batch_prophet(instance, n_samples, trial_stream(seed, 0))
    means = per_type.mean(axis=0)
    if n_samples > 1:
        ci = 3.0 * per_type.std(axis=0, ddof=1) / math.sqrt(n_samples)
    else:
        ci = np.full(instance.m, math.inf)
    return ArmThresholds(
        taus=tuple(x / 2.0 for x in means.tolist()),
        prophet_value_estimates=tuple(means.tolist()),
        sample_count=n_samples,
        ci_halfwidths=tuple(ci.tolist()),
        seed=seed,
    )


# --------------------------------------------------------------------------
# Threshold policy
# --------------------------------------------------------------------------


def _clearing_scores(
    instance: MultiArmInstance, taus: Sequence[float]
) -> list[float]:
    """score_t = E[v 1{v > tau_t}], the expected strictly-clearing value."""
    return [
        math.fsum(p * v for v, p in instance.dists[t].atoms if v > taus[t])
        for t in range(instance.m)
    ]


def policy_on_profile(
    instance: MultiArmInstance, thresholds: ArmThresholds, profile: Profile
) -> MultiArmTrace:
    """Deterministic threshold-policy run on one profile.

    Each round the policy opens, among types whose prize has not yet been
    accepted, the one with the highest expected clearing value (ties to the
    lowest index); if every eligible score is zero it opens nothing. An
    opened draw is kept iff strictly above the type's threshold.
    """
    m = instance.m
    scores = _clearing_scores(instance, thresholds.taus)
    eligible = [True] * m
    counts = [0] * m
    kept: list[tuple[int, float]] = []
    opened: list[int | None] = []
    for _ in range(instance.rounds):
        best_t, best_score = -1, 0.0
        for t in range(m):
            if eligible[t] and scores[t] > best_score:
                best_t, best_score = t, scores[t]
        if best_t < 0:
            opened.append(None)
            continue
        v = profile[best_t][counts[best_t]]
        counts[best_t] += 1
        opened.append(best_t)
        if v > thresholds.taus[best_t]:
            kept.append((best_t, v))
            eligible[best_t] = False
    utility = math.fsum(v for _, v in kept) - math.fsum(
        instance.costs[t] * counts[t] for t in range(m)
    )
    return MultiArmTrace(tuple(opened), tuple(kept), utility)


def run_multiarm_policy(
    instance: MultiArmInstance,
    thresholds: ArmThresholds,
    rng: np.random.Generator,
) -> MultiArmTrace:
    return policy_on_profile(instance, thresholds, draw_profile(instance, rng))


def batch_policy(
    instance: MultiArmInstance,
    thresholds: ArmThresholds,
    trials: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized policy runs; returns (per_type_kept_values, utilities)."""
    m, J = instance.m, instance.rounds
    scores = _clearing_scores(instance, thresholds.taus)
    order = [t for t in sorted(range(m), key=lambda t: (-scores[t], t)) if scores[t] > 0.0]
    _, _, _, cums, vals = _type_tables(instance)
    w_idx = [
        np.searchsorted(cums[t], rng.random((trials, J)), side="left")
        for t in range(m)
    ]
    ptr = np.zeros(trials, dtype=np.int64)  # position in the score order
    counts = np.zeros((trials, m), dtype=np.int64)
    kept = np.zeros((trials, m))
    rows = np.arange(trials)
    for _ in range(J):
        ptr_at_round = ptr.copy()  # a trial opens at most one box per round
        for oi, t in enumerate(order):
            mask = ptr_at_round == oi
            if not mask.any():
                continue
            r = rows[mask]
            atoms = w_idx[t][r, counts[r, t]]
            counts[r, t] += 1
            v = vals[t][atoms]
            cleared = v > thresholds.taus[t]
            kept[r[cleared], t] = v[cleared]
            ptr[r[cleared]] += 1
    utilities = kept.sum(axis=1) - counts @ np.asarray(instance.costs)
    return kept, utilities


# --------------------------------------------------------------------------
# Exact values (tiny instances)
# --------------------------------------------------------------------------


def exact_greedy_prophet_value(instance: MultiArmInstance) -> float:
    """E[utility of the greedy opener], exact over all profiles."""
    return math.fsum(
        p * prophet_on_profile(instance, w).utility
        for p, w in enumerate_profiles(instance)
    )


def optimal_opening_value(instance: MultiArmInstance) -> float:
    """Best achievable opener value by exhaustive dynamic programming.

    The opener must open exactly one box per round (same action set as the
    greedy benchmark) and finally collects the per-type best observations
    minus opening costs. State: per-type best level. Exponential in m; only
    for small sanity instances.
    """
    m = instance.m
    levels = [(0.0,) + d.values for d in instance.dists]
    atoms = [d.atoms for d in instance.dists]

    @lru_cache(maxsize=None)
    def value(j: int, best: tuple[int, ...]) -> float:
        if j == instance.rounds:
            return math.fsum(levels[t][best[t]] for t in range(m))
        out = -math.inf
        for t in range(m):
            step = -instance.costs[t]
            for ai, (v, p) in enumerate(atoms[t]):
                nb = best[:t] + (max(best[t], ai + 1 if v > levels[t][best[t]] else best[t]),) + best[t + 1 :]
                step += p * value(j + 1, nb)
            out = max(out, step)
        return out

    result = value(0, (0,) * m)
    value.cache_clear()
    return result


# --------------------------------------------------------------------------
# Costly layer
# --------------------------------------------------------------------------


def arm_sigmas(instance: MultiArmInstance) -> tuple[float, ...]:
    """Reservation price per arm type."""
    return tuple(
        solve_sigma(instance.dists[t], instance.costs[t]) for t in range(instance.m)
    )


def cap_arms(instance: MultiArmInstance) -> MultiArmInstance:
    """Free surrogate: values capped at the per-type reservation price.

    Requires every sigma to be strictly positive, since arm supports must
    stay positive; an arm whose cost makes its sigma nonpositive is never
    worth opening and should be dropped by the caller.
    """
    sigmas = arm_sigmas(instance)
    capped = []
    for t, s in enumerate(sigmas):
        if s <= 0.0:
            raise ValueError(f"arm {t} has nonpositive reservation price {s!r}")
        capped.append(instance.dists[t].cap(s))
    return MultiArmInstance(
        costs=(0.0,) * instance.m,
        dists=capped,
        rounds=instance.rounds,
        name=instance.name,
    )


def batch_reduced_policy(
    instance: MultiArmInstance,
    capped: MultiArmInstance,
    thresholds: ArmThresholds,
    sigmas: Sequence[float],
    trials: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized costly-layer runs of the reduced threshold policy.

    Opening order comes from the capped instance's clearing scores (a type
    whose reservation price does not clear its threshold scores zero and is
    therefore never opened, which is the commitment gate); an opened draw is
    kept iff its capped value min(v, sigma_t) strictly clears the
    threshold. Utility uses the realized values and the real opening costs.
    Returns (per_type_kept_values, utilities). Net utilities here are
    reported, not guaranteed: the factor-two bound lives on the capped
    zero-cost layer.
    """
    m, J = instance.m, instance.rounds
    scores = _clearing_scores(capped, thresholds.taus)
    order = [t for t in sorted(range(m), key=lambda t: (-scores[t], t)) if scores[t] > 0.0]
    _, _, _, cums, vals = _type_tables(instance)
    w_idx = [
        np.searchsorted(cums[t], rng.random((trials, J)), side="left")
        for t in range(m)
    ]
    ptr = np.zeros(trials, dtype=np.int64)
    counts = np.zeros((trials, m), dtype=np.int64)
    kept = np.zeros((trials, m))
    rows = np.arange(trials)
    for _ in range(J):
        ptr_at_round = ptr.copy()  # a trial opens at most one box per round
        for oi, t in enumerate(order):
            mask = ptr_at_round == oi
            if not mask.any():
                continue
            r = rows[mask]
            atoms = w_idx[t][r, counts[r, t]]
            counts[r, t] += 1
            v = vals[t][atoms]
            cleared = np.minimum(v, sigmas[t]) > thresholds.taus[t]
            kept[r[cleared], t] = v[cleared]
            ptr[r[cleared]] += 1
    utilities = kept.sum(axis=1) - counts @ np.asarray(instance.costs)
    return kept, utilities
