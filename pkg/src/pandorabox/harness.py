"""Instance files, seeded experiments, and CSV reports.

Instance files are JSON with a ``kind`` discriminator. Costly-box instances::

    {
      "kind": "pandora",
      "name": "two-coins",
      "boxes": [
        {"type_dist": [["a", 1.0]],
         "per_type": {"a": {"atoms": [[2.0, 1.0, 0.5], [0.0, 1.0, 0.5]]}}}
      ],
      "constraint": {"keep": "one", "open": "none"}
    }

``atoms`` rows are [value, cost, probability]; ``keep`` is one of
``"one"``, ``{"k": 2}``, ``{"knapsack": {"sizes": {type: size}, "C": cap}}``
or ``{"partition": {"groups": {type: group}, "caps": {group: cap}}}``.
Round-structured instances::

    {"kind": "multiarm", "rounds": 4,
     "arms": [{"cost": 0.2, "values": [[1.0, 0.5], [3.0, 0.5]]}]}

Reports are CSV with fixed columns
``instance,policy,trials,seed,mean_utility,ci3_halfwidth,benchmark,benchmark_value,ratio``:
one row per requested benchmark, floats printed with 9 significant digits,
ratio printed as ``n/a`` whenever the benchmark is nonpositive (a
multiplicative guarantee means nothing against a benchmark of zero). For a
fixed seed every output byte is reproducible: trial ``i`` draws its
realization from ``trial_stream(master_seed, i)`` and then flips any plan
coin on the same stream, and the vectorized multi-arm engines use streams
``trial_stream(master_seed, 0..2)`` as documented below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

import numpy as np

from .dist import DiscreteDist, JointVC, trial_stream
from .model import (
    BoxSpec,
    Instance,
    KeepAtMost,
    KeepKnapsack,
    KeepOne,
    KeepPartition,
    draw_realization,
)
from .multiarm import (
    ArmThresholds,
    MultiArmInstance,
    arm_sigmas,
    batch_prophet,
    batch_reduced_policy,
    cap_arms,
    estimate_arm_thresholds,
)
from .oracle import (
    SizeLimitError,
    clairvoyant_value,
    clairvoyant_take_one_value,
    exact_policy_value,
    offline_opt,
)
from .prophet import (
    SingleItemPlan,
    k_uniform_thresholds,
    knapsack_thresholds,
    partition_matroid_thresholds,
    single_item_threshold,
)
from .reduction import PandoraPolicy, reduce_plan
from .reservation import WeitzmanPolicy, cap_instance, sigma_table

__all__ = [
    "InstanceFormatError",
    "parse_instance",
    "load_instance",
    "build_policy",
    "ExperimentConfig",
    "ReportRow",
    "run_experiment",
    "rows_to_csv",
    "PANDORA_POLICIES",
    "PANDORA_BENCHMARKS",
    "MULTIARM_BENCHMARKS",
]

PANDORA_POLICIES = ("single", "k_uniform", "knapsack", "partition", "weitzman_oracle")
PANDORA_BENCHMARKS = ("offline_opt", "clairvoyant", "take_one_clairvoyant", "capped_prophet")
MULTIARM_BENCHMARKS = ("prophet", "capped_prophet")

# Stream indices used by the vectorized multi-arm paths (the scalar costly
# path uses one stream per trial instead).
POLICY_STREAM = 0
PROPHET_STREAM = 1
THRESHOLD_STREAM = 2
PERMUTE_STREAM = 3


class InstanceFormatError(ValueError):
    """Malformed instance file; the message carries the offending field path."""


def _fail(path: str, msg: str):
    raise InstanceFormatError(f"{path}: {msg}")


def _need(obj: dict, key: str, path: str):
    if key not in obj:
        _fail(path, f"missing field {key!r}")
    return obj[key]


def _parse_keep(spec, path: str):
    if spec == "one":
        return KeepOne()
    if not isinstance(spec, dict) or len(spec) != 1:
        _fail(path, "expected 'one' or a single-key object")
    (kind, body), = spec.items()
    try:
        if kind == "k":
            return KeepAtMost(int(body))
        if kind == "knapsack":
            return KeepKnapsack(
                sizes={str(t): float(s) for t, s in _need(body, "sizes", path).items()},
                capacity=float(_need(body, "C", path)),
            )
        if kind == "partition":
            return KeepPartition(
                group_of={str(t): str(g) for t, g in _need(body, "groups", path).items()},
                caps={str(g): int(c) for g, c in _need(body, "caps", path).items()},
            )
    except InstanceFormatError:
        raise
    except (TypeError, ValueError, AttributeError) as e:
        _fail(path, str(e))
    _fail(path, f"unknown keep constraint kind {kind!r}")


def _parse_box(spec, path: str) -> BoxSpec:
    if not isinstance(spec, dict):
        _fail(path, "expected an object")
    type_dist = _need(spec, "type_dist", path)
    per_type_spec = _need(spec, "per_type", path)
    try:
        type_probs = [(str(t), float(p)) for t, p in type_dist]
    except (TypeError, ValueError):
        _fail(f"{path}.type_dist", "expected [[type, prob], ...]")
    per_type = {}
    for t, body in per_type_spec.items():
        apath = f"{path}.per_type[{t!r}].atoms"
        atoms = _need(body, "atoms", apath)
        try:
            per_type[str(t)] = JointVC([(float(v), float(c), float(p)) for v, c, p in atoms])
        except (TypeError, ValueError) as e:
            _fail(apath, str(e))
    try:
        return BoxSpec(type_probs, per_type)
    except ValueError as e:
        _fail(path, str(e))


def parse_instance(text: str) -> Instance | MultiArmInstance:
    """Parse and validate an instance file; see the module docstring."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        _fail("$", "top level must be an object")
    kind = _need(doc, "kind", "$")
    name = str(doc.get("name", ""))
    if kind == "pandora":
        boxes_spec = _need(doc, "boxes", "$")
        if not isinstance(boxes_spec, list) or not boxes_spec:
            _fail("$.boxes", "expected a nonempty list")
        boxes = [_parse_box(b, f"$.boxes[{i}]") for i, b in enumerate(boxes_spec)]
        cspec = _need(doc, "constraint", "$")
        keep = _parse_keep(_need(cspec, "keep", "$.constraint"), "$.constraint.keep")
        open_c = cspec.get("open", "none")
        if open_c != "none":
            _fail("$.constraint.open", "only 'none' is supported for pandora instances")
        try:
            return Instance(boxes, keep, "none", name)
        except ValueError as e:
            _fail("$", str(e))
    if kind == "multiarm":
        arms_spec = _need(doc, "arms", "$")
        costs, dists = [], []
        for i, arm in enumerate(arms_spec):
            apath = f"$.arms[{i}]"
            try:
                costs.append(float(_need(arm, "cost", apath)))
                dists.append(DiscreteDist([(float(v), float(p)) for v, p in _need(arm, "values", apath)]))
            except InstanceFormatError:
                raise
            except (TypeError, ValueError) as e:
                _fail(apath, str(e))
        try:
            return MultiArmInstance(costs, dists, int(_need(doc, "rounds", "$")), name)
        except (TypeError, ValueError) as e:
            _fail("$", str(e))
    _fail("$.kind", f"unknown kind {kind!r}")


def load_instance(path: str | Path) -> Instance | MultiArmInstance:
    p = Path(path)
    inst = parse_instance(p.read_text(encoding="utf-8"))
    if not inst.name:
        object.__setattr__(inst, "name", p.stem)
    return inst


# --------------------------------------------------------------------------
# Policy construction
# --------------------------------------------------------------------------


def build_policy(instance: Instance, policy: str):
    """Build a runnable policy for a costly-box instance.

    Threshold policies are constructed on the capped surrogate instance and
    wrapped by the reduction; the descending-index oracle runs the costly
    instance directly.
    """
    keep = instance.keep
    if policy == "weitzman_oracle":
        return WeitzmanPolicy(instance)
    table = sigma_table(instance)
    capped = cap_instance(instance, table)
    if policy == "single":
        if not isinstance(keep, KeepOne):
            raise ValueError("'single' needs a keep-one instance")
        plan = SingleItemPlan(single_item_threshold(capped.value_marginals()))
    elif policy == "k_uniform":
        if not isinstance(keep, KeepAtMost):
            raise ValueError("'k_uniform' needs a cardinality instance")
        # a bound beyond the box count binds like keeping everything
        plan = k_uniform_thresholds(capped.value_marginals(), min(keep.k, instance.n))
    elif policy == "knapsack":
        plan = knapsack_thresholds(capped)
    elif policy == "partition":
        plan = partition_matroid_thresholds(capped)
    else:
        raise ValueError(f"unknown policy {policy!r} (choose from {PANDORA_POLICIES})")
    return reduce_plan(instance, plan, table)


def default_policy(instance: Instance | MultiArmInstance) -> str:
    if isinstance(instance, MultiArmInstance):
        return "multiarm"
    keep = instance.keep
    if isinstance(keep, KeepOne):
        return "single"
    if isinstance(keep, KeepAtMost):
        return "k_uniform"
    if isinstance(keep, KeepKnapsack):
        return "knapsack"
    return "partition"


# --------------------------------------------------------------------------
# Experiments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    instance_path: str
    policy: str = ""  # empty selects the constraint's natural policy
    trials: int = 10_000
    master_seed: int = 0
    benchmarks: tuple[str, ...] = ()
    out: str | None = None
    permute: str = "none"  # none | reverse | random | worst
    threshold_samples: int = 100_000  # multi-arm threshold estimation

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.permute not in ("none", "reverse", "random", "worst"):
            raise ValueError(f"unknown permute mode {self.permute!r}")


@dataclass(frozen=True)
class ReportRow:
    instance: str
    policy: str
    trials: int
    seed: int
    mean_utility: float
    ci3_halfwidth: float
    benchmark: str
    benchmark_value: float | None
    ratio: float | None


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def rows_to_csv(rows: list[ReportRow]) -> str:
    lines = ["instance,policy,trials,seed,mean_utility,ci3_halfwidth,benchmark,benchmark_value,ratio"]
    for r in rows:
        bench = _fmt(r.benchmark_value) if r.benchmark_value is not None else "n/a"
        ratio = _fmt(r.ratio) if r.ratio is not None else "n/a"
        lines.append(
            f"{r.instance},{r.policy},{r.trials},{r.seed},"
            f"{_fmt(r.mean_utility)},{_fmt(r.ci3_halfwidth)},{r.benchmark},{bench},{ratio}"
        )
    return "\n".join(lines) + "\n"


def _mean_ci(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    if n < 2:
        return mean, math.inf
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1))
    return mean, 3.0 * math.sqrt(var / n)


def mc_policy_value(policy, instance: Instance, trials: int, master_seed: int) -> tuple[float, float]:
    """Seeded Monte Carlo mean and 3-sigma halfwidth of a policy's utility.

    Trial ``i`` draws its realization and then any policy coin from
    ``trial_stream(master_seed, i)``, so single trials can be replayed.
    """
    total = total_sq = 0.0
    for i in range(trials):
        rng = trial_stream(master_seed, i)
        realization = draw_realization(instance, rng)
        u = policy.trace(instance, realization, rng).utility
        total += u
        total_sq += u * u
    return _mean_ci(total, total_sq, trials)


def _apply_permutation(instance: Instance, config: ExperimentConfig) -> Instance:
    if config.permute == "none":
        return instance
    if config.permute == "reverse":
        return instance.reordered(list(range(instance.n))[::-1])
    if config.permute == "random":
        rng = trial_stream(config.master_seed, PERMUTE_STREAM)
        return instance.reordered(list(rng.permutation(instance.n)))
    # worst: exhaustive search for the arrival order minimizing the exact
    # policy value; only meaningful at oracle scale.
    if instance.n > 7:
        raise SizeLimitError("worst-order search is limited to 7 boxes")
    policy_name = config.policy or default_policy(instance)
    worst_order, worst_value = None, math.inf
    for order in permutations(range(instance.n)):
        candidate = instance.reordered(list(order))
        value = exact_policy_value(build_policy(candidate, policy_name), candidate)
        if value < worst_value:
            worst_value, worst_order = value, order
    return instance.reordered(list(worst_order))


def _pandora_benchmark(name: str, instance: Instance) -> float:
    if name == "offline_opt":
        return offline_opt(instance)
    if name == "clairvoyant":
        return clairvoyant_value(instance)
    if name == "take_one_clairvoyant":
        return clairvoyant_take_one_value(instance)
    if name == "capped_prophet":
        capped = cap_instance(instance, sigma_table(instance))
        return clairvoyant_value(capped)
    raise ValueError(f"unknown benchmark {name!r} (choose from {PANDORA_BENCHMARKS})")


def _rows(instance_name, policy_name, config, mean, ci, bench_values) -> list[ReportRow]:
    rows = []
    benches = bench_values or {"none": None}
    for bname, bvalue in benches.items():
        ratio = None
        if bvalue is not None and bvalue > 0.0:
            ratio = mean / bvalue
        rows.append(
            ReportRow(
                instance=instance_name,
                policy=policy_name,
                trials=config.trials,
                seed=config.master_seed,
                mean_utility=mean,
                ci3_halfwidth=ci,
                benchmark=bname,
                benchmark_value=bvalue,
                ratio=ratio,
            )
        )
    return rows


def run_experiment(config: ExperimentConfig) -> list[ReportRow]:
    """Run one seeded experiment and (optionally) write the CSV report.

    Benchmarks are validated against oracle size limits before any trial
    runs; on error nothing is written.
    """
    instance = load_instance(config.instance_path)
    if isinstance(instance, MultiArmInstance):
        rows = _run_multiarm(instance, config)
    else:
        rows = _run_pandora(instance, config)
    if config.out is not None:
        Path(config.out).write_text(rows_to_csv(rows), encoding="utf-8")
    return rows


def _run_pandora(instance: Instance, config: ExperimentConfig) -> list[ReportRow]:
    instance = _apply_permutation(instance, config)
    policy_name = config.policy or default_policy(instance)
    if policy_name == "multiarm":
        raise ValueError("the multiarm policy needs a multiarm instance")
    for b in config.benchmarks:
        if b not in PANDORA_BENCHMARKS:
            raise ValueError(f"unknown benchmark {b!r} (choose from {PANDORA_BENCHMARKS})")
    policy = build_policy(instance, policy_name)
    bench_values = {b: _pandora_benchmark(b, instance) for b in config.benchmarks}
    mean, ci = mc_policy_value(policy, instance, config.trials, config.master_seed)
    return _rows(instance.name, policy_name, config, mean, ci, bench_values)


def _run_multiarm(instance: MultiArmInstance, config: ExperimentConfig) -> list[ReportRow]:
    policy_name = config.policy or "multiarm"
    if policy_name != "multiarm":
        raise ValueError("multiarm instances support only the 'multiarm' policy")
    for b in config.benchmarks:
        if b not in MULTIARM_BENCHMARKS:
            raise ValueError(f"unknown benchmark {b!r} (choose from {MULTIARM_BENCHMARKS})")
    if config.permute != "none":
        raise ValueError("permutation modes apply to pandora instances only")
    capped = cap_arms(instance)
    thresholds = estimate_arm_thresholds(
        capped, config.threshold_samples, seed=_derive_seed(config.master_seed, THRESHOLD_STREAM)
    )
    sigmas = arm_sigmas(instance)
    _, utilities = batch_reduced_policy(
        instance, capped, thresholds, sigmas, config.trials,
        trial_stream(config.master_seed, POLICY_STREAM),
    )
    mean = float(utilities.mean())
    ci = 3.0 * float(utilities.std(ddof=1)) / math.sqrt(config.trials) if config.trials > 1 else math.inf
    bench_values = {}
    for b in config.benchmarks:
        target = instance if b == "prophet" else capped
        _, bu = batch_prophet(target, config.trials, trial_stream(config.master_seed, PROPHET_STREAM))
        bench_values[b] = float(bu.mean())
    return _rows(instance.name, policy_name, config, mean, ci, bench_values)


def _derive_seed(master_seed: int, stream: int) -> int:
    # Threshold estimation takes a seed, not a stream; fold the stream index
    # in deterministically.
    return master_seed * 8 + stream
