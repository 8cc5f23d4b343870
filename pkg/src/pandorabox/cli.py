"""Command line entry points.

Subcommands:

* ``thresholds``       print the sigma table and the selected plan's thresholds
* ``simulate``         seeded Monte Carlo run of one policy, CSV report
* ``oracle``           exact benchmarks for a small instance
* ``demo-clairvoyant`` the identical-boxes gap table (clairvoyant vs. best online)
* ``compare``          every applicable policy against the exact benchmarks

All output is deterministic given the arguments; ``simulate`` and
``compare`` write byte-reproducible CSV for a fixed ``--seed``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dist import DiscreteDist, JointVC
from .model import BoxSpec, Instance, KeepOne
from .multiarm import MultiArmInstance, arm_sigmas, cap_arms, estimate_arm_thresholds
from .oracle import (
    SizeLimitError,
    clairvoyant_take_one_value,
    clairvoyant_value,
    offline_opt,
)
from .harness import (
    MULTIARM_BENCHMARKS,
    PANDORA_BENCHMARKS,
    PANDORA_POLICIES,
    ExperimentConfig,
    InstanceFormatError,
    build_policy,
    default_policy,
    load_instance,
    rows_to_csv,
    run_experiment,
    THRESHOLD_STREAM,
    _derive_seed,
)
from .reduction import PandoraPolicy
from .reservation import sigma_table

_FMT = "{:.9g}".format


def footnote_instance(n: int) -> Instance:
    """n identical boxes: value 0 or 2 with equal odds, opening cost 1."""
    values = DiscreteDist([(0.0, 0.5), (2.0, 0.5)])
    box = BoxSpec.simple(values, 1.0)
    return Instance([box] * n, KeepOne(), name=f"identical-{n}")


def _cmd_demo_clairvoyant(args) -> int:
    n_max = args.n
    if n_max < 2:
        print("n must be at least 2", file=sys.stderr)
        return 1
    print("identical coin-boxes: value 0 or 2 (p=1/2 each), opening cost 1, keep one")
    print(f"{'n':>3}  {'clairvoyant':>13}  {'offline_opt':>12}  {'gap':>13}")
    for n in range(2, n_max + 1):
        inst = footnote_instance(n)
        cv = clairvoyant_take_one_value(inst)
        opt = offline_opt(inst)
        print(f"{n:>3}  {_FMT(cv):>13}  {_FMT(opt):>12}  {_FMT(cv - opt):>13}")
    print("no online or offline non-clairvoyant search clears zero here;")
    print("the clairvoyant gap approaches 1, so no competitive ratio exists.")
    return 0


def _cmd_thresholds(args) -> int:
    instance = load_instance(args.instance)
    if isinstance(instance, MultiArmInstance):
        sigmas = arm_sigmas(instance)
        print(f"instance {instance.name}: multiarm, m={instance.m}, rounds={instance.rounds}")
        for t, s in enumerate(sigmas):
            print(f"  arm {t}: cost {_FMT(instance.costs[t])}, sigma {_FMT(s)}")
        capped = cap_arms(instance)
        thresholds = estimate_arm_thresholds(
            capped, args.threshold_samples, seed=_derive_seed(args.seed, THRESHOLD_STREAM)
        )
        print(f"thresholds from {thresholds.sample_count} samples, seed {thresholds.seed}:")
        for t in range(instance.m):
            print(
                f"  arm {t}: tau {_FMT(thresholds.taus[t])}"
                f" (half of prophet take {_FMT(thresholds.prophet_value_estimates[t])},"
                f" ci3 {_FMT(thresholds.ci_halfwidths[t])})"
            )
        return 0
    table = sigma_table(instance)
    policy_name = args.policy or default_policy(instance)
    print(f"instance {instance.name}: {instance.keep.kind}, {instance.n} boxes")
    print("sigma table (per box, per type):")
    for i, row in enumerate(table.to_jsonable()):
        entries = ", ".join(f"{t}: {_FMT(s)}" for t, s in row.items())
        print(f"  box {i}: {entries}")
    policy = build_policy(instance, policy_name)
    print(f"policy {policy_name}:")
    if isinstance(policy, PandoraPolicy):
        for weight, variant in policy.variants():
            tag = "" if len(policy.variants()) == 1 else f" (weight {_FMT(weight)})"
            print(f"  thresholds{tag}:")
            for i, row in enumerate(variant.plan.taus_jsonable(instance)):
                entries = ", ".join(f"{t}: {_FMT(v)}" for t, v in row.items())
                print(f"    box {i}: {entries}")
    else:
        sig = ", ".join(_FMT(s) for s in policy.sigma)
        print(f"  descending-index order {policy.order}, sigmas [{sig}]")
    return 0


def _cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    if isinstance(instance, MultiArmInstance):
        print("exact oracles apply to pandora instances; use simulate for multiarm", file=sys.stderr)
        return 1
    print(f"instance {instance.name}: {instance.keep.kind}, {instance.n} boxes")
    print(f"offline_opt   {_FMT(offline_opt(instance))}")
    print(f"clairvoyant   {_FMT(clairvoyant_value(instance))}")
    if isinstance(instance.keep, KeepOne):
        print(f"take-one clairvoyant {_FMT(clairvoyant_take_one_value(instance))}")
    return 0


def _cmd_simulate(args) -> int:
    config = ExperimentConfig(
        instance_path=args.instance,
        policy=args.policy,
        trials=args.trials,
        master_seed=args.seed,
        benchmarks=tuple(args.benchmarks.split(",")) if args.benchmarks else (),
        out=args.out,
        permute=args.permute,
        threshold_samples=args.threshold_samples,
    )
    rows = run_experiment(config)
    text = rows_to_csv(rows)
    if args.out:
        print(f"wrote {args.out}")
    sys.stdout.write(text)
    return 0


def _cmd_compare(args) -> int:
    instance = load_instance(args.instance)
    if isinstance(instance, MultiArmInstance):
        policies = ["multiarm"]
        benchmarks = MULTIARM_BENCHMARKS
    else:
        policies = [default_policy(instance)]
        if isinstance(instance.keep, KeepOne):
            policies.append("weitzman_oracle")
        benchmarks = tuple(b for b in PANDORA_BENCHMARKS if b != "take_one_clairvoyant")
    rows = []
    for p in policies:
        config = ExperimentConfig(
            instance_path=args.instance,
            policy=p,
            trials=args.trials,
            master_seed=args.seed,
            benchmarks=benchmarks,
            threshold_samples=args.threshold_samples,
        )
        rows.extend(run_experiment(config))
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    sys.stdout.write(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pandorabox",
        description="Costly-box search policies, reductions, and exact oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-clairvoyant", help="identical-boxes clairvoyance gap table")
    p.add_argument("n", type=int, nargs="?", default=10, help="largest table size (default 10)")
    p.set_defaults(func=_cmd_demo_clairvoyant)

    def common(p, policy=True):
        p.add_argument("--instance", required=True, help="instance JSON path")
        if policy:
            p.add_argument(
                "--policy",
                default="",
                help=f"one of {', '.join(PANDORA_POLICIES)} or multiarm (default by constraint)",
            )
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument(
            "--threshold-samples", type=int, default=100_000,
            help="multiarm threshold estimation samples (default 100000)",
        )

    p = sub.add_parser("thresholds", help="print sigma table and plan thresholds")
    common(p)
    p.set_defaults(func=_cmd_thresholds)

    p = sub.add_parser("oracle", help="exact benchmarks for a small instance")
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("simulate", help="seeded Monte Carlo run, CSV report")
    common(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--benchmarks", default="", help="comma-separated benchmark names")
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument(
        "--permute", default="none", choices=["none", "reverse", "random", "worst"],
        help="arrival-order exploration (default none: file order)",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="all applicable policies vs exact benchmarks")
    common(p, policy=False)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceFormatError, SizeLimitError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
