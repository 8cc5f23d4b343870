import math

import numpy as np
import pytest

from pandorabox import (
    BoxSpec,
    DiscreteDist,
    Instance,
    JointVC,
    KeepOne,
    PandoraPolicy,
    ThresholdPolicyRunner,
    cap_instance,
    exact_policy_value,
    offline_opt,
    reduce_plan,
    run_pandora,
    sigma_table,
    trial_stream,
    validate_trace,
)
from pandorabox.model import draw_realization
from pandorabox.prophet import FixedTauPlan, SingleItemPlan
from suitegen import rand_fixed_plan, rand_general_instance, rand_keep_one_instance

TWO_POINT = DiscreteDist([(0.0, 0.5), (2.0, 0.5)])


def single_box_policy(cost: float, tau: float) -> tuple[PandoraPolicy, Instance]:
    inst = Instance([BoxSpec.simple(TWO_POINT, cost)], KeepOne())
    return reduce_plan(inst, SingleItemPlan(tau), sigma_table(inst)), inst


def test_zero_thresholds_open_and_keep_everything_feasible():
    inst = Instance([BoxSpec.simple(TWO_POINT, 0.0)] * 3, KeepOne())
    policy = reduce_plan(inst, SingleItemPlan(0.0), sigma_table(inst))
    for _, r in __import__("pandorabox").enumerate_realizations(inst):
        trace = policy.trace(inst, r)
        assert trace.opened == (0,)  # keep-one: the first box already fills R
        assert trace.kept == (0,)


def test_sigma_below_tau_opens_nothing():
    policy, inst = single_box_policy(cost=1.0, tau=0.5)  # sigma = 0 < tau
    assert exact_policy_value(policy, inst) == 0.0
    trace = policy.trace(inst, draw_realization(inst, trial_stream(0, 0)))
    assert trace.opened == () and trace.utility == 0.0


def test_break_even_boxes_net_zero():
    # cost equals the expected prize: sigma = 0, and a zero threshold opens
    # every box at zero expected gain, matching the online upper bound of 0.
    policy, inst = single_box_policy(cost=1.0, tau=0.0)
    assert exact_policy_value(policy, inst) == pytest.approx(0.0, abs=1e-12)
    policy2, inst2 = single_box_policy(cost=1.0, tau=0.25)
    assert exact_policy_value(policy2, inst2) == 0.0


def test_run_pandora_single_box_expectation():
    policy, inst = single_box_policy(cost=0.5, tau=1.0)  # sigma = 1
    assert exact_policy_value(policy, inst) == pytest.approx(0.5, abs=1e-12)
    policy2, inst2 = single_box_policy(cost=0.5, tau=1.5)
    assert exact_policy_value(policy2, inst2) == 0.0


def test_run_pandora_uses_realized_costs():
    corr = JointVC([(4.0, 2.0, 0.5), (0.0, 0.0, 0.5)])
    inst = Instance([BoxSpec.fixed_type("x", corr)], KeepOne())
    table = sigma_table(inst)  # sigma solves E[(v-y)^+] = 1 (the mean cost)
    policy = reduce_plan(inst, SingleItemPlan(1.0), table)
    for _, r in __import__("pandorabox").enumerate_realizations(inst):
        trace = run_pandora(policy, inst, r)
        assert trace.opened == (0,)
        assert trace.utility == (r[0].value - r[0].cost if trace.kept else -r[0].cost)


def test_missing_sigma_rejected():
    inst = Instance([BoxSpec.simple(TWO_POINT, 0.5)], KeepOne())
    table = sigma_table(Instance([BoxSpec.simple(TWO_POINT, 0.5, t="other")], KeepOne()))
    with pytest.raises(KeyError):
        reduce_plan(inst, SingleItemPlan(0.0), table)


def test_utility_preservation_exact_random_suite():
    """Costly-run value == capped kept value, for arbitrary thresholds."""
    rng = np.random.default_rng(101)
    for _ in range(60):
        inst = rand_general_instance(rng)
        table = sigma_table(inst)
        capped = cap_instance(inst, table)
        plan = rand_fixed_plan(rng, inst)
        lhs = exact_policy_value(reduce_plan(inst, plan, table), inst)
        rhs = exact_policy_value(ThresholdPolicyRunner(plan), capped)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_utility_preservation_exact_built_plans():
    from pandorabox.harness import build_policy, default_policy

    rng = np.random.default_rng(55)
    for _ in range(40):
        inst = rand_general_instance(rng)
        table = sigma_table(inst)
        capped = cap_instance(inst, table)
        policy = build_policy(inst, default_policy(inst))
        lhs = exact_policy_value(policy, inst)
        rhs = exact_policy_value(ThresholdPolicyRunner(policy.plan), capped)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_utility_preservation_statistical_coupled():
    """Larger than oracle scale: couple both runs on the same realizations."""
    rng = np.random.default_rng(7)
    boxes = [
        BoxSpec.fixed_type(f"t{i}", JointVC.independent(
            DiscreteDist([(float(v), float(p)) for v, p in
                          zip(rng.choice(np.arange(0, 21) / 4.0, size=3, replace=False),
                              (0.25, 0.25, 0.5))]),
            float(rng.choice([0.25, 0.5, 1.0])),
        ))
        for i in range(8)
    ]
    inst = Instance(boxes, KeepOne())
    table = sigma_table(inst)
    capped = cap_instance(inst, table)
    policy = reduce_plan(inst, SingleItemPlan(1.0), table)
    runner = ThresholdPolicyRunner(SingleItemPlan(1.0))
    n = 40_000
    diffs = np.empty(n)
    for i in range(n):
        r = draw_realization(inst, trial_stream(606, i))
        capped_r = tuple(
            type(o)(o.type, min(o.value, table.sigma(j, o.type)), 0.0)
            for j, o in enumerate(r)
        )
        diffs[i] = policy.trace(inst, r).utility - runner.trace(capped, capped_r).utility
    ci = 3.0 * diffs.std(ddof=1) / math.sqrt(n)
    assert abs(diffs.mean()) <= ci


def mean_cost_equivalent(inst: Instance) -> Instance:
    """Same value and type laws, but each type's cost collapses to its mean."""
    return Instance(
        [
            BoxSpec(
                box.type_probs,
                {
                    t: JointVC.independent(
                        box.per_type[t].value_marginal(),
                        box.per_type[t].expected_cost(),
                    )
                    for t in box.types
                },
            )
            for box in inst.boxes
        ],
        inst.keep,
    )


def test_cost_equivalence_mean_cost_substitution():
    """One fixed policy earns the same on cost-equivalent box sequences."""
    rng = np.random.default_rng(202)
    for _ in range(40):
        inst = rand_general_instance(rng)
        table = sigma_table(inst)
        plan = rand_fixed_plan(rng, inst)
        equivalent = mean_cost_equivalent(inst)
        for i, box in enumerate(inst.boxes):
            for t in box.types:
                assert sigma_table(equivalent).sigma(i, t) == pytest.approx(
                    table.sigma(i, t), abs=1e-12
                )
        a = exact_policy_value(reduce_plan(inst, plan, table), inst)
        b = exact_policy_value(reduce_plan(equivalent, plan, table), equivalent)
        assert a == pytest.approx(b, abs=1e-9)


def test_approximation_transfer_single_item():
    rng = np.random.default_rng(303)
    for _ in range(30):
        inst = rand_keep_one_instance(rng)
        from pandorabox.harness import build_policy

        value = exact_policy_value(build_policy(inst, "single"), inst)
        opt = offline_opt(inst)
        if opt > 0:
            assert value >= 0.5 * opt - 1e-9


def test_trace_determinism_bit_for_bit():
    rng = np.random.default_rng(404)
    inst = rand_general_instance(rng)
    table = sigma_table(inst)
    plan = rand_fixed_plan(rng, inst)
    policy = reduce_plan(inst, plan, table)

    def one(trial):
        stream = trial_stream(99, trial)
        r = draw_realization(inst, stream)
        return policy.trace(inst, r, stream)

    for trial in range(20):
        assert one(trial) == one(trial)


def test_traces_always_feasible():
    rng = np.random.default_rng(505)
    for _ in range(20):
        inst = rand_general_instance(rng)
        table = sigma_table(inst)
        policy = reduce_plan(inst, rand_fixed_plan(rng, inst), table)
        for i in range(50):
            stream = trial_stream(3, i)
            trace = policy.trace(inst, draw_realization(inst, stream), stream)
            validate_trace(inst, trace)
