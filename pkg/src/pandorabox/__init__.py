"""Costly-box search: threshold policies, reductions, and exact oracles.

The library models sequential search where inspecting box i costs c_i and
reveals a prize v_i; the payoff is the value of the kept prizes minus all
inspection costs. Policies for the free-boxes game (thresholds against an
adversarial arrival order) are lifted to costly boxes by capping each box at
its reservation price, preserving expected utility and approximation
factors. Small instances can be checked exactly against brute-force optima.
"""

from .dist import DiscreteDist, JointVC, expect, expect_excess, max_tail, tail, trial_stream
from .model import (
    BoxOutcome,
    BoxSpec,
    Instance,
    KeepAtMost,
    KeepKnapsack,
    KeepOne,
    KeepPartition,
    PolicyTrace,
    draw_realization,
    enumerate_realizations,
    validate_trace,
)
from .reservation import (
    SigmaTable,
    WeitzmanPolicy,
    cap_box,
    cap_instance,
    sigma_table,
    solve_sigma,
)
from .prophet import (
    FixedTauPlan,
    KUniformPlan,
    SingleItemPlan,
    ThresholdPolicyRunner,
    expected_max,
    k_uniform_thresholds,
    knapsack_thresholds,
    partition_matroid_thresholds,
    run_threshold_policy,
    single_item_threshold,
)
from .multiarm import (
    ArmThresholds,
    MultiArmInstance,
    arm_sigmas,
    cap_arms,
    estimate_arm_thresholds,
    run_multiarm_policy,
    simulate_prophet,
)
from .reduction import PandoraPolicy, reduce_plan, run_pandora
from .oracle import (
    SizeLimitError,
    clairvoyant_take_one_value,
    clairvoyant_value,
    exact_policy_value,
    offline_opt,
)
from .harness import (
    ExperimentConfig,
    InstanceFormatError,
    ReportRow,
    build_policy,
    load_instance,
    parse_instance,
    run_experiment,
)

__version__ = "0.1.0"
