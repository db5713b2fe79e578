"""Transmission scheduling for periodic status updates over a two-state
fading channel: belief-MDP and delayed-CSI solvers, a slot-level simulator,
and an experiment sweep CLI."""

from .channel import (
    Belief,
    BeliefOrigin,
    BeliefTable,
    ChannelModel,
    belief_table,
    m_step_update,
    observed_update,
    one_step_update,
    stationary_good_probability,
)
from .mdp import (
    Case,
    CompiledKernel,
    DelayedSpace,
    FrameSpec,
    NoSensingSpace,
    StateDelayed,
    StateNoSensing,
    TruncationBound,
    aoi_step,
    build_case,
    enumerate_states_delayed,
    enumerate_states_no_sensing,
    kernel_delayed,
    kernel_no_sensing,
    stage_cost,
)
from .sim import GreedyPolicy, SimConfig, SimResult, estimate_mixture, simulate, simulate_greedy
from .solver import (
    MixturePolicy,
    SolveReport,
    TabularPolicy,
    ThresholdPolicyAoI,
    ThresholdPolicyBelief,
    average_energy_of_policy,
    bisect_lambda,
    discounted_vi,
    dual_value_sweep,
    enumerate_and_evaluate,
    policy_averages,
    randomization_factor,
    rvi_plain,
    rvi_threshold_delayed,
    rvi_threshold_no_sensing,
)

__version__ = "0.1.0"
