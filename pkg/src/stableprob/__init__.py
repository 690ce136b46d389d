"""Stable-marriage computations under preference uncertainty.

Three uncertainty models are supported: per-agent lotteries over strict
orders, compact indifference (uniform tie-breaking of weak orders), and a
joint distribution over whole preference profiles. The package computes
exact stability probabilities, answers the certainty and nonzero decision
problems, searches for most stable matchings, and generates hard instances
from classic problems.
"""

from .core import (
    DEFAULT_CAP,
    AgentId,
    LinearOrder,
    Matching,
    Profile,
    Side,
    WeakOrder,
    blocking_pairs,
    enumerate_stable_matchings,
    gale_shapley,
    is_stable,
    is_weakly_stable,
    validate_matching,
)
from .errors import ResourceLimitError, ValidationError
from .models import (
    AgentLottery,
    CompactModel,
    Instance,
    JointModel,
    LotteryModel,
    Padding,
    PartialOrder,
    agent_support,
    as_probability,
    certain_order,
    certainly_preferred,
    complete_instance,
    dominance_set,
    expand_compact_to_lottery,
    format_probability,
    lift_matching,
    lottery_to_joint,
    restrict_matching,
    sample_profile,
    side_is_certain,
    support_size,
    uncertain_agents,
)
from .optimization import (
    MostStableResult,
    most_stable_brute_force,
    most_stable_constant_uncertain,
)
from .probability import (
    ProbabilityEstimate,
    TwoSatInstance,
    build_nonzero_2sat,
    estimate_stability_probability,
    is_stability_probability_nonzero,
    is_stability_probability_one,
    solve_2sat,
    stability_probability,
    stability_probability_compact_one_side_certain,
    stability_probability_exact,
    stability_probability_joint,
    stability_probability_lottery_one_side_certain,
)
from .reductions import (
    Graph,
    UnsupportedFormulaError,
    X3cInstance,
    count2sat_to_lottery,
    three_color_to_joint,
    x3c_to_lottery,
)
from .superstability import (
    SmpInstance,
    exists_certainly_stable_matching,
    is_certainly_stable,
    is_very_weakly_blocking,
    smp_from_instance,
    super_stable_smp,
)

__version__ = "0.1.0"

__all__ = [
    "AgentId",
    "AgentLottery",
    "CompactModel",
    "DEFAULT_CAP",
    "Graph",
    "Instance",
    "JointModel",
    "LinearOrder",
    "LotteryModel",
    "Matching",
    "MostStableResult",
    "Padding",
    "PartialOrder",
    "ProbabilityEstimate",
    "Profile",
    "ResourceLimitError",
    "Side",
    "SmpInstance",
    "TwoSatInstance",
    "UnsupportedFormulaError",
    "ValidationError",
    "WeakOrder",
    "X3cInstance",
    "agent_support",
    "as_probability",
    "blocking_pairs",
    "build_nonzero_2sat",
    "certain_order",
    "certainly_preferred",
    "complete_instance",
    "count2sat_to_lottery",
    "dominance_set",
    "enumerate_stable_matchings",
    "estimate_stability_probability",
    "exists_certainly_stable_matching",
    "expand_compact_to_lottery",
    "format_probability",
    "gale_shapley",
    "is_certainly_stable",
    "is_stability_probability_nonzero",
    "is_stability_probability_one",
    "is_stable",
    "is_very_weakly_blocking",
    "is_weakly_stable",
    "lift_matching",
    "lottery_to_joint",
    "most_stable_brute_force",
    "most_stable_constant_uncertain",
    "restrict_matching",
    "sample_profile",
    "side_is_certain",
    "smp_from_instance",
    "solve_2sat",
    "support_size",
    "stability_probability",
    "stability_probability_compact_one_side_certain",
    "stability_probability_exact",
    "stability_probability_joint",
    "stability_probability_lottery_one_side_certain",
    "super_stable_smp",
    "three_color_to_joint",
    "uncertain_agents",
    "validate_matching",
    "x3c_to_lottery",
]
