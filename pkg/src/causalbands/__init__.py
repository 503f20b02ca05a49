"""Bounds on causal effects from finite samples, split into sample and non-identifiability uncertainty."""

from .bounds import (
    BoundPair,
    Query,
    ate_of,
    ate_vs_best,
    backdoor_box_bounds,
    backdoor_point,
    lp_bounds,
    slack_lp_bounds,
    tian_pearl_bow,
)
from .canon import CanonicalScm, build_response_space, observational_joint, simulate_canonical
from .confset import ConfidenceBox, build_epsilon_net, confidence_box, hoeffding_halfwidth
from .decompose import (
    ExploreConfig,
    Move,
    QuerySpec,
    UncertaintyDecomposition,
    decide_multi,
    decide_single,
    explore,
    four_quantities,
)
from .dist import Dataset, DiscreteJoint
from .graph import Admg
from .relaxed import RelaxedTrainConfig, relaxed_bounds, relaxed_train

__version__ = "0.1.0"

__all__ = [
    "Admg",
    "BoundPair",
    "CanonicalScm",
    "ConfidenceBox",
    "Dataset",
    "DiscreteJoint",
    "ExploreConfig",
    "Move",
    "Query",
    "QuerySpec",
    "RelaxedTrainConfig",
    "UncertaintyDecomposition",
    "ate_of",
    "ate_vs_best",
    "backdoor_box_bounds",
    "backdoor_point",
    "build_epsilon_net",
    "build_response_space",
    "confidence_box",
    "decide_multi",
    "decide_single",
    "explore",
    "four_quantities",
    "hoeffding_halfwidth",
    "lp_bounds",
    "observational_joint",
    "relaxed_bounds",
    "relaxed_train",
    "simulate_canonical",
    "slack_lp_bounds",
    "tian_pearl_bow",
]
