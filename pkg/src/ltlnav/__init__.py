"""LTL navigation: lasso planning, progression rewards, policy learning."""

from .buchi import Guard, Nba, accepts_lasso, compile_nba, nba_step, prune_nba
from .errors import (CapacityExceededError, ConfigError, EmptyAutomatonError,
                     LtlnavError, LtlSyntaxError, NextUnsupportedError,
                     NoAcceptingReachedError, NoCycleFoundError,
                     NoPathFoundError, NoPlanFoundError, OutOfBoundsError,
                     RadiusTooLargeError, UnlabeledSegmentEndError)
from .ltl import atoms_of, eval_ltl_on_lasso, normalize, parse_ltl, to_text
from .product import (DecomposedPlan, LassoPlan, SubTaskSegment, decompose,
                      extract_lasso, grow_prefix_tree, grow_suffix_tree)
from .rewards import (BallSequence, ProductObservation, RewardParams,
                      build_balls, progression, reward, theorem1_threshold,
                      update_index)
from .workspace import Box, Sphere, Workspace

__version__ = "0.1.0"

__all__ = [
    "Guard", "Nba", "accepts_lasso", "compile_nba", "nba_step", "prune_nba",
    "atoms_of", "eval_ltl_on_lasso", "normalize", "parse_ltl", "to_text",
    "DecomposedPlan", "LassoPlan", "SubTaskSegment", "decompose",
    "extract_lasso", "grow_prefix_tree", "grow_suffix_tree",
    "BallSequence", "ProductObservation", "RewardParams", "build_balls",
    "progression", "reward", "theorem1_threshold", "update_index",
    "Box", "Sphere", "Workspace",
    "LtlnavError", "LtlSyntaxError", "NextUnsupportedError",
    "CapacityExceededError", "EmptyAutomatonError", "OutOfBoundsError",
    "NoPathFoundError", "NoAcceptingReachedError", "NoCycleFoundError",
    "NoPlanFoundError", "UnlabeledSegmentEndError", "RadiusTooLargeError",
    "ConfigError",
    "__version__",
]
