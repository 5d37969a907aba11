"""Two-species conserved reaction networks with unbiased splitting: exact simulation and switching analysis."""
__version__ = "0.1.0"

from .dsl import format_network, load_network, parse_network
from .reaction_net import Reaction, ReactionNetwork, classify, limiting_drift, propensity, validate
from .splitting import GammaExpr, SplitRateSpec, SplittingKernel

__all__ = [
    "GammaExpr",
    "Reaction",
    "ReactionNetwork",
    "SplitRateSpec",
    "SplittingKernel",
    "classify",
    "format_network",
    "limiting_drift",
    "load_network",
    "parse_network",
    "propensity",
    "validate",
]
