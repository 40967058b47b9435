"""Berrut approximated coded computing.

Straggler-tolerant distributed evaluation of arbitrary functions: data are
encoded with Berrut's rational interpolant, workers evaluate the function on
coded inputs, and the master decodes from whichever results arrive.
"""

from .coding import (
    BACCCoder,
    CodedShare,
    DecodeInput,
    Encoder,
    decode,
    encode_shares,
    lcc_roundtrip,
    make_encoder,
)
from .diagnostics import (
    StragglerPattern,
    error_bound,
    lebesgue_constant,
    lebesgue_function,
    theoretical_lebesgue_bound,
    worst_case_pattern,
)
from .functions import FunctionSpec
from .gradcode import CodedMLPRegressor, train
from .interpolants import Interpolant, Interpolator, Scheme, evaluate
from .pointsets import NodeSet, chebyshev_first, chebyshev_second, equidistant
from .simulator import ExperimentConfig, compare_nodesets, run_nonpoly_experiment, run_poly_experiment

__version__ = "0.1.0"

__all__ = [
    "BACCCoder",
    "CodedMLPRegressor",
    "CodedShare",
    "DecodeInput",
    "Encoder",
    "ExperimentConfig",
    "FunctionSpec",
    "Interpolant",
    "Interpolator",
    "NodeSet",
    "Scheme",
    "StragglerPattern",
    "chebyshev_first",
    "chebyshev_second",
    "compare_nodesets",
    "decode",
    "encode_shares",
    "equidistant",
    "error_bound",
    "evaluate",
    "lcc_roundtrip",
    "lebesgue_constant",
    "lebesgue_function",
    "make_encoder",
    "run_nonpoly_experiment",
    "run_poly_experiment",
    "theoretical_lebesgue_bound",
    "train",
    "worst_case_pattern",
]
