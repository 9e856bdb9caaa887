"""Fixed modes and sparsity-constrained stabilizing controller synthesis for LTI plants."""

from .errors import (
    DecstabError,
    DimensionMismatch,
    HalvingExhausted,
    IllConditionedPlacement,
    IllPosedInterconnection,
    IndexOutOfRange,
    NoIndexFound,
    NumericalFailure,
    ParseError,
    PerturbationExhausted,
    RedrawLimit,
    StepStalled,
    SynthesisError,
    UncontrollablePair,
    UnobservablePair,
    UnstableFixedModes,
    ValidationError,
)
from .kalman import KalmanDecomposition, centralized_fixed_modes, controllable_observable_part, kalman_decompose
from .modes import ModeReport, count_unstable, fixed_modes, partition_modes, small_gain_mode_tracking
from .placement import place_poles
from .statespace import (
    Region,
    RegionKind,
    Spectrum,
    StateSpace,
    TimeDomain,
    add_controllers,
    closed_loop_a,
    embed_siso,
    lft_close,
    match_spectra,
    siso_channel,
    spectrum,
)
from .structure import SparsityPattern, StructuredStaticGain, random_structured_gain, sparsity_check, truncate_gain
from .synthesis import (
    StepTrace,
    SynthesisConfig,
    SynthesisResult,
    extract_siso,
    find_movable_index,
    lift_to_mimo,
    observer_stabilize,
    pick_moving_gain,
    synthesize,
)
from .verify import VerificationReport, sample_dynamic_fixed_mode_invariance, verify_closed_loop

__version__ = "0.1.0"

__all__ = [
    "DecstabError",
    "DimensionMismatch",
    "HalvingExhausted",
    "IllConditionedPlacement",
    "IllPosedInterconnection",
    "IndexOutOfRange",
    "KalmanDecomposition",
    "ModeReport",
    "NoIndexFound",
    "NumericalFailure",
    "ParseError",
    "PerturbationExhausted",
    "RedrawLimit",
    "Region",
    "RegionKind",
    "SparsityPattern",
    "Spectrum",
    "StateSpace",
    "StepStalled",
    "StepTrace",
    "StructuredStaticGain",
    "SynthesisConfig",
    "SynthesisError",
    "SynthesisResult",
    "TimeDomain",
    "UncontrollablePair",
    "UnobservablePair",
    "UnstableFixedModes",
    "ValidationError",
    "VerificationReport",
    "add_controllers",
    "centralized_fixed_modes",
    "closed_loop_a",
    "controllable_observable_part",
    "count_unstable",
    "embed_siso",
    "extract_siso",
    "find_movable_index",
    "fixed_modes",
    "kalman_decompose",
    "lft_close",
    "lift_to_mimo",
    "match_spectra",
    "observer_stabilize",
    "partition_modes",
    "pick_moving_gain",
    "place_poles",
    "random_structured_gain",
    "sample_dynamic_fixed_mode_invariance",
    "siso_channel",
    "small_gain_mode_tracking",
    "sparsity_check",
    "spectrum",
    "synthesize",
    "truncate_gain",
    "verify_closed_loop",
]
