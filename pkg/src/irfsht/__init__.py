"""Generalized and multi-pass iterative residual fitting for spherical harmonic transforms."""
from .harmonics import (
    CoefficientVector,
    HarmonicIndex,
    SpherePoint,
    associated_legendre,
    evaluate_harmonic,
    flat_index,
    harmonic_matrix,
    synthesize,
    unflatten_index,
)
from .irf import (
    BlockSolveError,
    FitReport,
    IrfConfig,
    build_block_system,
    build_block_systems,
    epsilon_max,
    irf_pass,
    multi_pass_irf,
    residual_operator_check,
)
from .partition import Partition, make_partition, validate_partition
from .sampling import SampleSet, SamplingScheme, SchemeKind, attach_signal

__version__ = "0.1.0"
