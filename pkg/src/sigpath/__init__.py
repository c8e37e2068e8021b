"""Truncated signatures of piecewise linear paths and linear-functional
approximation of path functionals, random ODEs, and SDE targets."""

from .tensor import (
    GroupLikeTensor,
    TruncatedTensor,
    add,
    basis_element,
    exp,
    level_norm,
    log,
    mul,
    norm,
    scale,
    total_entries,
    unit,
    zeros,
)
from .words import all_words, apply_shuffle_check, offset_to_word, shuffle, word_to_offset
from .paths import (
    PathFormatError,
    PiecewiseLinearPath,
    StoppedPath,
    dyadic_times,
    holder_norm,
    insert_breakpoint,
    materialize,
    read_path_csv,
    stop,
    time_extend,
    weight,
    write_path_csv,
)
from .signature import (
    LinearFunctional,
    SignatureStream,
    levy_area_functional,
    reverse_check,
    segment_signature,
    signature,
    signature_stream,
)
from .stochastic import (
    BrownianLattice,
    OdeBlowupError,
    VectorField,
    interpolate,
    make_vector_field,
    sample_brownian,
    sample_brownian_batch,
    sde_exact_gbm,
    solve_ode_pl,
    stratonovich_reference,
)
from .regress import FeatureMatrix, FitReport, build_features, fit, lp_error
from .experiments import ConfigError, ExperimentConfig, NumericalError, run_config

__version__ = "0.1.0"
