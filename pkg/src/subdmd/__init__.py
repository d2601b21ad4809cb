"""Subspace dynamic mode decomposition for noisy random dynamical systems."""

__version__ = "0.1.0"

from .dmd import (  # noqa: E402
    DmdOutcome,
    SnapshotMatrix,
    amplitudes,
    build_pair,
    build_past_future,
    moment_corrected_dmd,
    reconstruct,
    run_method,
    standard_dmd,
    subspace_dmd,
    subspace_operator,
    tls_dmd,
    to_continuous,
)
from .errors import DimensionError, DmdError, NumericalError, ParameterError  # noqa: E402
