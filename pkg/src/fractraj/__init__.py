"""Trajectories of linear fractional-order systems ``D^alpha X = A X``.

Mittag-Leffler evaluation, solution operators for canonical and general
2x2/3x3 systems, restart transformations, planar Frenet frames,
self-intersection search and rotation-angle scans.
"""

from .errors import (
    ConvergenceError,
    DegenerateSegmentWarning,
    DomainError,
    FactorizationError,
    FractrajError,
    GridMismatchError,
    RejectionError,
    SingularPointError,
)
from .mittag_leffler import (
    MLSeriesResult,
    SeriesConfig,
    cos_sin_components,
    ml,
    ml_lambda_deriv,
    ml_series,
    ml_time_deriv,
)
from .systems import (
    ComplexPair,
    ComplexPairPlusReal,
    DistinctReal,
    GeneralSystem,
    Jordan2,
    matrix_exp,
    matrix_ml,
)

__version__ = "0.1.0"
