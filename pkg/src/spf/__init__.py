"""Sensitivity-bounded preprocessing of database functions.

``core`` runs the general subset recursion, ``stats`` the quadratic-time
paths for mean, trimmed mean, median, min, max and variance, ``geo2d`` the
planar l1 version, ``mechanisms`` the personalized Laplace and exponential
mechanisms, and ``verify`` the reference oracles used by the test-suite.
"""

from ._accel import HAVE_NUMBA, backend
from .core import (AuditReport, Database, FeasibleInterval, FunctionOracle, MemoTable,
                   PermutationBound, Record, SensitivityBounds, Violation, error_bound,
                   feasible_interval, preprocess, sensitivity_audit)
from .errors import InvariantViolationError, MemoConsistencyError, SizeLimitError, SPFError
from .geo2d import (L1Ball, Memo2D, Point2, RotatedBox, error_bound_2d, intersect_balls,
                    preprocess_2d, preprocess_per_coordinate, project_to_box, sensitivity_audit_2d)
from .mechanisms import (NoiseScale, PersonalEpsilons, QualityScoreTable, exponential_mechanism,
                         exponential_probabilities, laplace_mechanism, laplace_pdf, laplace_sample,
                         noise_scale)
from .stats import (MeanEnvelope, OrderedStatSpec, mean_bounding, mean_error_bound, preprocess_mean,
                    preprocess_ordered, preprocess_variance, var_from_parts, variance_error_bound,
                    variance_witness)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
