"""Margulis region of an irrational screw parabolic isometry of H^4."""

from .cf_engine import (CFAngle, Convergent, angle_norm, closest_returns, convergent,
                        convergents, parse_angle, verify_norm_recursion)
from .errors import (AngleSpecError, DecompositionInconsistency, MargulisError,
                     PrecisionBudgetError)

__version__ = "0.1.0"
