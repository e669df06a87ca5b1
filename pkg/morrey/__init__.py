"""
Morrey Vanishing Toolkit

Grid-based Morrey modulars and norms, the maximal, fractional and singular
operators of harmonic analysis, and checks of their pointwise inequalities
and vanishing properties.
"""

from .ball_modular import (MorreyParams, RadiusLadder, ball_mass_field, modular_field,
                           modular_profile, morrey_norm, vstar_sequence)
from .errors import (ConfigError, ExponentRelationError, GridError, GridFileError, MorreyError,
                     OracleSizeError, ParameterError)
from .grid_core import (BallIndicator, BumpTrain, FamilyDescriptor, Gaussian, GridFunction,
                        GridSpec, PowerLaw, RandomTrain, SmoothBump, dilate_family, make_grid,
                        pointwise_power, read_grid, synthesize, write_grid)
from .operators import (KernelSpec, OperatorSpec, apply_operator, frac_maximal, hardy_lower,
                        hardy_upper, hybrid_calK, hybrid_K, maximal, riesz, sharp_maximal,
                        truncated_singular)

__version__ = "1.0.0"
