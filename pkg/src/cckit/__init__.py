"""Central configurations of the Newtonian N-body problem.

Direct and Dziobek-form residuals, the twisted two-triangle seven-body
family, shape root-finding, mass-space analysis and homothetic collapse.
"""

from .central import CCDiagnostics, accelerations, cc_residual, moment_of_inertia, potential
from .dziobek import DziobekReport, TripleIndex, all_residuals, classify_zeros
from .family import TwistedPrismParams, build, is_regular_octahedron, octahedron_defect
from .geometry import (
    Body,
    Configuration,
    DegenerateConfigurationError,
    barycenter,
    mutual_distance,
    oriented_volume,
    recenter,
)
from .solver import mass_space, solve_shape, sweep

__version__ = "0.1.0"

__all__ = [
    "Body",
    "CCDiagnostics",
    "Configuration",
    "DegenerateConfigurationError",
    "DziobekReport",
    "TripleIndex",
    "TwistedPrismParams",
    "accelerations",
    "all_residuals",
    "barycenter",
    "build",
    "cc_residual",
    "classify_zeros",
    "is_regular_octahedron",
    "mass_space",
    "moment_of_inertia",
    "mutual_distance",
    "octahedron_defect",
    "oriented_volume",
    "potential",
    "recenter",
    "solve_shape",
    "sweep",
]
