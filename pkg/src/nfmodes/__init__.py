"""Communication modes between linear apertures in the radiating near field.

The package models two coplanar line apertures (a transmitter and a
receiver) coupled by the scalar free-space Green function.  It finds their
communication modes in two ways: by singular value decomposition of the
discretized coupling operator, and by a focusing-function construction
that places foci at the nulls of the RX kernel.  Closed-form mode counters
cover the parallel, perpendicular and rotated configurations.
"""

from .analysis import (
    BeamPattern,
    CorrelationMatrix,
    MethodComparison,
    SweepResult,
    beam_pattern,
    compare_methods,
    cross_correlation_db,
    sweep,
)
from .basis import (
    BasisSet,
    FocusingProfile,
    NullSet,
    ValidityWarning,
    find_orthogonal_foci,
    focusing_basis,
    focusing_profile,
    fresnel_downlink_bases,
    fresnel_downlink_foci,
    hemisphere_steering_basis,
    sis_uplink_bases,
    sis_uplink_foci,
    steering_profile,
)
from .em import (
    CouplingMatrix,
    QuadratureWarning,
    SampledProfile,
    coupling_matrix,
    green,
    kernel_KR,
    kernel_KT,
    propagate,
    sum_rule,
)
from .geometry import AntennaMesh, GeometryError, ScenarioGeometry, build_mesh, point_distance
from .modes import (
    ModeCountReport,
    ModeSolution,
    NumericalError,
    count_classic_paraxial,
    count_generic,
    count_limit,
    count_parallel,
    count_perpendicular,
    f_ratio_counts,
    fraunhofer_distance,
    fraunhofer_mode_count,
    mode_count_report,
    round_count,
    svd_modes,
)

__version__ = "0.1.0"

__all__ = [
    "AntennaMesh",
    "BasisSet",
    "BeamPattern",
    "CorrelationMatrix",
    "CouplingMatrix",
    "FocusingProfile",
    "GeometryError",
    "MethodComparison",
    "ModeCountReport",
    "ModeSolution",
    "NullSet",
    "NumericalError",
    "QuadratureWarning",
    "SampledProfile",
    "ScenarioGeometry",
    "SweepResult",
    "ValidityWarning",
    "beam_pattern",
    "build_mesh",
    "compare_methods",
    "count_classic_paraxial",
    "count_generic",
    "count_limit",
    "count_parallel",
    "count_perpendicular",
    "coupling_matrix",
    "cross_correlation_db",
    "f_ratio_counts",
    "find_orthogonal_foci",
    "focusing_basis",
    "focusing_profile",
    "fraunhofer_distance",
    "fraunhofer_mode_count",
    "fresnel_downlink_bases",
    "fresnel_downlink_foci",
    "green",
    "hemisphere_steering_basis",
    "kernel_KR",
    "kernel_KT",
    "mode_count_report",
    "point_distance",
    "propagate",
    "round_count",
    "sis_uplink_bases",
    "sis_uplink_foci",
    "steering_profile",
    "sum_rule",
    "svd_modes",
    "sweep",
]
