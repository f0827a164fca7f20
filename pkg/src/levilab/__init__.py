"""Leafwise Brownian motion, holonomy exponents and transverse dimension
for suspension foliations over a genus-two surface."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DegenerateMapError, DependencyError, EmptySystemError, NoWitnessError, NumericalError,
    ParameterError, ReductionError,
)
from .reports import EstimatorReport  # noqa: E402
from .brownian import (  # noqa: E402
    BrownianPath, drift_estimate, dynkin_check, heat_kernel, kernel_mass, log_heat_kernel,
    simulate_path,
)
from .suspension import (  # noqa: E402
    FiberRepresentation, SurfaceGroup, SuspensionFoliation, build_genus2_octagon,
    flow_jacobian_check, holonomy_along_path, lift_geodesic_trajectory, preset,
    reduce_to_domain,
)
from .estimators import (  # noqa: E402
    EntropyEstimator, LocalDimensionEstimator, LyapunovEstimator, harmonic_measure,
    kaimanovich_entropy, local_dimension, lyapunov_exponent,
)
from .dimension import (  # noqa: E402
    box_counting, build_holonomy_ifs, moran_bracket, moran_dimension, sample_limit_set,
    solve_moran, verify_dimension_inequality,
)
from .surface import RuledSurfaceContext, DivisorClass, construction_report  # noqa: E402

__all__ = [n for n in dir() if not n.startswith("_")]
