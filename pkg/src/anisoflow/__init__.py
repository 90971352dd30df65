"""Anisotropic mean curvature flow of entire Lipschitz graphs.

Finite-difference solver for u_t + psi(-grad u, 1) div(grad_x phi(-grad u, 1)) = 0
in one and two space dimensions, with self-similar rescaling, Wulff-shape and
periodic barriers, and verification experiments.
"""

from .anisotropy import (
    AnisotropyModel, Elliptic, Euclidean, MobilityModel, PowerNorm, UserSmooth, WulffCap,
    dual_phi, eval_phi, grad_phi, hess_phi, wulff_lower_cap,
)
from .discretization import (
    ConeExtension, DirichletExact, GraphField, GraphGrid, LinearExtrapolation, Periodic,
    apply_boundary, curvature_operator, gradient_faces,
)
from .errors import (
    AnisoFlowError, CheckFailure, ConfigError, ConvergenceError, DomainError,
    NumericalFailure, SingularityError, UsageError,
)
from .flow import (
    FlowParams, Trajectory, cfl_dt, evolve, evolve_lockstep, evolve_rescaled,
    rescale_transform, step_explicit,
)
from .reports import ExperimentReport
from .selfsimilar import (
    ConeSpec, ExpanderProfile, backward_extend, compute_expander, expander_far_field,
    make_cone_field, scaling_check,
)

__version__ = "0.1.0"
