"""Contact Lagrangian dynamics with linear velocity constraints.

The package builds the contact geometry of a regular Lagrangian on
extended phase space (positions, velocities, accumulated action),
projects the dynamics onto a linear velocity-constraint distribution,
exposes the resulting almost-Jacobi bracket, classifies distributions
as semiholonomic or nonholonomic, and integrates both the free and the
constrained equations of motion with dissipation diagnostics.
"""

__version__ = "0.1.0"

from .autodiff import Dual2, JetProgram, jet2, velocity_hessian
from .backend import available_backends, backend_name
from .bracket import (
    Classification,
    Observable,
    classify,
    evolution_check,
    jacobi_defect,
    nh_bracket,
    projected_structure,
)
from .checks import CheckReport, run_checks
from .constraints import (
    ConstraintFrame,
    ConstraintSet,
    constraint_frame,
    involutivity_defect,
    project_covector_adjoint,
    project_covector_flat,
    project_vector,
    project_velocity,
)
from .dynamics import (
    DynamicsReport,
    constrained_hamiltonian_vf,
    gamma_constrained,
    gamma_unconstrained,
    complement_tangency_residual,
    reeb_delta,
)
from .errors import (
    ContactError,
    DegeneracyError,
    EvalDomainError,
    ExpressionError,
    ModelError,
    ParseError,
    RankError,
    RegularityError,
    UnboundVariableError,
)
from .expr import evaluate, free_variables, parse, to_source
from .geometry import (
    ContactFrame,
    State,
    contact_frame,
    flat_apply,
    hamiltonian_vf,
    hamiltonian_vf_via_lambda,
    lambda_pair,
    sharp_apply,
    sharp_lambda,
)
from .integrate import Trajectory, convergence_order, integrate
from .models import LagrangianModel, bundled, list_bundled, load, loads

__all__ = [
    "__version__",
    "Dual2",
    "JetProgram",
    "jet2",
    "velocity_hessian",
    "available_backends",
    "backend_name",
    "Classification",
    "Observable",
    "classify",
    "evolution_check",
    "jacobi_defect",
    "nh_bracket",
    "projected_structure",
    "CheckReport",
    "run_checks",
    "ConstraintFrame",
    "ConstraintSet",
    "constraint_frame",
    "involutivity_defect",
    "project_covector_adjoint",
    "project_covector_flat",
    "project_vector",
    "project_velocity",
    "DynamicsReport",
    "constrained_hamiltonian_vf",
    "gamma_constrained",
    "gamma_unconstrained",
    "complement_tangency_residual",
    "reeb_delta",
    "ContactError",
    "DegeneracyError",
    "EvalDomainError",
    "ExpressionError",
    "ModelError",
    "ParseError",
    "RankError",
    "RegularityError",
    "UnboundVariableError",
    "evaluate",
    "free_variables",
    "parse",
    "to_source",
    "ContactFrame",
    "State",
    "contact_frame",
    "flat_apply",
    "hamiltonian_vf",
    "hamiltonian_vf_via_lambda",
    "lambda_pair",
    "sharp_apply",
    "sharp_lambda",
    "Trajectory",
    "convergence_order",
    "integrate",
    "LagrangianModel",
    "bundled",
    "list_bundled",
    "load",
    "loads",
]
