"""Matrix variational analysis and an augmented Lagrangian solver for
composite semidefinite programs with a nuclear-norm term."""

from .errors import (
    DegenerateSpectrum,
    DomainError,
    InnerSolveError,
    InvalidInput,
    MaxIterations,
    NotAKKTPoint,
    NotASubgradient,
    SDNOPError,
)
from .spectral import eig_sym, group_distinct, partition_by_sign, smat, svec
from .psd_cone import (
    proj_bsub_element,
    proj_dir_deriv,
    project_psd,
)
from .nuclear import (
    critical_cone_theta_contains,
    critical_cone_theta_project,
    eig_dir_derivs,
    eig_second_dir_derivs,
    grad_env_bsub_element,
    grad_moreau_env,
    moreau_env,
    nuclear_norm,
    prox_bsub_element,
    prox_dir_deriv,
    prox_nuclear,
    psi_conjugate,
    subdiff_contains,
    theta_dir_deriv,
    theta_second_dir_deriv,
)
from .problem import (
    KKTPoint,
    KKTResidual,
    MultiplierTriple,
    QuadraticProblem,
    aug_lagrangian_grad,
    aug_lagrangian_value,
    dual_value_and_grad,
    instance_from_dict,
    instance_to_dict,
    kkt_residual,
    load_instance,
    multiplier_maps,
    save_instance,
)
from .solver import ALMConfig, ALMTrace, InnerConfig, alm_solve, inner_minimize
from .generator import generate_instance
from .diagnostics import (
    nondegeneracy_check,
    rate_constants,
    rate_sweep,
    second_order_necessary_check,
    strong_sosc_check,
)

__version__ = "0.1.0"

__all__ = [
    "ALMConfig",
    "ALMTrace",
    "DegenerateSpectrum",
    "DomainError",
    "InnerConfig",
    "InnerSolveError",
    "InvalidInput",
    "KKTPoint",
    "KKTResidual",
    "MaxIterations",
    "MultiplierTriple",
    "NotAKKTPoint",
    "NotASubgradient",
    "QuadraticProblem",
    "SDNOPError",
    "alm_solve",
    "aug_lagrangian_grad",
    "aug_lagrangian_value",
    "critical_cone_theta_contains",
    "critical_cone_theta_project",
    "dual_value_and_grad",
    "eig_dir_derivs",
    "eig_second_dir_derivs",
    "eig_sym",
    "generate_instance",
    "grad_env_bsub_element",
    "grad_moreau_env",
    "group_distinct",
    "inner_minimize",
    "instance_from_dict",
    "instance_to_dict",
    "kkt_residual",
    "load_instance",
    "moreau_env",
    "multiplier_maps",
    "nondegeneracy_check",
    "nuclear_norm",
    "partition_by_sign",
    "proj_bsub_element",
    "proj_dir_deriv",
    "project_psd",
    "prox_bsub_element",
    "prox_dir_deriv",
    "prox_nuclear",
    "psi_conjugate",
    "rate_constants",
    "rate_sweep",
    "save_instance",
    "second_order_necessary_check",
    "smat",
    "strong_sosc_check",
    "subdiff_contains",
    "svec",
    "theta_dir_deriv",
    "theta_second_dir_deriv",
]
