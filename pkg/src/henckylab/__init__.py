"""Numerical laboratory for the exponentiated Hencky strain-energy family."""

from .coercivity import (
    CoercivityCertificate,
    dev_only_noncoercivity_witness,
    full_coercivity_constants,
    q_coercivity_of_functional,
    scalar_coercivity_constant,
    verify_full_coercivity,
    verify_pair_coercivity,
)
from .convexity import (
    GridAxis,
    RankOneWitness,
    ScanGrid,
    ScanReport,
    Verdict,
    Violation,
    counterexample_2d,
    counterexample_3d,
    det_hessian_scan,
    det_hessian_sign,
    hessian_psi,
    rank_one_scan,
    rank_one_second_derivative,
    sampler_2d_stretches,
    sampler_3d_dev_biased,
    scalar_b_of_a,
    scalar_r,
    scalar_rhat,
    scalar_t_of_a,
    ssli_margin,
    ssli_sampler,
    steigmann_check_2d,
    steigmann_check_3d,
    verify_scalar_inequalities,
    volumetric_convexity_check,
)
from .energy import (
    MaterialParams,
    energy_eH,
    energy_iso,
    energy_quadratic_hencky,
    energy_vol,
    g_iso,
    piola_stress,
    psi,
    psi_hat,
    tangent_fd,
)
from .fem import (
    BoundaryTag,
    Mesh,
    SolveMethod,
    SolveOptions,
    SolveReport,
    element_gradients,
    energy_gradient,
    make_rect_mesh,
    neumann_residual,
    retag_boundary,
    solve,
    total_energy,
)
from .errors import (
    ConstraintConstructionFailed,
    DomainError,
    InfeasibleState,
    InvalidDimensions,
    NoFeasibleStart,
    NonPositiveDeterminant,
    NotPositiveDefinite,
    OutsideDomain,
    StencilLeftDomain,
    TooCloseToGamma2,
)
from .kernels import backend_name
from .tensor import (
    EigenData,
    InvariantPoint,
    Region,
    classify_region_2d,
    cofactor,
    deviator,
    dev_log_norm_sq,
    invariants,
    invariants_to_eigenvalues,
    polar_rotation,
    right_stretch,
    spd_exp,
    spd_log,
    spd_pow,
    sym_eig,
    tr_log,
)

__version__ = "0.1.0"

__all__ = [
    "CoercivityCertificate",
    "dev_only_noncoercivity_witness",
    "full_coercivity_constants",
    "q_coercivity_of_functional",
    "scalar_coercivity_constant",
    "verify_full_coercivity",
    "verify_pair_coercivity",
    "GridAxis",
    "RankOneWitness",
    "ScanGrid",
    "ScanReport",
    "Verdict",
    "Violation",
    "counterexample_2d",
    "counterexample_3d",
    "det_hessian_scan",
    "det_hessian_sign",
    "hessian_psi",
    "rank_one_scan",
    "rank_one_second_derivative",
    "sampler_2d_stretches",
    "sampler_3d_dev_biased",
    "scalar_b_of_a",
    "scalar_r",
    "scalar_rhat",
    "scalar_t_of_a",
    "ssli_margin",
    "ssli_sampler",
    "steigmann_check_2d",
    "steigmann_check_3d",
    "verify_scalar_inequalities",
    "volumetric_convexity_check",
    "MaterialParams",
    "energy_eH",
    "energy_iso",
    "energy_vol",
    "energy_quadratic_hencky",
    "g_iso",
    "psi",
    "psi_hat",
    "piola_stress",
    "tangent_fd",
    "BoundaryTag",
    "Mesh",
    "SolveMethod",
    "SolveOptions",
    "SolveReport",
    "element_gradients",
    "energy_gradient",
    "make_rect_mesh",
    "neumann_residual",
    "retag_boundary",
    "solve",
    "total_energy",
    "backend_name",
    "EigenData",
    "InvariantPoint",
    "Region",
    "classify_region_2d",
    "cofactor",
    "deviator",
    "dev_log_norm_sq",
    "invariants",
    "invariants_to_eigenvalues",
    "polar_rotation",
    "right_stretch",
    "spd_exp",
    "spd_log",
    "spd_pow",
    "sym_eig",
    "tr_log",
    "ConstraintConstructionFailed",
    "DomainError",
    "InfeasibleState",
    "InvalidDimensions",
    "NoFeasibleStart",
    "NonPositiveDeterminant",
    "NotPositiveDefinite",
    "OutsideDomain",
    "StencilLeftDomain",
    "TooCloseToGamma2",
    "__version__",
]
