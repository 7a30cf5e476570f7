"""Quadratic ODE embeddings of polynomic vector fields on tori and spheres."""

__version__ = "0.1.0"

from quadflow.backend import backend_name, get_kernels
from quadflow.errors import (
    BadAngles,
    ConstraintViolation,
    DegenerateBasis,
    DegreeOverflow,
    ExpansionResidual,
    NoConvergence,
    NotOrthogonal,
    NotTangent,
    OffSphere,
    QuadflowError,
    StepFailure,
    UnclassifiedCommutator,
    UnsupportedManifold,
    UsageError,
)
from quadflow.tensor import (
    QuadraticTensor,
    SymmetrizedTensor,
    check_antisymmetry,
    check_tao_condition,
    symmetrize,
    tensor_divergence,
)
from quadflow.torus import (
    LatticeSet,
    TorusField,
    abc_field,
    build_torus_tensor,
    enumerate_lattice,
    eval_torus_field,
    psi_torus,
    psi_torus_jacobian,
    random_torus_field,
    torus_divergence_check,
    validate_torus_field,
)
from quadflow.polynomials import Polynomial, PolynomialField
from quadflow.harmonics import (
    GeneratorSet,
    HarmonicBasis,
    SphereField,
    ThetaTensor,
    billiard_field,
    build_sphere_tensor,
    decompose_sphere_field,
    drop_constant_index,
    harmonic_basis,
    harmonic_dimension,
    harmonic_dimension_report,
    killing_field,
    psi_sphere,
    psi_sphere_jacobian,
    random_sphere_field,
    so_generators,
    so_torus_total_dimension,
    sphere_divergence_check,
    sphere_moment,
    theta_coefficients,
)
from quadflow.integrate import (
    Trajectory,
    integrate_manifold_field,
    integrate_quadratic,
    integrate_with_tangent,
)
from quadflow.diagnostics import (
    ConjugacyReport,
    DiagnosticsReport,
    LyapunovResult,
    PoincareSection,
    conjugacy_error,
    lyapunov_max,
    poincare_section,
    scan_chaotic_ic,
)
from quadflow.nhim import (
    EQUATOR_CIRCLE,
    ApproxParams,
    NhimConfig,
    extend_with_contraction,
    invariant_circle_locate,
    jackson_degree_bound,
    manifold_dim_bound,
    polynomial_project,
    rotation_field,
)
from quadflow.lift import (
    LiftData,
    SoBasisElement,
    commutator_check,
    commutator_closure,
    f_derivative,
    iterated_commutator_bound,
    lift_fields,
    product_sparsity_check,
    standard_so_basis,
)
