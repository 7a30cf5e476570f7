"""Desk-scale normally-hyperbolic persistence pipeline.

The shipped instance is the equatorial circle in S^2 carrying a rotation
field. The extension adds a polynomial contraction normal to the equator,
perturbations are projected polynomial fields, and the perturbed invariant
circle is recovered by forward settling of a fan of initial conditions.
Polynomial-approximation degree and dimension bounds close the loop.
"""

import math
from dataclasses import dataclass

import numpy as np

from quadflow.errors import NoConvergence, UnsupportedManifold
from quadflow.harmonics import (
    SphereField,
    harmonic_basis,
    harmonic_dimension,
    so_generators,
    so_torus_total_dimension,
)
from quadflow.integrate import integrate_manifold_field
from quadflow.polynomials import Polynomial, PolynomialField


@dataclass
class NhimConfig:
    """Targets for the r-normally-hyperbolic setup."""

    contraction: float
    order: int = 1
    rate_c: float = 1.0
    rate_mu: float = 0.0
    rate_lambda: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if self.contraction <= 0:
            raise ValueError("contraction strength must be positive")
        if self.order < 1:
            raise ValueError("hyperbolicity order must be >= 1")
        if not (self.rate_c > 0 and 0 <= self.rate_mu < self.rate_lambda):
            raise ValueError("rates must satisfy c > 0 and 0 <= mu < lambda")
        if self.delta < 0:
            raise ValueError("perturbation magnitude must be >= 0")


@dataclass
class ApproxParams:
    """Inputs of the polynomial-approximation degree bound."""

    target_error: float
    norm_index: int = 0
    smoothness_gap: int = 1
    constant: float = 1.0  # Jackson-type constant, user supplied, not rigorous

    def __post_init__(self):
        if self.target_error <= 0:
            raise ValueError("target error must be positive")
        if self.smoothness_gap < 1:
            raise ValueError("smoothness gap must be >= 1")
        if self.constant <= 0:
            raise ValueError("constant must be positive")


@dataclass(frozen=True)
class EmbeddedManifold:
    name: str
    sphere_dim: int
    manifold_dim: int


EQUATOR_CIRCLE = EmbeddedManifold("s2-equator", 2, 1)


def rotation_field(rate=1.0):
    """Rotation about the third axis on R^3: (-rate x2, rate x1, 0)."""
    return PolynomialField([
        Polynomial.variable(3, 1, -rate),
        Polynomial.variable(3, 0, rate),
        Polynomial.zero(3),
    ])


def equator_samples(count=256):
    phi = 2.0 * math.pi * np.arange(count) / count
    return np.stack([np.cos(phi), np.sin(phi), np.zeros(count)], axis=1)


def distance_to_equator(points):
    """Euclidean distance from each point to the equatorial unit circle."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    return np.sqrt((rho - 1.0) ** 2 + pts[:, 2] ** 2)


def choose_contraction(base_field, order=1, samples=64):
    """Default strength order * L + 1 with L sampled from |grad X| on N."""
    worst = 0.0
    for x in equator_samples(samples):
        worst = max(worst, float(np.linalg.norm(base_field.jacobian(x), 2)))
    return order * worst + 1.0


def extend_with_contraction(manifold, base_field, strength):
    """Extend a field on the equator to S^2 with normal contraction.

    Returns Z = X - strength * x3 (e3 - x3 x), a polynomial field tangent to
    the sphere that restricts to X on the equator and whose normal
    linearization there has eigenvalue -strength.
    """
    if not isinstance(manifold, EmbeddedManifold) or manifold.name != EQUATOR_CIRCLE.name:
        raise UnsupportedManifold(f"no shipped instance named {manifold!r}")
    if strength < 0:
        raise ValueError("contraction strength must be >= 0")
    if not isinstance(base_field, PolynomialField) or base_field.nvars != 3:
        raise UnsupportedManifold("base field must be a polynomial field on R^3")
    scale = 1.0 + max(p.max_abs_coeff() for p in base_field.components)
    if base_field.sphere_tangency_residual() > 1e-12 * scale:
        raise UnsupportedManifold("base field is not tangent to S^2")
    normal_on_equator = max(
        abs(float(base_field.components[2](x))) for x in equator_samples(128)
    )
    if normal_on_equator > 1e-12 * scale:
        raise UnsupportedManifold("base field is not tangent to the equator")
    x3 = Polynomial.variable(3, 2)
    contraction = PolynomialField([
        -(x3 * x3) * Polynomial.variable(3, 0),
        -(x3 * x3) * Polynomial.variable(3, 1),
        x3 - (x3 * x3) * Polynomial.variable(3, 2),
    ])
    return base_field - contraction * strength


def sphere_quadrature_grid(n_theta=24, n_phi=48):
    """Deterministic Gauss-Legendre x midpoint grid on S^2 with weights."""
    nodes, gl_weights = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    pts = []
    wts = []
    for u, gw in zip(nodes, gl_weights):
        r = math.sqrt(max(0.0, 1.0 - u * u))
        for p in phi:
            pts.append((r * math.cos(p), r * math.sin(p), u))
            wts.append(gw * 2.0 * math.pi / n_phi)
    return np.array(pts), np.array(wts)


@dataclass
class ProjectionResult:
    field: SphereField
    residual: float
    degree: int


def polynomial_project(target, degree, n_theta=24, n_phi=48):
    """Weighted least-squares projection onto span{Y_a h_mu, deg Y_a <= degree}.

    ``target`` is any callable R^3 -> R^3 evaluated on the deterministic
    quadrature grid; the residual is the weighted RMS gap on that grid.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    basis = harmonic_basis(2, degree)
    gens = so_generators(2)
    pts, wts = sphere_quadrature_grid(n_theta, n_phi)
    npts = pts.shape[0]
    m, d = gens.m, basis.size
    design = np.zeros((3 * npts, m * d))
    rhs = np.zeros(3 * npts)
    sq = np.sqrt(wts)
    for q, x in enumerate(pts):
        vals = basis.eval_all(x)
        hx = gens.evaluate(x)
        zx = np.asarray(target(x), dtype=float)
        rhs[3 * q:3 * q + 3] = sq[q] * zx
        block = np.einsum("a,mc->cma", vals, hx).reshape(3, m * d)
        design[3 * q:3 * q + 3] = sq[q] * block
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    gap = design @ sol - rhs
    residual = float(np.sqrt(np.sum(gap * gap) / np.sum(wts)))
    return ProjectionResult(SphereField(basis, gens, sol.reshape(m, d)), residual, degree)


def random_tangent_perturbation(seed, degree=1, normalize_grid=128):
    """Random polynomial tangent field on S^2 with unit sup norm.

    Coefficients of f_mu over harmonics up to ``degree`` are seeded
    Gaussians, so the total field has polynomial degree ``degree + 1``.
    """
    rng = np.random.default_rng(seed)
    basis = harmonic_basis(2, degree)
    gens = so_generators(2)
    coeffs = rng.standard_normal((gens.m, basis.size))
    raw = SphereField(basis, gens, coeffs).to_polynomial_field()
    pts, _ = sphere_quadrature_grid(16, normalize_grid // 16 + 1)
    sup = max(float(np.linalg.norm(raw(x))) for x in pts)
    return raw * (1.0 / sup)


@dataclass
class CircleLocateResult:
    curve: np.ndarray
    hausdorff_distance: float
    profile_shift: float
    converged: bool
    fan_size: int
    t_settle: float


def _transverse_profile(points):
    """Longitudes (sorted) with the transverse deviations (rho - 1, z)."""
    phi = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * math.pi)
    order = np.argsort(phi)
    phi = phi[order]
    rho = np.hypot(points[order, 0], points[order, 1]) - 1.0
    height = points[order, 2]
    return phi, rho, height


def invariant_circle_locate(field, t_settle=8.0, fan_size=96, band=0.3,
                            settle_tol=1e-4, rtol=1e-9, atol=1e-11,
                            backend=None):
    """Recover the attracting circle near the equator by forward settling.

    A fan of initial conditions straddling the equator is integrated for
    ``t_settle`` plus one extra unit. The attractor is treated as a graph of
    transverse deviations over longitude; settling requires the profiles of
    the two snapshots to agree within ``settle_tol`` (points rotate along
    the curve, so the comparison interpolates in longitude) and the
    longitude coverage to stay dense. The reported distance is the sup over
    settled endpoints of the distance to the seed circle; with the coverage
    requirement this matches the Hausdorff distance up to the sampling
    density of the fan.
    """
    phis = 2.0 * math.pi * np.arange(fan_size) / fan_size
    signs = np.where(np.arange(fan_size) % 2 == 0, 1.0, -1.0)
    z0 = band * signs
    r0 = np.sqrt(1.0 - z0 * z0)
    starts = np.stack([r0 * np.cos(phis), r0 * np.sin(phis), z0], axis=1)
    finals = np.empty_like(starts)
    checks = np.empty_like(starts)
    for q, x0 in enumerate(starts):
        traj = integrate_manifold_field(field, x0, t_settle + 1.0,
                                        rtol=rtol, atol=atol, backend=backend)
        checks[q] = traj.sample(t_settle)[0]
        finals[q] = traj.final_state

    period = 2.0 * math.pi
    phi_new, rho_new, z_new = _transverse_profile(finals)
    gaps = np.diff(np.concatenate([phi_new, [phi_new[0] + period]]))
    if float(gaps.max()) > 6.0 * period / fan_size:
        raise NoConvergence("longitude coverage collapsed; no settled circle graph")
    phi_old, rho_old, z_old = _transverse_profile(checks)
    rho_hat = np.interp(phi_new, phi_old, rho_old, period=period)
    z_hat = np.interp(phi_new, phi_old, z_old, period=period)
    shift = float(max(np.max(np.abs(rho_new - rho_hat)), np.max(np.abs(z_new - z_hat))))
    if shift > settle_tol:
        raise NoConvergence(
            f"transverse profile still moving by {shift:.3e} after t = {t_settle}"
        )
    distance = float(np.max(distance_to_equator(finals)))
    return CircleLocateResult(finals, distance, shift, True, fan_size, t_settle)


def jackson_degree_bound(params, norm_value):
    """ceil((C' |X| / eps)^(1/k)), at least one."""
    if norm_value <= 0:
        raise ValueError("norm value must be positive")
    base = params.constant * norm_value / params.target_error
    return max(1, math.ceil(base ** (1.0 / params.smoothness_gap)))


@dataclass
class ManifoldDimBound:
    bound: float
    vacuous: bool
    jackson_degree: int
    harmonic_dim_at_degree: int
    so_torus_dim_at_degree: int


def manifold_dim_bound(params, n, norm_value):
    """(C' |X| / eps)^(2(n+1)/k) with the concrete degree pipeline alongside.

    The cross-check evaluates the harmonic dimension d at the Jackson degree
    and reports dim SO(d) x T^d = d(d-1)/2 + d.
    """
    if norm_value <= 0:
        raise ValueError("norm value must be positive")
    base = params.constant * norm_value / params.target_error
    bound = base ** (2.0 * (n + 1) / params.smoothness_gap)
    degree = jackson_degree_bound(params, norm_value)
    dim = harmonic_dimension(n, degree, "cumulative")
    return ManifoldDimBound(bound, bound <= 1.0, degree, dim, so_torus_total_dimension(dim))
