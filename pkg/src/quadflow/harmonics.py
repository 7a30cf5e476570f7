"""Spherical-harmonic algebra on S^n and the sphere-side quadratic embedding.

Everything that feeds the structure tensor is computed in exact rational
arithmetic: monomial moments over the sphere, the harmonic subspaces per
degree, and the Gram-Schmidt recursion. Floats enter once, through the
normalizing square roots. As a payoff the rotation coefficients
theta[mu, beta, gamma] come out exactly antisymmetric in (beta, gamma) and
exactly block-diagonal across degrees, and the assembled tensor satisfies
B[b, a, g] = -B[g, a, b] without roundoff.
"""

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from quadflow.errors import (
    BadAngles,
    DegenerateBasis,
    DegreeOverflow,
    ExpansionResidual,
    NotTangent,
    OffSphere,
)
from quadflow.polynomials import (
    Polynomial,
    PolynomialField,
    double_factorial,
    fraction_nullspace,
    monomial_exponents,
    monomials_up_to,
)
from quadflow.tensor import QuadraticTensor, check_antisymmetry, tensor_divergence

MAX_DESK_N = 8
MAX_DESK_DEGREE = 8


# ----------------------------------------------------------------------
# moments
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def moment_ratio(exponents):
    """Exact value of (integral of x^e over S^(m-1)) / (surface area).

    Odd exponents integrate to zero; for even exponents the ratio is
    prod (e_i - 1)!! / prod_{j=1..s} (m + 2j - 2) with s = (sum e)/2.
    """
    if any(e % 2 for e in exponents):
        return Fraction(0)
    m = len(exponents)
    s = sum(exponents) // 2
    num = 1
    for e in exponents:
        num *= double_factorial(e - 1)
    den = 1
    for j in range(s):
        den *= m + 2 * j
    return Fraction(num, den)


def sphere_area(n):
    """Surface area of the unit n-sphere in R^(n+1)."""
    m = n + 1
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


def sphere_moment(exponents):
    """Integral of the monomial x^e over S^n, n = len(e) - 1."""
    exponents = tuple(int(e) for e in exponents)
    if any(e < 0 for e in exponents):
        raise ValueError("exponents must be nonnegative")
    return float(moment_ratio(exponents)) * sphere_area(len(exponents) - 1)


# ----------------------------------------------------------------------
# dimension counts
# ----------------------------------------------------------------------

def harmonic_dimension(n, degree, mode="cumulative"):
    """Dimension of spherical harmonics on S^n, by the direct count.

    Per degree j the dimension is C(n+j, j) - C(n+j-2, j-2); cumulative
    sums over 0..degree.
    """
    if n < 1 or degree < 0:
        raise ValueError("need n >= 1 and degree >= 0")

    def per(j):
        low = math.comb(n + j - 2, j - 2) if j >= 2 else 0
        return math.comb(n + j, j) - low

    if mode == "per-degree":
        return per(degree)
    if mode == "cumulative":
        return sum(per(j) for j in range(degree + 1))
    raise ValueError("mode must be 'per-degree' or 'cumulative'")


@dataclass
class DimensionFormulaReport:
    direct: int
    closed_form: float
    matches: bool


def harmonic_dimension_report(n, degree):
    """Direct count next to the printed closed-form sum, which does not
    reproduce it on small cases and is reported, not trusted."""
    closed = 0.0
    for j in range(degree + 1):
        if j + n - 1 >= n:
            closed += math.comb(j + n - 1, n) * (2 * j + n - 1) / (j + n - 1)
    direct = harmonic_dimension(n, degree, "cumulative")
    return DimensionFormulaReport(direct, closed, abs(closed - direct) < 1e-9)


def so_torus_total_dimension(d):
    """dim SO(d) x T^d = d(d-1)/2 + d."""
    return d * (d - 1) // 2 + d


# ----------------------------------------------------------------------
# rotation generators
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSet:
    """Standard elementary basis A of so(n+1); h_mu(x) = A_mu x."""

    n: int
    pairs: tuple
    matrices: tuple

    @property
    def m(self):
        return len(self.matrices)

    def field(self, mu):
        """h_mu as a PolynomialField on R^(n+1)."""
        a = self.matrices[mu]
        comps = []
        for i in range(self.n + 1):
            p = Polynomial.zero(self.n + 1)
            for l in range(self.n + 1):
                if a[i][l]:
                    p = p + Polynomial.variable(self.n + 1, l, a[i][l])
            comps.append(p)
        return PolynomialField(comps)

    def evaluate(self, x):
        """Stacked h_mu(x), shape (m, n+1)."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.array(a, dtype=float) @ x for a in self.matrices])


def so_generators(n):
    if n < 1:
        raise ValueError("n must be >= 1")
    m = n + 1
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    mats = []
    for i, j in pairs:
        a = [[0] * m for _ in range(m)]
        a[i][j] = 1
        a[j][i] = -1
        mats.append(tuple(tuple(row) for row in a))
    return GeneratorSet(n, tuple(pairs), tuple(mats))


def generator_span_rank(generators, x):
    return int(np.linalg.matrix_rank(generators.evaluate(x)))


# ----------------------------------------------------------------------
# orthonormal harmonic basis
# ----------------------------------------------------------------------

def _harmonic_vectors(nvars, degree):
    """Rational basis of harmonic homogeneous polynomials of one degree,
    as coefficient vectors over the sorted degree monomials."""
    monos = monomial_exponents(nvars, degree)
    if degree < 2:
        return monos, [[Fraction(int(i == t)) for i in range(len(monos))] for t in range(len(monos))]
    lower = monomial_exponents(nvars, degree - 2)
    row_of = {e: r for r, e in enumerate(lower)}
    matrix = [[Fraction(0)] * len(monos) for _ in lower]
    for c, e in enumerate(monos):
        for i in range(nvars):
            if e[i] >= 2:
                drop = list(e)
                drop[i] -= 2
                matrix[row_of[tuple(drop)]][c] += e[i] * (e[i] - 1)
    return monos, fraction_nullspace(matrix, len(monos))


def _degree_gram(nvars, monos):
    return [[moment_ratio(tuple(a + b for a, b in zip(e1, e2))) for e2 in monos] for e1 in monos]


class HarmonicBasis:
    """L2-orthonormal spherical harmonics up to a degree, increasing degree.

    ``raw`` holds the exact rational orthogonal polynomials, ``self_ip``
    their area-normalized squared norms; the float ``elements`` are
    raw / sqrt(self_ip * area).
    """

    def __init__(self, n, max_degree, degrees, raw, self_ip):
        self.n = n
        self.max_degree = max_degree
        self.degrees = tuple(degrees)
        self.raw = tuple(raw)
        self.self_ip = tuple(self_ip)
        self.area = sphere_area(n)
        self.elements = tuple(
            p.map_coefficients(lambda c, s=s: float(c) / math.sqrt(float(s) * self.area))
            for p, s in zip(self.raw, self.self_ip)
        )
        self._gradients = tuple(tuple(p.diff(i) for i in range(n + 1)) for p in self.elements)

    @property
    def size(self):
        return len(self.elements)

    def degree_slices(self):
        out = {}
        for idx, j in enumerate(self.degrees):
            out.setdefault(j, []).append(idx)
        return out

    def eval_all(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([p(x) for p in self.elements])

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([[g(x) for g in grads] for grads in self._gradients])

    def gram_matrix(self, npoints=0):
        """Exact Gram matrix (should be the identity)."""
        out = np.zeros((self.size, self.size))
        for a in range(self.size):
            for b in range(self.size):
                if self.degrees[a] != self.degrees[b]:
                    continue  # exact zero across degrees
                prod = self.raw[a] * self.raw[b]
                acc = Fraction(0)
                for e, c in prod.terms.items():
                    acc += c * moment_ratio(e)
                out[a, b] = float(acc) / math.sqrt(
                    float(self.self_ip[a] * self.self_ip[b])
                )
        return out

    def content_hash(self):
        h = hashlib.sha256()
        h.update(f"S{self.n}:N{self.max_degree}".encode())
        for p, s, j in zip(self.raw, self.self_ip, self.degrees):
            h.update(f"|{j}|{s}".encode())
            for e, c in p.sorted_terms():
                h.update(f";{e}:{c}".encode())
        return h.hexdigest()[:16]


def harmonic_basis(n, max_degree):
    """Orthonormal harmonic basis via exact moments and exact Gram-Schmidt."""
    if n < 1 or n > MAX_DESK_N:
        raise ValueError(f"n must be in 1..{MAX_DESK_N}")
    if max_degree < 0 or max_degree > MAX_DESK_DEGREE:
        raise ValueError(f"max degree must be in 0..{MAX_DESK_DEGREE}")
    nvars = n + 1
    degrees = []
    raw = []
    self_ip = []
    for j in range(max_degree + 1):
        monos, vectors = _harmonic_vectors(nvars, j)
        expected = harmonic_dimension(n, j, "per-degree")
        if len(vectors) != expected:
            raise DegenerateBasis(
                f"harmonic space at degree {j} has rank {len(vectors)}, expected {expected}"
            )
        gram = _degree_gram(nvars, monos)
        ortho = []
        weighted = []  # gram @ v for each accepted vector
        norms = []
        for vec in vectors:
            v = list(vec)
            for u, w, s in zip(ortho, weighted, norms):
                coef = sum(a * b for a, b in zip(v, w)) / s
                if coef:
                    v = [a - coef * b for a, b in zip(v, u)]
            w = [sum(gram[r][c] * v[c] for c in range(len(v))) for r in range(len(v))]
            s = sum(a * b for a, b in zip(v, w))
            if float(s) < 1e-12:
                raise DegenerateBasis(f"Gram-Schmidt pivot {float(s):.3e} at degree {j}")
            ortho.append(v)
            weighted.append(w)
            norms.append(s)
        for v, s in zip(ortho, norms):
            poly = Polynomial(nvars, {e: c for e, c in zip(monos, v) if c != 0})
            degrees.append(j)
            raw.append(poly)
            self_ip.append(s)
    return HarmonicBasis(n, max_degree, degrees, raw, self_ip)


# ----------------------------------------------------------------------
# rotation coefficients
# ----------------------------------------------------------------------

@dataclass
class ThetaTensor:
    """theta[mu, beta, gamma] with h_mu(Y_beta) = sum_gamma theta Y_gamma.

    Exactly antisymmetric in (beta, gamma) and exactly zero across degree
    blocks, by construction.
    """

    values: np.ndarray
    basis_hash: str

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]


def theta_coefficients(basis, generators, verify=True, verify_points=5, seed=1234):
    """Expand rotated harmonics over their own degree block.

    theta[mu, beta, gamma] = integral of h_mu(Y_beta) Y_gamma. The rational
    inner products are exact, so the float entries inherit exact
    antisymmetry; the expansion identity is spot-checked at random sphere
    points unless ``verify`` is off.
    """
    if basis.n != generators.n:
        raise ValueError("basis and generators live on different spheres")
    nvars = basis.n + 1
    d = basis.size
    m = generators.m
    theta = np.zeros((m, d, d))
    blocks = basis.degree_slices()
    for j, idxs in blocks.items():
        monos = monomial_exponents(nvars, j)
        col = {e: i for i, e in enumerate(monos)}
        gram = _degree_gram(nvars, monos)
        vecs = []
        for b in idxs:
            v = [Fraction(0)] * len(monos)
            for e, c in basis.raw[b].terms.items():
                v[col[e]] = c
            vecs.append(v)
        weighted = [
            [sum(gram[r][c] * v[c] for c in range(len(v))) for r in range(len(v))]
            for v in vecs
        ]
        for mu in range(m):
            a = generators.matrices[mu]
            for bi, b in enumerate(idxs):
                rotated = basis.raw[b].directional(a)
                rv = [Fraction(0)] * len(monos)
                for e, c in rotated.terms.items():
                    rv[col[e]] = c
                for gi, g in enumerate(idxs):
                    if g == b:
                        continue  # diagonal vanishes exactly
                    ip = sum(x * y for x, y in zip(rv, weighted[gi]))
                    if ip:
                        theta[mu, b, g] = float(ip) / math.sqrt(
                            float(basis.self_ip[b] * basis.self_ip[g])
                        )
    tensor = ThetaTensor(theta, basis.content_hash())
    if verify:
        rng = np.random.default_rng(seed)
        for _ in range(verify_points):
            x = rng.standard_normal(nvars)
            x /= np.linalg.norm(x)
            vals = basis.eval_all(x)
            hx = generators.evaluate(x)
            for mu in range(m):
                for b in range(d):
                    grad = np.array([g(x) for g in basis._gradients[b]])
                    lhs = float(grad @ hx[mu])
                    rhs = float(theta[mu, b] @ vals)
                    if abs(lhs - rhs) > 1e-10 * (1.0 + np.abs(theta[mu, b]).max()):
                        raise ExpansionResidual(
                            f"harmonic re-expansion residual {abs(lhs - rhs):.3e} "
                            f"at mu={mu}, beta={b}"
                        )
    return tensor


# ----------------------------------------------------------------------
# fields on the sphere
# ----------------------------------------------------------------------

class SphereField:
    """Tangent field X = sum_mu f_mu h_mu with f_mu = sum_a c[mu, a] Y_a."""

    def __init__(self, basis, generators, coefficients):
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (generators.m, basis.size):
            raise ValueError(f"coefficient matrix must be {(generators.m, basis.size)}")
        self.basis = basis
        self.generators = generators
        self.coefficients = c.copy()
        self.coefficients.setflags(write=False)
        self._poly = None

    @property
    def n(self):
        return self.basis.n

    def component_functions(self):
        """The f_mu as float polynomials."""
        out = []
        for mu in range(self.generators.m):
            p = Polynomial.zero(self.n + 1)
            for a, w in enumerate(self.coefficients[mu]):
                if w:
                    p = p + self.basis.elements[a] * w
            out.append(p)
        return out

    def to_polynomial_field(self):
        if self._poly is None:
            comps = [Polynomial.zero(self.n + 1) for _ in range(self.n + 1)]
            for mu, f in enumerate(self.component_functions()):
                if f.is_zero():
                    continue
                h = self.generators.field(mu)
                for i in range(self.n + 1):
                    comps[i] = comps[i] + f * h.components[i]
            self._poly = PolynomialField(comps)
        return self._poly

    def __call__(self, x):
        return self.to_polynomial_field()(x)

    def has_zero_mean(self):
        return not np.any(self.coefficients[:, 0])


def killing_field(basis, generators, weights):
    """Constant-coefficient combination sum_mu w_mu h_mu as a SphereField."""
    weights = np.asarray(weights, dtype=float)
    c = np.zeros((generators.m, basis.size))
    c[:, 0] = weights * math.sqrt(basis.area)
    return SphereField(basis, generators, c)


def random_sphere_field(basis, generators, rng, amplitude=1.0):
    c = amplitude * rng.standard_normal((generators.m, basis.size))
    return SphereField(basis, generators, c)


def psi_sphere(basis, x, drop_constant=False):
    """Harmonic evaluations (Y_1(x), ..., Y_d(x)) in basis order."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if abs(r - 1.0) > 1e-12:
        raise OffSphere(f"|x| = {r!r} is not 1 within 1e-12")
    vals = basis.eval_all(x)
    return vals[1:] if drop_constant else vals


def psi_sphere_jacobian(basis, x, drop_constant=False):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if abs(r - 1.0) > 1e-12:
        raise OffSphere(f"|x| = {r!r} is not 1 within 1e-12")
    jac = basis.jacobian(x)
    return jac[1:] if drop_constant else jac


def decompose_sphere_field(field, basis, generators, tangency_tol=1e-12, residual_tol=1e-9):
    """Minimal-norm coefficients c[mu, a] with sum f_mu h_mu = P on S^n.

    The linear system is assembled over the monomial basis modulo the ideal
    of |x|^2 - 1 (every polynomial is reduced to its canonical form with the
    last exponent below 2). The minimal-Euclidean-norm least squares solution
    keeps the answer deterministic; generators overspan the tangent space so
    the representation itself is not unique.
    """
    if not isinstance(field, PolynomialField):
        field = PolynomialField(list(field))
    field = field.to_float()
    nvars = basis.n + 1
    if field.nvars != nvars:
        raise ValueError("field has wrong ambient dimension")
    scale = max(1.0, max(p.max_abs_coeff() for p in field.components))
    if field.sphere_tangency_residual() > tangency_tol * scale:
        raise NotTangent(
            f"radial residual {field.sphere_tangency_residual():.3e} exceeds {tangency_tol:.1e}"
        )
    if field.degree() > basis.max_degree + 1:
        raise DegreeOverflow(
            f"field degree {field.degree()} needs harmonics beyond degree {basis.max_degree}"
        )
    dmax = basis.max_degree + 1
    monos = [e for e in monomials_up_to(nvars, dmax) if e[nvars - 1] <= 1]
    row_of = {e: r for r, e in enumerate(monos)}
    m = generators.m
    d = basis.size
    nrows = nvars * len(monos)
    mat = np.zeros((nrows, m * d))
    rhs = np.zeros(nrows)

    def fill(vec, comp, poly):
        for e, c in poly.sphere_normal_form().terms.items():
            vec[comp * len(monos) + row_of[e]] += c

    for comp, p in enumerate(field.components):
        fill(rhs, comp, p)
    for mu in range(m):
        h = generators.field(mu)
        for a in range(d):
            col = np.zeros(nrows)
            for comp in range(nvars):
                fill(col, comp, basis.elements[a] * h.components[comp])
            mat[:, mu * d + a] = col
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    gap = float(np.max(np.abs(mat @ sol - rhs), initial=0.0))
    if gap > residual_tol * (1.0 + float(np.max(np.abs(rhs), initial=0.0))):
        raise DegreeOverflow(
            f"decomposition residual {gap:.3e}; harmonic degree {basis.max_degree} is too small"
        )
    return SphereField(basis, generators, sol.reshape(m, d))


def reconstruction_residual(sphere_field, target_field, npoints=200, seed=7):
    """Max pointwise gap between the decomposed field and its target."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    rebuilt = sphere_field.to_polynomial_field()
    for _ in range(npoints):
        x = rng.standard_normal(sphere_field.n + 1)
        x /= np.linalg.norm(x)
        worst = max(worst, float(np.max(np.abs(rebuilt(x) - target_field(x)))))
    return worst


def build_sphere_tensor(field, theta=None):
    """Structure tensor B[b, a, g] = sum_mu theta[mu, b, g] c[mu, a]."""
    if theta is None:
        theta = theta_coefficients(field.basis, field.generators, verify=False)
    if theta.basis_hash != field.basis.content_hash():
        raise ValueError("theta tensor was computed for a different basis")
    dense = np.einsum("mbg,ma->bag", theta.values, field.coefficients)
    idx = np.argwhere(dense != 0.0)
    entries = [(int(b), int(a), int(g), float(dense[b, a, g])) for b, a, g in idx]
    tensor = QuadraticTensor(field.basis.size, entries, certified=False)
    assert check_antisymmetry(tensor) == 0.0
    tensor.certified = True
    return tensor


def drop_constant_index(tensor):
    """Reindex a sphere tensor onto coordinates without the constant harmonic.

    Valid when the field has zero-mean components: every entry then avoids
    index 0, so dropping the first coordinate (which sits at a constant
    value of Psi) leaves the same flow.
    """
    entries = tensor.entry_list()
    if any(0 in (i, j, k) for i, j, k, _ in entries):
        raise ValueError("tensor couples the constant harmonic; cannot drop it")
    out = QuadraticTensor(
        tensor.d - 1,
        [(i - 1, j - 1, k - 1, v) for i, j, k, v in entries],
        certified=False,
    )
    out.certified = tensor.certified
    return out


@dataclass
class SphereDivergenceReport:
    contraction: np.ndarray
    contraction_max: float
    divergence_free: bool
    tensor_form_max: float
    tensor_divergence_free: bool


def sphere_divergence_check(field, theta=None, tol=1e-10):
    """Evaluate the contraction sum_{mu,a} c[mu,a] theta[mu,beta,a] per beta.

    The field is divergence-free iff all entries vanish; in that case the
    coordinate divergence of the built quadratic field is the zero linear
    form, which is cross-checked.
    """
    if theta is None:
        theta = theta_coefficients(field.basis, field.generators, verify=False)
    contraction = np.einsum("ma,mba->b", field.coefficients, theta.values)
    cmax = float(np.max(np.abs(contraction), initial=0.0))
    scale = 1.0 + float(np.max(np.abs(field.coefficients), initial=0.0))
    form = tensor_divergence(build_sphere_tensor(field, theta))
    fmax = float(np.max(np.abs(form), initial=0.0))
    return SphereDivergenceReport(
        contraction=contraction,
        contraction_max=cmax,
        divergence_free=cmax <= tol * scale,
        tensor_form_max=fmax,
        tensor_divergence_free=fmax <= tol * scale,
    )


# ----------------------------------------------------------------------
# triangle billiard field on S^3
# ----------------------------------------------------------------------

def billiard_field(angle1, angle2, angle3, tol=1e-12):
    """Projections (U, V) on S^3 of the homogeneous field attached to a
    triangle with the given angles.

    In complex coordinates z1 = x1 + i x2, z2 = x3 + i x4 the field is
    z1 (a3 z2 + a2 (z2 - z1)) d/dz1 + z2 (a3 z1 + a1 (z1 - z2)) d/dz2.
    U realizes the flow of the field, V the flow rotated by -i; both are
    projected radially, giving degree-4 polynomial fields tangent to S^3.
    """
    angles = (float(angle1), float(angle2), float(angle3))
    if min(angles) <= 0:
        raise BadAngles("triangle angles must be positive")
    if abs(sum(angles) - math.pi) > tol:
        raise BadAngles(f"angles sum to {sum(angles)!r}, expected pi")
    a1, a2, a3 = angles
    z1 = Polynomial.variable(4, 0, 1.0) + Polynomial.variable(4, 1, 1j)
    z2 = Polynomial.variable(4, 2, 1.0) + Polynomial.variable(4, 3, 1j)
    p1 = z1 * (z2 * a3 + (z2 - z1) * a2)
    p2 = z2 * (z1 * a3 + (z1 - z2) * a1)

    def re(p):
        return p.map_coefficients(lambda c: float(c.real) if isinstance(c, complex) else float(c))

    def im(p):
        return p.map_coefficients(lambda c: float(c.imag) if isinstance(c, complex) else 0.0)

    flow = PolynomialField([re(p1), im(p1), re(p2), im(p2)])
    rotated = PolynomialField([im(p1), -re(p1), im(p2), -re(p2)])
    return flow.sphere_tangential_part(), rotated.sphere_tangential_part()
