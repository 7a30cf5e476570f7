"""Trigonometric-polynomial vector fields on the flat torus T^n = (R/Z)^n.

A field is a finite sum X(x) = sum_k a_k sin(2 pi k.x) + b_k cos(2 pi k.x)
over integer frequencies. The embedding collects (sin, cos) pairs for one
representative of every antipodal frequency pair {k, -k} inside the cutoff
ball; pushing X forward yields a homogeneous quadratic ODE whose structure
tensor is antisymmetric in its outer indices by construction.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from quadflow.errors import ConstraintViolation
from quadflow.tensor import QuadraticTensor, check_antisymmetry, tensor_divergence

TWO_PI = 2.0 * math.pi

_CUTOFF_SLACK = 1e-9  # |k|^2 <= cutoff^2 + slack guards float cutoffs like sqrt(2)


def _as_key(k):
    return tuple(int(c) for c in k)


def _sq_norm(k):
    return sum(c * c for c in k)


@lru_cache(maxsize=None)
def _ball_points(n, sq_bound):
    """All integer points with |k|^2 <= sq_bound, lexicographic order."""
    radius = int(math.isqrt(sq_bound))
    pts = [k for k in product(range(-radius, radius + 1), repeat=n) if _sq_norm(k) <= sq_bound]
    pts.sort()
    return tuple(pts)


@dataclass(frozen=True)
class LatticeSet:
    """Antipodal representatives of the integer points in a closed ball."""

    n: int
    cutoff: float
    representatives: tuple
    includes_zero: bool
    full_count: int

    @property
    def size(self):
        return len(self.representatives)

    def index(self, k):
        return self.representatives.index(_as_key(k))


def enumerate_lattice(n, cutoff, zero_mean=False):
    """Lattice points with |k| <= cutoff, one representative per pair {k, -k}.

    The representative is the lexicographically largest member of the pair.
    ``full_count`` reports the unreduced number of lattice points; the zero
    vector is dropped from the representatives iff ``zero_mean``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    sq_bound = int(math.floor(cutoff * cutoff + _CUTOFF_SLACK))
    points = _ball_points(n, sq_bound)
    zero = (0,) * n
    reps = [k for k in points if k > tuple(-c for c in k)]
    includes_zero = not zero_mean
    if includes_zero:
        reps.insert(0, zero)
    return LatticeSet(n, float(cutoff), tuple(sorted(reps)), includes_zero, len(points))


class TorusField:
    """Finite Fourier vector field on T^n.

    ``coefficients`` maps an integer frequency tuple to a pair of real
    n-vectors (a_k, b_k). The stored map may carry both members of an
    antipodal pair (then the reality constraints a_{-k} = -a_k,
    b_{-k} = b_k must hold) or only one, with ``completed()`` filling in
    the partner.
    """

    def __init__(self, n, coefficients, cutoff=None):
        self.n = int(n)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        coeffs = {}
        for k, (a, b) in coefficients.items():
            key = _as_key(k)
            if len(key) != self.n:
                raise ValueError(f"frequency {key} has wrong dimension")
            a = np.asarray(a, dtype=float).reshape(self.n).copy()
            b = np.asarray(b, dtype=float).reshape(self.n).copy()
            a.setflags(write=False)
            b.setflags(write=False)
            coeffs[key] = (a, b)
        self.coefficients = dict(sorted(coeffs.items()))
        max_sq = max((_sq_norm(k) for k in self.coefficients), default=0)
        if cutoff is None:
            cutoff = math.sqrt(max_sq)
        if max_sq > cutoff * cutoff + _CUTOFF_SLACK:
            raise ValueError("stored frequency outside the cutoff ball")
        self.cutoff = float(cutoff)

    def completed(self):
        """Return the field with antipodal partners added via the reality map."""
        coeffs = {k: v for k, v in self.coefficients.items()}
        for k, (a, b) in list(coeffs.items()):
            nk = tuple(-c for c in k)
            if nk not in coeffs:
                coeffs[nk] = (-a, b.copy())
        return TorusField(self.n, coeffs, self.cutoff)

    def mean(self):
        zero = (0,) * self.n
        if zero in self.coefficients:
            return np.array(self.coefficients[zero][1])
        return np.zeros(self.n)

    def has_zero_mean(self):
        return not np.any(self.mean())

    def lattice(self):
        return enumerate_lattice(self.n, self.cutoff, zero_mean=self.has_zero_mean())

    def term_arrays(self):
        """Stored terms as (freqs, a, b) stacked float arrays."""
        nk = len(self.coefficients)
        freqs = np.zeros((nk, self.n))
        a = np.zeros((nk, self.n))
        b = np.zeros((nk, self.n))
        for r, (k, (ak, bk)) in enumerate(self.coefficients.items()):
            freqs[r] = k
            a[r] = ak
            b[r] = bk
        return freqs, a, b

    def kernel_args(self):
        return self.term_arrays()

    def pair_coefficients(self, lattice=None):
        """Effective (alpha, beta) per lattice representative.

        alpha_k = a_k - a_{-k}, beta_k = b_k + b_{-k} with missing entries
        treated as zero, so that restricted to the representatives
        k . X = sum (alpha_k . k) q_k + (beta_k . k) p_k. The zero frequency
        contributes (0, b_0) since its sin coordinate vanishes identically.
        """
        if lattice is None:
            lattice = self.lattice()
        zero_a = np.zeros(self.n)
        alphas = np.zeros((lattice.size, self.n))
        betas = np.zeros((lattice.size, self.n))
        for r, k in enumerate(lattice.representatives):
            nk = tuple(-c for c in k)
            ak, bk = self.coefficients.get(k, (zero_a, zero_a))
            if k == nk:
                alphas[r] = 0.0
                betas[r] = bk
            else:
                ank, bnk = self.coefficients.get(nk, (zero_a, zero_a))
                alphas[r] = ak - ank
                betas[r] = bk + bnk
        return alphas, betas


@dataclass
class TorusFieldReport:
    max_reality_violation: float
    cutoff_ok: bool
    n_terms: int
    valid: bool


def validate_torus_field(field, tol=1e-14):
    """Check the reality constraints a_{-k} = -a_k, b_{-k} = b_k.

    Only pairs with both members stored are constrained. Raises
    ConstraintViolation when the worst pair violation exceeds ``tol``.
    """
    worst = 0.0
    for k, (a, b) in field.coefficients.items():
        nk = tuple(-c for c in k)
        if nk in field.coefficients:
            an, bn = field.coefficients[nk]
            worst = max(worst, float(np.max(np.abs(a + an), initial=0.0)))
            worst = max(worst, float(np.max(np.abs(b - bn), initial=0.0)))
    cutoff_ok = all(
        _sq_norm(k) <= field.cutoff**2 + _CUTOFF_SLACK for k in field.coefficients
    )
    report = TorusFieldReport(worst, cutoff_ok, len(field.coefficients), worst <= tol and cutoff_ok)
    if worst > tol:
        raise ConstraintViolation(
            f"reality constraints violated by {worst:.3e} (tolerance {tol:.1e})"
        )
    return report


def eval_torus_field(field, x):
    """Value of X at a point (or batch of points, shape (..., n))."""
    x = np.asarray(x, dtype=float)
    freqs, a, b = field.term_arrays()
    ph = TWO_PI * (x @ freqs.T)
    return np.sin(ph) @ a + np.cos(ph) @ b


def torus_field_jacobian(field, x):
    """Ambient Jacobian dX_i/dx_l at one point."""
    x = np.asarray(x, dtype=float)
    freqs, a, b = field.term_arrays()
    ph = TWO_PI * (freqs @ x)
    cs = np.cos(ph)[:, None] * a
    sn = np.sin(ph)[:, None] * b
    return TWO_PI * ((cs - sn).T @ freqs)


def psi_torus(field, x, lattice=None):
    """Embedding coordinates (q_k, p_k) = (sin, cos)(2 pi k.x), lattice order."""
    if lattice is None:
        lattice = field.lattice()
    x = np.asarray(x, dtype=float)
    reps = np.array(lattice.representatives, dtype=float).reshape(lattice.size, field.n)
    ph = TWO_PI * (reps @ x)
    out = np.empty(2 * lattice.size)
    out[0::2] = np.sin(ph)
    out[1::2] = np.cos(ph)
    return out


def psi_torus_jacobian(field, x, lattice=None):
    if lattice is None:
        lattice = field.lattice()
    x = np.asarray(x, dtype=float)
    reps = np.array(lattice.representatives, dtype=float).reshape(lattice.size, field.n)
    ph = TWO_PI * (reps @ x)
    jac = np.empty((2 * lattice.size, field.n))
    jac[0::2] = TWO_PI * np.cos(ph)[:, None] * reps
    jac[1::2] = -TWO_PI * np.sin(ph)[:, None] * reps
    return jac


def build_torus_tensor(field, lattice=None):
    """Structure tensor of the pushed-forward flow on R^(2 d').

    dq_k/dt = 2 pi (k . X) p_k and dp_k/dt = -2 pi (k . X) q_k, with k . X
    expanded over the representatives, give entries in (q_k, q_k', p_k) and
    (q_k, p_k', p_k) positions paired with their exact negatives.
    """
    if lattice is None:
        lattice = field.lattice()
    alphas, betas = field.pair_coefficients(lattice)
    reps = np.array(lattice.representatives, dtype=float).reshape(lattice.size, field.n)
    entries = []
    for t in range(lattice.size):
        k = reps[t]
        qt, pt = 2 * t, 2 * t + 1
        for s in range(lattice.size):
            qs, ps = 2 * s, 2 * s + 1
            av = TWO_PI * float(alphas[s] @ k)
            bv = TWO_PI * float(betas[s] @ k)
            if av != 0.0:
                entries.append((qt, qs, pt, av))
                entries.append((pt, qs, qt, -av))
            if bv != 0.0:
                entries.append((qt, ps, pt, bv))
                entries.append((pt, ps, qt, -bv))
    tensor = QuadraticTensor(2 * lattice.size, entries, certified=False)
    assert check_antisymmetry(tensor) == 0.0
    tensor.certified = True
    return tensor


@dataclass
class TorusDivergenceReport:
    field_max_residual: float
    field_divergence_free: bool
    tensor_form: np.ndarray
    tensor_form_max: float
    tensor_divergence_free: bool


def torus_divergence_check(field, tol=1e-12):
    """Divergence of X and coordinate divergence of the built tensor field.

    X is divergence-free iff every stored pair satisfies a_k . k = 0 and
    b_k . k = 0; the tensor's divergence is an explicit linear form whose
    coefficients are returned.
    """
    worst = 0.0
    scale = 1.0
    for k, (a, b) in field.coefficients.items():
        kv = np.array(k, dtype=float)
        worst = max(worst, abs(float(a @ kv)), abs(float(b @ kv)))
        scale = max(scale, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    form = tensor_divergence(build_torus_tensor(field))
    form_max = float(np.max(np.abs(form), initial=0.0))
    return TorusDivergenceReport(
        field_max_residual=worst,
        field_divergence_free=worst <= tol * scale,
        tensor_form=form,
        tensor_form_max=form_max,
        tensor_divergence_free=form_max <= 1e-10 * scale,
    )


def abc_field(a=1.0, b=1.0, c=1.0):
    """The three-parameter Beltrami field on T^3 with unit frequencies.

    Component pattern: (a sin(2 pi x3) + c cos(2 pi x2),
                        b sin(2 pi x1) + a cos(2 pi x3),
                        c sin(2 pi x2) + b cos(2 pi x1)).
    Coefficients are stored over the full antipodal ball, so the weights of
    each representative pair are halved.
    """
    half = {
        (1, 0, 0): ((0.0, b / 2, 0.0), (0.0, 0.0, b / 2)),
        (0, 1, 0): ((0.0, 0.0, c / 2), (c / 2, 0.0, 0.0)),
        (0, 0, 1): ((a / 2, 0.0, 0.0), (0.0, a / 2, 0.0)),
    }
    return TorusField(3, half, cutoff=1.0).completed()


def random_torus_field(n, cutoff, rng, divergence_free=False, amplitude=1.0, zero_mean=True):
    """Random valid field supported on all representatives inside the ball."""
    lattice = enumerate_lattice(n, cutoff, zero_mean=zero_mean)
    coeffs = {}
    for k in lattice.representatives:
        kv = np.array(k, dtype=float)
        a = amplitude * rng.standard_normal(n)
        b = amplitude * rng.standard_normal(n)
        if k == (0,) * n:
            a = np.zeros(n)
        elif divergence_free:
            a = a - (a @ kv) * kv / (kv @ kv)
            b = b - (b @ kv) * kv / (kv @ kv)
        coeffs[k] = (a, b)
    return TorusField(n, coeffs, cutoff).completed()
