"""Multivariate polynomials keyed by exponent tuples.

Coefficients may be floats, Fractions (the harmonic-basis pipeline does its
Gram-Schmidt exactly) or complex numbers (intermediate holomorphic fields).
Term order is canonical: sorted exponent tuples.
"""

import math
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np


def monomial_exponents(nvars, degree):
    """Exponent tuples of total degree exactly ``degree``.

    Reverse lexicographic, so degree one lists x_1, x_2, ..., x_m.
    """
    out = set()
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.add(tuple(e))
    return sorted(out, reverse=True)


def monomials_up_to(nvars, degree):
    out = []
    for d in range(degree + 1):
        out.extend(monomial_exponents(nvars, d))
    return out


class Polynomial:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = int(nvars)
        self.terms = {}
        if terms:
            for e, c in terms.items():
                if c == 0:
                    continue
                e = tuple(int(v) for v in e)
                if len(e) != self.nvars:
                    raise ValueError("exponent tuple has wrong length")
                self.terms[e] = self.terms.get(e, 0) + c
            self.terms = {e: c for e, c in self.terms.items() if c != 0}

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i, c=1):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): c})

    @classmethod
    def monomial(cls, nvars, exponents, c=1):
        return cls(nvars, {tuple(exponents): c})

    # -- ring operations ----------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            if other == 0:
                return Polynomial.zero(self.nvars)
            return Polynomial(self.nvars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.terms.items()))))

    # -- calculus -----------------------------------------------------
    def diff(self, i):
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            ne = list(e)
            ne[i] -= 1
            terms[tuple(ne)] = terms.get(tuple(ne), 0) + c * e[i]
        return Polynomial(self.nvars, terms)

    def gradient(self):
        return [self.diff(i) for i in range(self.nvars)]

    def laplacian(self):
        out = Polynomial.zero(self.nvars)
        for i in range(self.nvars):
            out = out + self.diff(i).diff(i)
        return out

    def directional(self, matrix):
        """Derivative along the linear field x -> M x: sum_i (M x)_i d/dx_i."""
        out = Polynomial.zero(self.nvars)
        for i in range(self.nvars):
            di = self.diff(i)
            if not di.terms:
                continue
            for l in range(self.nvars):
                m = matrix[i][l] if not isinstance(matrix, np.ndarray) else matrix[i, l]
                if m == 0:
                    continue
                out = out + di * Polynomial.variable(self.nvars, l, m)
        return out

    # -- queries --------------------------------------------------------
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def max_abs_coeff(self):
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def sorted_terms(self):
        return sorted(self.terms.items())

    def map_coefficients(self, fn):
        return Polynomial(self.nvars, {e: fn(c) for e, c in self.terms.items()})

    def to_float(self):
        return self.map_coefficients(float)

    def __call__(self, x):
        x = np.asarray(x)
        if x.ndim == 1:
            total = 0.0
            for e, c in self.terms.items():
                v = c
                for l, p in enumerate(e):
                    if p:
                        v = v * x[l] ** p
                total += v
            return total
        out = np.zeros(x.shape[:-1])
        for e, c in self.terms.items():
            out += c * np.prod(x ** np.array(e), axis=-1)
        return out

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"x{i}^{p}" for i, p in enumerate(e) if p) or "1"
            bits.append(f"{c}*{mono}")
        return "Polynomial(" + " + ".join(bits) + ")"

    def sphere_normal_form(self):
        """Canonical representative modulo the ideal of |x|^2 - 1.

        Exponents of the last variable are reduced below 2 by substituting
        x_m^2 = 1 - sum_{i<m} x_i^2, which yields the unique representative
        that is at most linear in x_m.
        """
        m = self.nvars - 1
        work = dict(self.terms)
        done = {}
        while work:
            e, c = work.popitem()
            if c == 0:
                continue
            if e[m] < 2:
                done[e] = done.get(e, 0) + c
                continue
            base = list(e)
            base[m] -= 2
            base = tuple(base)
            work[base] = work.get(base, 0) + c
            for i in range(m):
                ei = list(base)
                ei[i] += 2
                ei = tuple(ei)
                work[ei] = work.get(ei, 0) - c
        return Polynomial(self.nvars, done)


def radius_sq(nvars):
    return Polynomial(nvars, {tuple(2 if i == l else 0 for i in range(nvars)): 1 for l in range(nvars)})


class PolynomialField:
    """Vector field on R^m with polynomial components."""

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("need at least one component")
        nvars = components[0].nvars
        if any(p.nvars != nvars for p in components):
            raise ValueError("component variable counts differ")
        if len(components) != nvars:
            raise ValueError("field must have one component per variable")
        self.nvars = nvars
        self.components = components

    def __add__(self, other):
        return PolynomialField([p + q for p, q in zip(self.components, other.components)])

    def __sub__(self, other):
        return PolynomialField([p - q for p, q in zip(self.components, other.components)])

    def __mul__(self, scalar):
        return PolynomialField([p * scalar for p in self.components])

    __rmul__ = __mul__

    def degree(self):
        return max(p.degree() for p in self.components)

    def to_float(self):
        return PolynomialField([p.to_float() for p in self.components])

    def __call__(self, x):
        x = np.asarray(x)
        vals = [p(x) for p in self.components]
        if x.ndim == 1:
            return np.array(vals)
        return np.stack(vals, axis=-1)

    def jacobian(self, x):
        return np.array([[p.diff(l)(x) for l in range(self.nvars)] for p in self.components])

    def dot_position(self):
        """The polynomial P(x) . x."""
        out = Polynomial.zero(self.nvars)
        for i, p in enumerate(self.components):
            out = out + p * Polynomial.variable(self.nvars, i)
        return out

    def sphere_tangential_part(self):
        """P - (P . x) x; tangent to the unit sphere by construction."""
        radial = self.dot_position()
        return PolynomialField(
            [p - radial * Polynomial.variable(self.nvars, i) for i, p in enumerate(self.components)]
        )

    def sphere_tangency_residual(self):
        """Max coefficient of the normal form of P . x on the sphere."""
        return self.dot_position().sphere_normal_form().max_abs_coeff()

    # -- kernel array packing -----------------------------------------
    def kernel_args(self):
        exps, coefs, ptr = _pack([p for p in self.components], self.nvars)
        return exps, coefs, ptr

    def kernel_args_tangent(self):
        exps, coefs, ptr = self.kernel_args()
        derivs = []
        for p in self.components:
            for l in range(self.nvars):
                derivs.append(p.diff(l))
        dexps, dcoefs, dptr = _pack(derivs, self.nvars)
        return exps, coefs, ptr, dexps, dcoefs, dptr


def _pack(polys, nvars):
    exps = []
    coefs = []
    ptr = [0]
    for p in polys:
        for e, c in p.sorted_terms():
            exps.append(e)
            coefs.append(float(c))
        ptr.append(len(coefs))
    if exps:
        exps_arr = np.array(exps, dtype=np.int64)
    else:
        exps_arr = np.zeros((0, nvars), dtype=np.int64)
    return exps_arr, np.array(coefs, dtype=np.float64), np.array(ptr, dtype=np.int64)


def gram_solve(rows, rhs):
    """Exact Gaussian elimination over Fractions; raises on singular systems."""
    n = len(rows)
    a = [[Fraction(v) for v in row] + [Fraction(rhs[i])] for i, row in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular system")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col]
        a[col] = [v / inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def fraction_nullspace(matrix, ncols):
    """Basis of the nullspace of a Fraction matrix, deterministic order.

    ``matrix`` is a list of rows (lists of Fractions). Free columns are
    parametrized in increasing index order, matching the textbook RREF
    construction.
    """
    rows = [list(r) for r in matrix]
    nrows = len(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [v / inv for v in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [Fraction(0)] * ncols
        vec[fcol] = Fraction(1)
        for prow, pcol in enumerate(pivots):
            vec[pcol] = -rows[prow][fcol]
        basis.append(vec)
    return basis


def double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1
