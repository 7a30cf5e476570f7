"""Structure of the linear lift into divergence-free fields on SO(d) x T^d.

The lift sends the basis vector e_mu to a right-invariant rotation part
S_mu Q plus torus components given by matrix entries of Q. The matrices
S_mu are caller-supplied inputs; everything verified here concerns the
algebra that makes the lifted fields uniformly smooth: derivative words of
the entry functions, sparsity of products of so(d) basis elements, and
closure of their commutators.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from quadflow.errors import NotOrthogonal, UnclassifiedCommutator

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SoBasisElement:
    """E with +1 at (i, j) and -1 at (j, i), zero-based indices, i < j."""

    i: int
    j: int
    dim: int

    @property
    def matrix(self):
        out = np.zeros((self.dim, self.dim))
        out[self.i, self.j] = 1.0
        out[self.j, self.i] = -1.0
        return out


def standard_so_basis(dim):
    """The d(d-1)/2 elementary antisymmetric matrices, pairs in lex order."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return [SoBasisElement(i, j, dim) for i in range(dim) for j in range(i + 1, dim)]


def rotation_exp(element, t):
    """exp(t E) as a Givens rotation in the (i, j) plane."""
    out = np.eye(element.dim)
    c, s = math.cos(t), math.sin(t)
    out[element.i, element.i] = c
    out[element.j, element.j] = c
    out[element.i, element.j] = s
    out[element.j, element.i] = -s
    return out


class LiftData:
    """Dimension plus the caller-supplied antisymmetric matrices S_mu."""

    def __init__(self, dim, s_matrices, tol=1e-14):
        self.dim = int(dim)
        mats = []
        for mu, s in enumerate(s_matrices):
            s = np.asarray(s, dtype=float)
            if s.shape != (self.dim, self.dim):
                raise ValueError(f"S_{mu} must be {self.dim} x {self.dim}")
            gap = float(np.max(np.abs(s + s.T), initial=0.0))
            if gap > tol:
                raise ValueError(f"S_{mu} fails antisymmetry by {gap:.3e}")
            mats.append(s.copy())
        self.s_matrices = tuple(mats)

    @property
    def count(self):
        return len(self.s_matrices)


def _require_orthogonal(q, dim, tol=1e-10):
    q = np.asarray(q, dtype=float)
    if q.shape != (dim, dim):
        raise ValueError(f"Q must be {dim} x {dim}")
    gap = float(np.max(np.abs(q.T @ q - np.eye(dim))))
    if gap > tol:
        raise NotOrthogonal(f"|Q^T Q - I| = {gap:.3e} exceeds {tol:.1e}")
    return q


@dataclass
class LiftFieldValue:
    so_part: np.ndarray
    torus_part: np.ndarray


class LiftFieldEvaluator:
    """Pointwise values of the lifted basis fields w_mu on SO(d) x T^d.

    At an orthogonal Q the rotation part is S_mu Q (tangent to SO(d)) and
    the torus part collects the entry functions F_mu,nu(Q) = e_mu . Q e_nu
    over nu.
    """

    def __init__(self, data):
        self.data = data

    def __call__(self, mu, q):
        q = _require_orthogonal(q, self.data.dim)
        if not 0 <= mu < self.data.count:
            raise ValueError("mu out of range")
        return LiftFieldValue(self.data.s_matrices[mu] @ q, q[mu, :].copy())


def lift_fields(data):
    return LiftFieldEvaluator(data)


def entry_function(mu, nu, q):
    """F_mu,nu(Q) = e_mu . Q e_nu."""
    return float(q[mu, nu])


def word_product(word, basis):
    """E_{a_k} ... E_{a_1} for the word [a_1, ..., a_k]."""
    dim = basis[0].dim
    out = np.eye(dim)
    for idx in word:
        out = basis[idx].matrix @ out
    return out


def f_derivative(mu, nu, q, word, basis=None, method="formula", step=1e-4):
    """Iterated derivative of F_mu,nu at Q along a word of basis directions.

    The word [a_1, ..., a_k] means: differentiate first along Q E_{a_1},
    then along the next direction, and so on. The closed form is
    e_mu . Q E_{a_k} ... E_{a_1} e_nu; the finite-difference route nests
    Richardson-extrapolated central differences along the one-parameter
    rotation subgroups. The step is floored at eps^(1/(4+k)) so deep words
    stay above the rounding noise of the nested quotients.
    """
    q = np.asarray(q, dtype=float)
    dim = q.shape[0]
    if basis is None:
        basis = standard_so_basis(dim)
    _require_orthogonal(q, dim)
    word = list(word)
    if method == "formula":
        return float((q @ word_product(word, basis))[mu, nu])
    if method != "fd":
        raise ValueError("method must be 'formula' or 'fd'")
    h = max(step, _EPS ** (1.0 / (4.0 + len(word))))

    def recurse(mat, remaining):
        if not remaining:
            return entry_function(mu, nu, mat)
        last = remaining[-1]
        rest = remaining[:-1]

        def probe(t):
            return recurse(mat @ rotation_exp(basis[last], t), rest)

        c1 = (probe(h) - probe(-h)) / (2.0 * h)
        c2 = (probe(0.5 * h) - probe(-0.5 * h)) / h
        return (4.0 * c2 - c1) / 3.0

    return recurse(q, word)


@dataclass
class SparsityReport:
    ok: bool
    max_per_row: int
    max_per_col: int
    values_ok: bool


def product_sparsity_check(word, dim, basis=None):
    """Products of basis elements keep at most one entry of modulus one per
    row and per column."""
    if basis is None:
        basis = standard_so_basis(dim)
    mat = word_product(list(word), basis)
    nz = np.abs(mat) > 0
    row = int(nz.sum(axis=1).max(initial=0))
    col = int(nz.sum(axis=0).max(initial=0))
    vals_ok = bool(np.all(np.isin(mat, (-1.0, 0.0, 1.0))))
    return SparsityReport(row <= 1 and col <= 1 and vals_ok, row, col, vals_ok)


@dataclass
class CommutatorResult:
    kind: str  # "zero" or "basis"
    sign: int
    pair: tuple


def commutator_check(alpha, beta, dim=None, basis=None):
    """Classify [E_alpha, E_beta] as zero or a signed basis element."""
    if basis is None:
        basis = standard_so_basis(dim)
    a = basis[alpha].matrix if isinstance(alpha, int) else alpha.matrix
    b = basis[beta].matrix if isinstance(beta, int) else beta.matrix
    c = a @ b - b @ a
    nz = np.argwhere(c != 0.0)
    if nz.size == 0:
        return CommutatorResult("zero", 0, None)
    if len(nz) == 2:
        (i1, j1), (i2, j2) = (tuple(r) for r in nz)
        if (i1, j1) == (j2, i2) and c[i1, j1] == -c[i2, j2] and abs(c[i1, j1]) == 1.0:
            i, j = (i1, j1) if i1 < j1 else (i2, j2)
            return CommutatorResult("basis", int(c[i, j]), (int(i), int(j)))
    raise UnclassifiedCommutator(f"bracket of {alpha} and {beta} is not 0 or +-E")


def commutator_closure(dim):
    """Classify every ordered basis pair; raises if any bracket escapes."""
    basis = standard_so_basis(dim)
    out = {}
    for a in range(len(basis)):
        for b in range(len(basis)):
            out[(a, b)] = commutator_check(a, b, basis=basis)
    return out


@dataclass
class CommutatorBoundReport:
    max_norm_per_length: list
    max_norm: float
    s_norm: float
    observed_constant: float
    exhaustive: bool
    words_checked: int


def iterated_commutator_bound(s, max_length, exhaustive_limit=20000, samples=2000, seed=0):
    """Max Frobenius norm of nested brackets [E_{a_1}, [..., [E_{a_k}, S]...]].

    Exhaustive over all words per length while the word count stays below
    ``exhaustive_limit``, seeded sampling beyond. The observed constant is
    the max norm divided by |S|_F.
    """
    s = np.asarray(s, dtype=float)
    dim = s.shape[0]
    basis = standard_so_basis(dim)
    nb = len(basis)
    rng = np.random.default_rng(seed)
    s_norm = float(np.linalg.norm(s))
    per_length = []
    words_checked = 0
    exhaustive = True
    for k in range(1, max_length + 1):
        total = nb**k
        if total <= exhaustive_limit:
            words = product(range(nb), repeat=k)
        else:
            exhaustive = False
            words = (tuple(rng.integers(0, nb, size=k)) for _ in range(samples))
        worst = 0.0
        for word in words:
            m = s
            for idx in reversed(word):
                e = basis[idx].matrix
                m = e @ m - m @ e
            worst = max(worst, float(np.linalg.norm(m)))
            words_checked += 1
        per_length.append(worst)
    max_norm = max(per_length, default=0.0)
    constant = max_norm / s_norm if s_norm > 0 else 0.0
    return CommutatorBoundReport(per_length, max_norm, s_norm, constant,
                                 exhaustive, words_checked)


def random_antisymmetric(dim, rng, amplitude=1.0):
    a = amplitude * rng.standard_normal((dim, dim))
    return a - a.T
