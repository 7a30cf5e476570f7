"""Sparse structure tensors of homogeneous quadratic ODEs.

A tensor B with entries B[i, j, k] defines the flow dy_i/dt = B_ijk y_j y_k.
Antisymmetry under exchange of the first and last index (B_ijk = -B_kji)
makes y . dy/dt a cubic form that vanishes identically, so the Euclidean
norm of y is a first integral.
"""

import math
from dataclasses import dataclass

import numpy as np


def _canonicalize(i, j, k, v):
    """Sum duplicate triples, drop exact zeros, sort lexicographically."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    v = np.asarray(v, dtype=np.float64)
    acc = {}
    for q in range(i.shape[0]):
        key = (int(i[q]), int(j[q]), int(k[q]))
        acc[key] = acc.get(key, 0.0) + float(v[q])
    triples = sorted(key for key, val in acc.items() if val != 0.0)
    if not triples:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), np.empty(0)
    ii = np.array([t[0] for t in triples], dtype=np.int64)
    jj = np.array([t[1] for t in triples], dtype=np.int64)
    kk = np.array([t[2] for t in triples], dtype=np.int64)
    vv = np.array([acc[t] for t in triples])
    return ii, jj, kk, vv


class QuadraticTensor:
    """Sparse coefficient tensor of dy_i/dt = B_ijk y_j y_k."""

    def __init__(self, d, entries=(), certified=False):
        self.d = int(d)
        if len(entries):
            rows = [(int(i), int(j), int(k), float(v)) for i, j, k, v in entries]
            ii, jj, kk, vv = _canonicalize(
                [r[0] for r in rows],
                [r[1] for r in rows],
                [r[2] for r in rows],
                [r[3] for r in rows],
            )
        else:
            ii = jj = kk = np.empty(0, dtype=np.int64)
            vv = np.empty(0)
        if len(ii) and (ii.max() >= self.d or jj.max() >= self.d or kk.max() >= self.d):
            raise ValueError("tensor index out of range")
        if len(ii) and min(ii.min(), jj.min(), kk.min()) < 0:
            raise ValueError("negative tensor index")
        self.i = ii
        self.j = jj
        self.k = kk
        self.values = vv
        for arr in (self.i, self.j, self.k, self.values):
            arr.setflags(write=False)
        self.certified = bool(certified)

    @property
    def nnz(self):
        return self.values.shape[0]

    def entry_list(self):
        return [
            (int(a), int(b), int(c), float(v))
            for a, b, c, v in zip(self.i, self.j, self.k, self.values)
        ]

    def entry_dict(self):
        return {
            (int(a), int(b), int(c)): float(v)
            for a, b, c, v in zip(self.i, self.j, self.k, self.values)
        }

    def dense(self):
        out = np.zeros((self.d, self.d, self.d))
        out[self.i, self.j, self.k] = self.values
        return out

    def rhs(self, y):
        """V(y) with V_i = B_ijk y_j y_k."""
        y = np.asarray(y, dtype=float)
        return np.bincount(self.i, weights=self.values * y[self.j] * y[self.k], minlength=self.d)

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        jac = np.zeros((self.d, self.d))
        np.add.at(jac, (self.i, self.j), self.values * y[self.k])
        np.add.at(jac, (self.i, self.k), self.values * y[self.j])
        return jac

    def max_abs(self):
        return float(np.max(np.abs(self.values))) if self.nnz else 0.0

    def kernel_args(self):
        return (self.i, self.j, self.k, self.values, self.d)


class SymmetrizedTensor(QuadraticTensor):
    """Quadratic tensor symmetric in its last two indices."""

    def __init__(self, d, entries=(), source_certified=False):
        super().__init__(d, entries, certified=False)
        self.source_certified = bool(source_certified)
        lookup = self.entry_dict()
        for (a, b, c), v in lookup.items():
            if lookup.get((a, c, b), 0.0) != v:
                raise ValueError("entries are not symmetric in the last two indices")


def symmetrize(tensor):
    """Half-sum B over its last two indices; the quadratic map is unchanged."""
    entries = []
    for a, b, c, v in tensor.entry_list():
        entries.append((a, b, c, 0.5 * v))
        entries.append((a, c, b, 0.5 * v))
    return SymmetrizedTensor(tensor.d, entries, source_certified=tensor.certified)


def check_antisymmetry(tensor):
    """Max |B_ijk + B_kji| over all stored index triples."""
    lookup = tensor.entry_dict()
    worst = 0.0
    for (a, b, c), v in lookup.items():
        worst = max(worst, abs(v + lookup.get((c, b, a), 0.0)))
    return worst


@dataclass
class TaoConditionReport:
    max_random_residual: float
    symbolic_max: float
    samples: int
    seed: int

    @property
    def max_residual(self):
        return max(self.max_random_residual, self.symbolic_max)


def check_tao_condition(tensor, samples=1000, seed=0):
    """Residuals of the cubic form sum_ijk B_ijk y_i y_j y_k.

    The form is probed at random unit vectors and contracted symbolically:
    the full symmetrization of the coefficient array must vanish entry by
    entry for the form to be identically zero.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        y = rng.standard_normal(tensor.d)
        y /= np.linalg.norm(y)
        worst = max(worst, abs(float(y @ tensor.rhs(y))))

    # fsum computes the exactly rounded sum, so algebraic cancellation of
    # entries stored as exact +/- pairs yields a true zero.
    sym = {}
    for a, b, c, v in tensor.entry_list():
        sym.setdefault(tuple(sorted((a, b, c))), []).append(v)
    symbolic = max((abs(math.fsum(vals)) for vals in sym.values()), default=0.0)
    return TaoConditionReport(worst, symbolic, samples, seed)


def energy_form_max(tensor):
    """Max symmetrized coefficient of the cubic form y . V(y)."""
    return check_tao_condition(tensor, samples=0).symbolic_max


def tensor_divergence(tensor):
    """Coordinate divergence of V as a linear form.

    div V = sum_i dV_i/dy_i = sum_m coef[m] y_m with
    coef[m] = sum_i (B_iim + B_imi).
    """
    coef = np.zeros(tensor.d)
    for a, b, c, v in zip(tensor.i, tensor.j, tensor.k, tensor.values):
        if a == b:
            coef[c] += v
        if a == c:
            coef[b] += v
    return coef
