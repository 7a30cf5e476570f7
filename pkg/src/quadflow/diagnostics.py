"""Flow diagnostics: conjugacy certification, Lyapunov estimates, sections.

The conjugacy check integrates the manifold flow and the embedded quadratic
flow independently and compares them through the embedding on a shared time
grid. The largest Lyapunov exponent uses tangent dynamics with periodic
renormalization. Poincare sections refine hyperplane crossings by bisection
on the dense output.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from quadflow.harmonics import SphereField
from quadflow.integrate import (
    Trajectory,
    integrate_manifold_field,
    integrate_quadratic,
    integrate_with_tangent,
    source_dimension,
)
from quadflow.torus import TorusField, psi_torus


def embed_state(manifold_field, x):
    """Psi(x) for the embedding attached to a torus or sphere field."""
    if isinstance(manifold_field, TorusField):
        return psi_torus(manifold_field, x)
    if isinstance(manifold_field, SphereField):
        # polynomial evaluation; valid for points within integration drift
        # of the sphere, so no strict on-sphere gate here
        return manifold_field.basis.eval_all(x)
    raise TypeError("embedding is defined for torus and sphere fields")


@dataclass
class ConjugacyReport:
    sup_error: float
    times: np.ndarray
    errors: np.ndarray
    x_trajectory: Trajectory
    y_trajectory: Trajectory


def conjugacy_error(manifold_field, tensor, x0, t_max, rtol=1e-10, atol=1e-10,
                    nsamples=1001, backend=None):
    """sup_t |Psi(x(t)) - y(t)| with both flows integrated independently."""
    x0 = np.asarray(x0, dtype=float)
    xtraj = integrate_manifold_field(manifold_field, x0, t_max, rtol=rtol, atol=atol,
                                     backend=backend)
    y0 = embed_state(manifold_field, x0)
    ytraj = integrate_quadratic(tensor, y0, t_max, rtol=rtol, atol=atol, backend=backend)
    times = np.linspace(0.0, t_max, nsamples)
    xs = xtraj.sample(times)
    ys = ytraj.sample(times)
    psis = np.array([embed_state(manifold_field, x) for x in xs])
    errors = np.linalg.norm(psis - ys, axis=1)
    return ConjugacyReport(float(errors.max()), times, errors, xtraj, ytraj)


@dataclass
class LyapunovResult:
    estimate: float
    trace: np.ndarray
    variability: float
    converged: bool
    renorm_interval: float
    transient_intervals: int
    seed: int
    interval_logs: np.ndarray = field(repr=False, default=None)


def lyapunov_max(source, x0, t_max, renorm_interval=1.0, seed=0,
                 rtol=1e-8, atol=1e-10, transient_fraction=0.2, backend=None):
    """Largest Lyapunov exponent by tangent dynamics with renormalization.

    One random unit tangent vector (fixed by ``seed``) is advected along the
    flow and rescaled every ``renorm_interval`` time units; the estimate is
    the average log growth after dropping the transient fraction. The trace
    of running estimates is returned together with the standard deviation
    over its last quarter; a spread criterion over that window sets
    ``converged`` (reported, never fatal).
    """
    dim = source_dimension(source)
    wrap = isinstance(source, TorusField)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(dim)
    w /= np.linalg.norm(w)
    x = np.asarray(x0, dtype=float).copy()
    n_intervals = max(4, int(math.ceil(t_max / renorm_interval)))
    logs = np.empty(n_intervals)
    for q in range(n_intervals):
        traj = integrate_with_tangent(source, x, w, renorm_interval,
                                      rtol=rtol, atol=atol, backend=backend)
        z = traj.final_state
        x = z[:dim]
        if wrap:
            x = np.mod(x, 1.0)
        w = z[dim:]
        growth = np.linalg.norm(w)
        logs[q] = math.log(growth)
        w /= growth
    discard = int(transient_fraction * n_intervals)
    kept = logs[discard:]
    counts = np.arange(1, kept.size + 1)
    trace = np.cumsum(kept) / (counts * renorm_interval)
    quarter = trace[-max(1, trace.size // 4):]
    variability = float(np.std(quarter))
    spread = float(quarter.max() - quarter.min())
    estimate = float(trace[-1])
    converged = spread <= max(0.2 * abs(estimate), 1e-3)
    return LyapunovResult(estimate, trace, variability, converged,
                          renorm_interval, discard, seed, interval_logs=logs)


@dataclass
class ChaoticScanResult:
    best_x0: np.ndarray
    best_estimate: float
    candidates: np.ndarray
    estimates: np.ndarray
    seed: int


def scan_chaotic_ic(torus_field, count=16, t_scan=250.0, seed=0,
                    rtol=1e-8, atol=1e-10, backend=None):
    """Seeded scan for a chaotic-zone initial condition.

    Candidates are uniform on the torus; the one with the largest
    short-horizon exponent wins.
    """
    rng = np.random.default_rng(seed)
    candidates = rng.random((count, torus_field.n))
    estimates = np.empty(count)
    for q, x0 in enumerate(candidates):
        res = lyapunov_max(torus_field, x0, t_scan, seed=seed + 1000 + q,
                           rtol=rtol, atol=atol, backend=backend)
        estimates[q] = res.estimate
    best = int(np.argmax(estimates))
    return ChaoticScanResult(candidates[best], float(estimates[best]),
                             candidates, estimates, seed)


@dataclass
class PoincareSection:
    times: np.ndarray
    points: np.ndarray
    normal: np.ndarray
    offset: float
    direction: int
    lattice_levels: bool


def poincare_section(source, x0, t_max, normal, offset=0.0, direction=0,
                     rtol=1e-10, atol=1e-10, refine_tol=1e-10, backend=None):
    """Hyperplane crossings of the flow from x0.

    Crossings of g(x) = normal . x - offset through zero are detected by
    sign changes between accepted nodes and refined by bisection on the
    cubic Hermite interpolant until the bracket is below ``refine_tol``.
    For torus fields the hyperplane lives on the covering space, so every
    integer level of g counts as a crossing. ``direction`` filters by the
    sign of dg/dt (0 keeps both).
    """
    from quadflow.tensor import QuadraticTensor

    normal = np.asarray(normal, dtype=float)
    if isinstance(source, QuadraticTensor):
        traj = integrate_quadratic(source, x0, t_max, rtol=rtol, atol=atol, backend=backend)
    else:
        traj = integrate_manifold_field(source, x0, t_max, rtol=rtol, atol=atol,
                                        backend=backend)
    lattice_levels = isinstance(source, TorusField)
    g_nodes = traj.y @ normal - offset
    times = []
    points = []

    def g_at(t):
        return float(traj.sample(t)[0] @ normal - offset)

    for i in range(len(traj.t) - 1):
        g0, g1 = g_nodes[i], g_nodes[i + 1]
        if lattice_levels:
            lo, hi = (g0, g1) if g0 <= g1 else (g1, g0)
            levels = range(int(math.floor(lo)) + 1, int(math.floor(hi)) + 1)
        else:
            levels = [0.0] if (g0 < 0.0 <= g1) or (g1 < 0.0 <= g0) else []
        for level in levels:
            ta, tb = float(traj.t[i]), float(traj.t[i + 1])
            fa = g0 - level
            if fa == 0.0:
                tc = ta
            else:
                fb = g1 - level
                if fa * fb > 0:
                    continue
                while tb - ta > refine_tol:
                    tc = 0.5 * (ta + tb)
                    fc = g_at(tc) - level
                    if fa * fc <= 0:
                        tb = tc
                    else:
                        ta, fa = tc, fc
                tc = 0.5 * (ta + tb)
            state = traj.sample(tc)[0]
            cross_dir = 1 if g1 > g0 else -1
            if direction and cross_dir != direction:
                continue
            times.append(tc)
            points.append(state)
    times = np.array(times)
    points = np.array(points).reshape(len(times), traj.dim)
    return PoincareSection(times, points, normal, float(offset), int(direction),
                           lattice_levels)


def wrap_torus(points):
    return np.mod(points, 1.0)


def occupied_box_count(points_2d, bins=32, lo=0.0, hi=1.0):
    """Number of occupied cells of a bins x bins grid over [lo, hi]^2."""
    pts = np.asarray(points_2d, dtype=float)
    if pts.size == 0:
        return 0
    scaled = np.clip((pts - lo) / (hi - lo), 0.0, 1.0 - 1e-12)
    cells = np.floor(scaled * bins).astype(int)
    return len({(int(a), int(b)) for a, b in cells})


@dataclass
class DiagnosticsReport:
    norm_sq_drift: float = None
    conjugacy_sup_error: float = None
    lyapunov: LyapunovResult = None
    poincare_count: int = None
    metadata: dict = field(default_factory=dict)
