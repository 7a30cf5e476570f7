"""Trajectories of quadratic flows and of fields on the torus and sphere.

All integrations run through one adaptive Dormand-Prince 5(4) stepper
living in the kernel backends; dense output is reconstructed here with
cubic Hermite interpolation from the stored node derivatives.
"""

import numpy as np

from quadflow.backend import backend_name, get_kernels
from quadflow.errors import StepFailure
from quadflow.harmonics import SphereField
from quadflow.polynomials import PolynomialField
from quadflow.tensor import QuadraticTensor
from quadflow.torus import TorusField


class Trajectory:
    """Time grid, states, node derivatives and integrator statistics."""

    def __init__(self, t, y, f, rtol, atol, naccepted, nrejected, backend):
        self.t = t
        self.y = y
        self.f = f
        self.rtol = rtol
        self.atol = atol
        self.naccepted = naccepted
        self.nrejected = nrejected
        self.backend = backend
        if not np.all(np.diff(t) > 0):
            raise ValueError("time grid must be strictly increasing")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
            raise ValueError("non-finite state in trajectory")

    @property
    def dim(self):
        return self.y.shape[1]

    @property
    def t_final(self):
        return float(self.t[-1])

    @property
    def final_state(self):
        return self.y[-1]

    def sample(self, times):
        """Cubic Hermite dense output at the requested times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if times.min() < self.t[0] - 1e-12 or times.max() > self.t[-1] + 1e-12:
            raise ValueError("sample time outside the integrated span")
        times = np.clip(times, self.t[0], self.t[-1])
        idx = np.clip(np.searchsorted(self.t, times, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[idx + 1] - self.t[idx]
        s = (times - self.t[idx]) / h
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        out = (
            h00[:, None] * self.y[idx]
            + (h10 * h)[:, None] * self.f[idx]
            + h01[:, None] * self.y[idx + 1]
            + (h11 * h)[:, None] * self.f[idx + 1]
        )
        return out

    def norm_sq_drift(self):
        """Max deviation of |y(t)|^2 from its initial value over the nodes."""
        sq = np.sum(self.y * self.y, axis=1)
        return float(np.max(np.abs(sq - sq[0])))


def _source_spec(source, tangent=False):
    """Kernel name and argument tuple for a flow source."""
    if isinstance(source, QuadraticTensor):
        return ("quad_rhs_tan" if tangent else "quad_rhs"), source.kernel_args(), source.d
    if isinstance(source, TorusField):
        return ("torus_rhs_tan" if tangent else "torus_rhs"), source.kernel_args(), source.n
    if isinstance(source, SphereField):
        source = source.to_polynomial_field()
    if isinstance(source, PolynomialField):
        args = source.kernel_args_tangent() if tangent else source.kernel_args()
        return ("poly_rhs_tan" if tangent else "poly_rhs"), args, source.nvars
    raise TypeError(f"cannot integrate source of type {type(source).__name__}")


def _run(kind, args, y0, t0, t1, rtol, atol, max_step, first_step, backend):
    kern = get_kernels(backend)
    rhs = getattr(kern, kind)
    ts, ys, fs, nacc, nrej, status = kern.rk45(
        rhs, args, np.asarray(y0, dtype=float), float(t0), float(t1),
        float(rtol), float(atol), float(max_step), float(first_step),
    )
    if status != 0:
        raise StepFailure(f"step size underflow at t = {ts[-1]!r}")
    return Trajectory(ts, ys, fs, rtol, atol, int(nacc), int(nrej), backend_name(backend))


def integrate_quadratic(tensor, y0, t_max, rtol=1e-10, atol=1e-10,
                        max_step=np.inf, first_step=0.0, t0=0.0, backend=None):
    """Flow of dy/dt = B y y from y0 over [t0, t0 + t_max]."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    kind, args, dim = _source_spec(tensor)
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (dim,):
        raise ValueError(f"y0 must have shape ({dim},)")
    return _run(kind, args, y0, t0, t0 + t_max, rtol, atol, max_step, first_step, backend)


def integrate_manifold_field(field, x0, t_max, rtol=1e-10, atol=1e-10,
                             max_step=np.inf, first_step=0.0, t0=0.0, backend=None,
                             wrap_span=1.0):
    """Flow of a torus field or of a sphere/polynomial field.

    Torus trajectories are integrated in wrapped chunks of ``wrap_span``
    time units: the state is reduced mod 1 between chunks so the relative
    error scale never grows with the winding, and the integer offsets are
    added back so the returned trajectory is a continuous lift. Sphere and
    polynomial fields integrate in ambient coordinates; tangency keeps
    |x| = 1 up to monitored drift.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    kind, args, dim = _source_spec(field)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dim,):
        raise ValueError(f"x0 must have shape ({dim},)")
    if not (isinstance(field, TorusField) and wrap_span):
        return _run(kind, args, x0, t0, t0 + t_max, rtol, atol, max_step, first_step, backend)

    pieces = []
    base = np.zeros(dim)
    x_work = x0.copy()
    t_cur = t0
    t_end = t0 + t_max
    while t_cur < t_end:
        shift = np.floor(x_work)
        base += shift
        x_work = x_work - shift
        t_next = min(t_cur + wrap_span, t_end)
        piece = _run(kind, args, x_work, t_cur, t_next, rtol, atol, max_step,
                     first_step, backend)
        pieces.append((piece, base.copy()))
        x_work = piece.final_state.copy()
        t_cur = piece.t_final
    ts = [pieces[0][0].t]
    ys = [pieces[0][0].y + pieces[0][1]]
    fs = [pieces[0][0].f]
    for piece, offset in pieces[1:]:
        ts.append(piece.t[1:])
        ys.append(piece.y[1:] + offset)
        fs.append(piece.f[1:])
    return Trajectory(
        np.concatenate(ts), np.concatenate(ys), np.concatenate(fs),
        rtol, atol,
        sum(p.naccepted for p, _ in pieces),
        sum(p.nrejected for p, _ in pieces),
        pieces[0][0].backend,
    )


def integrate_with_tangent(source, x0, w0, t_max, rtol=1e-8, atol=1e-10,
                           max_step=np.inf, first_step=0.0, t0=0.0, backend=None):
    """Integrate the flow together with one tangent vector.

    The state is [x; w] with dw/dt = J(x) w; used by the Lyapunov estimator.
    """
    kind, args, dim = _source_spec(source, tangent=True)
    z0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(w0, dtype=float)])
    if z0.shape != (2 * dim,):
        raise ValueError(f"state plus tangent must have length {2 * dim}")
    return _run(kind, args, z0, t0, t0 + t_max, rtol, atol, max_step, first_step, backend)


def source_dimension(source):
    return _source_spec(source)[2]
