"""Kernel backend selection.

The hot numeric loops (quadratic, trigonometric and polynomial right-hand
sides plus the adaptive Runge-Kutta stepper) exist twice: a numba build in
``quadflow.kernels.jit`` and a pure numpy build in
``quadflow.kernels.reference``. The environment variable ``QUADFLOW_BACKEND``
picks one:

    QUADFLOW_BACKEND=numba   force the jit build (error if numba is missing)
    QUADFLOW_BACKEND=numpy   force the numpy fallback

Unset, the jit build is used when numba imports cleanly, otherwise the
fallback with a one-time warning. ``benchmarks/bench_backends.py`` compares
the two.
"""

import os
import warnings

ENV_VAR = "QUADFLOW_BACKEND"

_MODULES = {}


def _load(name):
    if name not in _MODULES:
        if name == "numba":
            from quadflow.kernels import jit as mod
        else:
            from quadflow.kernels import reference as mod
        _MODULES[name] = mod
    return _MODULES[name]


def resolve_backend(name=None):
    """Resolve a backend name from the argument or the environment."""
    if name is None:
        name = os.environ.get(ENV_VAR, "").strip().lower() or None
    if name not in (None, "numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba":
        import numba  # noqa: F401  fail loudly if forced but unavailable

        return "numba"
    if name == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401

        return "numba"
    except ImportError:  # pragma: no cover - exercised only without numba
        warnings.warn("numba unavailable, falling back to the numpy kernels")
        return "numpy"


def get_kernels(name=None):
    """Return the kernel module for the resolved backend."""
    return _load(resolve_backend(name))


def backend_name(name=None):
    return resolve_backend(name)
