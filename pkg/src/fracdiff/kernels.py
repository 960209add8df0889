"""Backend selection for the hot loops.

The compiled core (``fracdiff._ckernels``) is used when it imports; otherwise
the numpy implementation in ``fracdiff._pykernels`` takes over.  Setting
``FRACDIFF_BACKEND=python`` forces the fallback.

Thread count for the compiled core comes from :func:`set_num_threads`, or
the ``FRACDIFF_THREADS`` environment variable, default 1.  Work is split over
independent spectral modes only, so outputs do not depend on it.
"""

import importlib
import os

import numpy as np

from . import _pykernels

_threads = None


def _load(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("fracdiff._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        _load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def get_backend(name=None):
    """Return the kernel module ``name`` (default: the active backend)."""
    if name is None:
        return _active
    return _load(name)


def _select():
    forced = os.environ.get("FRACDIFF_BACKEND", "").strip().lower()
    if forced:
        return _load(forced)
    try:
        return _load("cython")
    except ImportError:
        return _pykernels


_active = _select()
BACKEND = _active.NAME


def set_num_threads(n):
    global _threads
    if n is not None and int(n) < 1:
        raise ValueError("thread count must be >= 1")
    _threads = None if n is None else int(n)


def get_num_threads():
    if _threads is not None:
        return _threads
    env = os.environ.get("FRACDIFF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"FRACDIFF_THREADS must be an integer, got {env!r}") from None
    return 1


def _real(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _cplx(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def neumaier_sum(x):
    return _active.neumaier_sum(_cplx(np.ravel(x)))


def causal_convolve(w, x):
    return _active.causal_convolve(_real(w), _cplx(x), get_num_threads())


def l1_relaxation(lam, b, c, n_steps):
    return _active.l1_relaxation(_real(lam), _real(b), float(c), int(n_steps), get_num_threads())


def exp_convolve(decay, w_prev, w_cur, f):
    return _active.exp_convolve(
        _real(decay), _real(w_prev), _real(w_cur), _cplx(f), get_num_threads()
    )
