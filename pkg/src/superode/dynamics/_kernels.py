"""Numeric inner loops for compiled real systems.

numba versions are used when available; set ``SUPERODE_DISABLE_NUMBA=1`` to
force the pure-numpy fallback (same results up to rounding order).
"""
from __future__ import annotations

import os

import numpy as np

_disabled = os.environ.get("SUPERODE_DISABLE_NUMBA", "").lower() in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def _rhs_numpy(x, target, coef, ptr, idx, pw):
    # overflow shows up as inf and is reported by the loops
    with np.errstate(over="ignore", invalid="ignore"):
        vals = x[idx] ** pw
        prods = coef * np.multiply.reduceat(vals, ptr[:-1])
    return np.bincount(target, weights=prods, minlength=x.shape[0])


def _rk4_numpy(x0, h, nsteps, every, target, coef, ptr, idx, pw):
    n_out = nsteps // every + 1
    out = np.empty((n_out, x0.shape[0]))
    out[0] = x0
    x = x0.copy()
    for s in range(1, nsteps + 1):
        k1 = _rhs_numpy(x, target, coef, ptr, idx, pw)
        k2 = _rhs_numpy(x + 0.5 * h * k1, target, coef, ptr, idx, pw)
        k3 = _rhs_numpy(x + 0.5 * h * k2, target, coef, ptr, idx, pw)
        k4 = _rhs_numpy(x + h * k3, target, coef, ptr, idx, pw)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            return out[: (s - 1) // every + 1], s
        if s % every == 0:
            out[s // every] = x
    return out, -1


def _euler_numpy(x0, h, nsteps, target, coef, ptr, idx, pw):
    out = np.empty((nsteps + 1, x0.shape[0]))
    out[0] = x0
    x = x0.copy()
    for s in range(1, nsteps + 1):
        x = x + h * _rhs_numpy(x, target, coef, ptr, idx, pw)
        if not np.all(np.isfinite(x)):
            return out[:s], s
        out[s] = x
    return out, -1


if HAVE_NUMBA:

    @njit(cache=True)
    def _rhs_nb(x, target, coef, ptr, idx, pw):
        out = np.zeros(x.shape[0])
        for t in range(target.shape[0]):
            v = coef[t]
            for f in range(ptr[t], ptr[t + 1]):
                p = pw[f]
                if p == 1:
                    v *= x[idx[f]]
                elif p != 0:
                    v *= x[idx[f]] ** p
            out[target[t]] += v
        return out

    @njit(cache=True)
    def _finite(x):
        for i in range(x.shape[0]):
            if not np.isfinite(x[i]):
                return False
        return True

    @njit(cache=True)
    def _rk4_nb(x0, h, nsteps, every, target, coef, ptr, idx, pw):
        n_out = nsteps // every + 1
        out = np.empty((n_out, x0.shape[0]))
        out[0] = x0
        x = x0.copy()
        for s in range(1, nsteps + 1):
            k1 = _rhs_nb(x, target, coef, ptr, idx, pw)
            k2 = _rhs_nb(x + 0.5 * h * k1, target, coef, ptr, idx, pw)
            k3 = _rhs_nb(x + 0.5 * h * k2, target, coef, ptr, idx, pw)
            k4 = _rhs_nb(x + h * k3, target, coef, ptr, idx, pw)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not _finite(x):
                return out[: (s - 1) // every + 1], s
            if s % every == 0:
                out[s // every] = x
        return out, -1

    @njit(cache=True)
    def _euler_nb(x0, h, nsteps, target, coef, ptr, idx, pw):
        out = np.empty((nsteps + 1, x0.shape[0]))
        out[0] = x0
        x = x0.copy()
        for s in range(1, nsteps + 1):
            x = x + h * _rhs_nb(x, target, coef, ptr, idx, pw)
            if not _finite(x):
                return out[:s], s
            out[s] = x
        return out, -1

    rhs_eval = _rhs_nb
    rk4_loop = _rk4_nb
    euler_loop = _euler_nb
else:
    rhs_eval = _rhs_numpy
    rk4_loop = _rk4_numpy
    euler_loop = _euler_numpy
