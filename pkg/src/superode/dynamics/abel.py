"""Liénard trajectories checked against the Abel equations they map to.

Along ``x' = x + xi, xi' = x^2`` put ``w = dx/dt`` as a function of ``x``:
then ``w w' - w = x^2`` (second kind), and ``u = 1/w`` gives
``u' + x^2 u^3 + u^2 = 0`` (first kind); primes are ``d/dx``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import Trajectory


class WindowSplitError(ValueError):
    """``dx/dt`` changes sign inside the window, so ``w`` is not a function of ``x``."""


@dataclass(frozen=True)
class AbelReport:
    second_kind: float  # max |w w' - w - x^2|
    first_kind: float  # max |u' + x^2 u^3 + u^2|
    samples: int

    @property
    def max_residual(self) -> float:
        return max(self.second_kind, self.first_kind)


def _centered(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (y[2:] - y[:-2]) / (x[2:] - x[:-2])


def abel_correspondence_check(traj: Trajectory, x: str | int = 0, xi: str | int = 1) -> AbelReport:
    xs = traj.column(x) if isinstance(x, str) else traj.states[:, x]
    ks = traj.column(xi) if isinstance(xi, str) else traj.states[:, xi]
    w = xs + ks
    if np.any(w == 0) or not (np.all(w > 0) or np.all(w < 0)):
        raise WindowSplitError("dx/dt vanishes or changes sign in the window; split it")
    dx = np.diff(xs)
    if not (np.all(dx > 0) or np.all(dx < 0)):
        raise WindowSplitError("x is not monotone along the window")
    wp = _centered(w, xs)
    xm, wm = xs[1:-1], w[1:-1]
    second = np.abs(wm * wp - wm - xm ** 2)
    u = 1.0 / w
    up = _centered(u, xs)
    um = u[1:-1]
    first = np.abs(up + xm ** 2 * um ** 3 + um ** 2)
    return AbelReport(float(second.max()), float(first.max()), int(second.shape[0]))


def lienard_residual(traj: Trajectory, x: str | int = 0) -> float:
    """Max ``|x'' - x' - x^2|`` by centered differences in ``t``."""
    xs = traj.column(x) if isinstance(x, str) else traj.states[:, x]
    t = traj.times
    h = np.diff(t)
    if not np.allclose(h, h[0]):
        raise ValueError("needs a uniform time grid")
    h = h[0]
    xd = (xs[2:] - xs[:-2]) / (2 * h)
    xdd = (xs[2:] - 2 * xs[1:-1] + xs[:-2]) / h ** 2
    return float(np.max(np.abs(xdd - xd - xs[1:-1] ** 2)))
