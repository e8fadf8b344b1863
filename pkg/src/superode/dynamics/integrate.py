"""Fixed-step integration of real systems."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .realsys import RealSystem


class DivergenceError(ArithmeticError):
    def __init__(self, msg: str, last_time: float):
        super().__init__(msg)
        self.last_time = last_time


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    coords: list
    scheme: str = "rk4"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("one state per time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.coords.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + list(self.coords))
            for t, row in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def rk4_integrate(R: RealSystem, x0, t_end: float, step: float, record_every: int = 1) -> Trajectory:
    """Classical RK4 with fixed step; ``t_end`` is hit exactly by rounding the step count up."""
    if step <= 0:
        raise ValueError("step must be positive")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    nsteps = max(1, math.ceil(t_end / step - 1e-9))
    h = t_end / nsteps
    every = max(1, int(record_every))
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (R.n,):
        raise ValueError(f"initial state needs {R.n} components")
    states, bad = _kernels.rk4_loop(x0, h, nsteps, every, *R.compiled())
    times = np.arange(states.shape[0]) * h * every
    if bad >= 0:
        raise DivergenceError(f"non-finite state at step {bad} (t = {bad * h:g})", float(times[-1]))
    if nsteps % every:
        # make sure the final time is present
        tail = rk4_integrate(R, states[-1], t_end - times[-1], h) if t_end - times[-1] > 1e-12 else None
        if tail is not None:
            states = np.vstack([states, tail.states[-1]])
            times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return Trajectory(times, states, list(R.coords), "rk4")


def euler_iterate(R: RealSystem, x0, h: float, steps: int) -> Trajectory:
    """Real difference scheme ``x(k+1) = x(k) + h f(x(k))``."""
    if h == 0:
        raise ValueError("h must be nonzero")
    x0 = np.asarray(x0, dtype=float)
    states, bad = _kernels.euler_loop(x0, float(h), int(steps), *R.compiled())
    if bad >= 0:
        raise DivergenceError(f"non-finite state at step {bad}", float((bad - 1)))
    return Trajectory(np.arange(steps + 1, dtype=float), states, list(R.coords), f"difference({h})")
