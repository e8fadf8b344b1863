"""Exact difference systems ``X(k+1) = X(k) + h mu(X(k), ..., X(k))`` and the Delta calculus."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..grassmann import SuperVector
from ..nary import StructureTensor, mu_eval


@dataclass
class DiscreteTrajectory:
    states: list  # SuperVectors
    h: Fraction
    equilibrium: bool = False  # mu(X0, ..., X0) == 0
    idempotent: bool = False  # mu(X0, ..., X0) == X0
    scheme: str = field(default="difference", repr=False)

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def difference_iterate(T: StructureTensor, X0: SuperVector, h, steps: int) -> DiscreteTrajectory:
    h = Fraction(h)
    if h == 0:
        raise ValueError("h must be nonzero")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    first = mu_eval(T, [X0] * T.N)
    states = [X0]
    X = X0
    for _ in range(steps):
        X = X + mu_eval(T, [X] * T.N).scale(h)
        states.append(X)
    return DiscreteTrajectory(states, h, first.is_zero(), (not X0.is_zero()) and first == X0)


def collinearity(traj: DiscreteTrajectory):
    """Rational ``s_k`` with ``X(k) = s_k X(0)`` for every state, or ``None``."""
    X0 = traj.states[0]
    if X0.is_zero():
        return None
    i = next(i for i, e in enumerate(X0) if e)
    idx, c = next(iter(X0[i].terms.items()))
    out = []
    for X in traj.states:
        s = X[i].coefficient(idx) / c
        if X != X0.scale(s):
            return None
        out.append(s)
    return out


# -- Delta and shift on integer-indexed sequences ------------------------------

def _prod(a, b):
    if isinstance(a, np.ndarray) and a.ndim == 2:
        return a @ b
    return a * b


def shift(f: Sequence) -> list:
    """``(E f)(k) = f(k+1)``; one element shorter than ``f``."""
    return list(f[1:])


def delta(f: Sequence, h) -> list:
    """``(Delta f)(k) = [f(k+1) - f(k)] / h``."""
    h = Fraction(h)
    return [(f[k + 1] - f[k]) * (1 / h) for k in range(len(f) - 1)]


def _equal(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return bool(np.all(a == b))
    return a == b


def delta_product_rule_check(f: Sequence, g: Sequence, h) -> bool:
    """``Delta(fg) = Delta f . E g + f . Delta g`` at every index (exact for rational data)."""
    if len(f) != len(g):
        raise ValueError("sequences need a common index range")
    fg = [_prod(a, b) for a, b in zip(f, g)]
    lhs = delta(fg, h)
    df, dg, eg = delta(f, h), delta(g, h), shift(g)
    for k in range(len(lhs)):
        rhs = _prod(df[k], eg[k]) + _prod(f[k], dg[k])
        if not _equal(lhs[k], rhs):
            return False
    return True


def fraction_matrix(rows) -> np.ndarray:
    """Object array of Fractions, so ``@`` stays exact."""
    return np.array([[Fraction(x) for x in r] for r in rows], dtype=object)
