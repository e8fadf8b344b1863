"""Matrix Riccati flows ``X' = X A X + B X + X C + D`` and their linearization.

With ``X = u v^-1`` the pair ``(u, v)`` obeys the linear system
``u' = B u + D v``, ``v' = -A u - C v``.  The discrete analogue replaces the
derivative by ``Delta`` and evaluates the right-hand side at the shifted
point; each step is then one exact linear solve.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from .. import linalg
from .realsys import RealSystem, rp_add, rp_const, rp_mul, rp_var


class StepFailure(ArithmeticError):
    def __init__(self, msg: str, index: int):
        super().__init__(msg)
        self.index = index


@dataclass(frozen=True)
class RiccatiSpec:
    """``X`` is ``p x q``; ``A`` is ``q x p``, ``B`` ``p x p``, ``C`` ``q x q``, ``D`` ``p x q``."""

    p: int
    q: int
    A: tuple
    B: tuple
    C: tuple
    D: tuple

    def __post_init__(self):
        shapes = {"A": (self.q, self.p), "B": (self.p, self.p), "C": (self.q, self.q), "D": (self.p, self.q)}
        for name, (r, c) in shapes.items():
            M = tuple(tuple(Fraction(x) for x in row) for row in getattr(self, name))
            if len(M) != r or any(len(row) != c for row in M):
                raise ValueError(f"{name} must be {r}x{c}")
            object.__setattr__(self, name, M)

    def to_json(self) -> dict:
        enc = lambda M: [[str(x) for x in row] for row in M]  # noqa: E731
        return {"p": self.p, "q": self.q, "A": enc(self.A), "B": enc(self.B), "C": enc(self.C), "D": enc(self.D)}

    @classmethod
    def from_json(cls, data) -> "RiccatiSpec":
        return cls(data["p"], data["q"], data["A"], data["B"], data["C"], data["D"])

    @classmethod
    def random(cls, rng, n: int = 2, spread: int = 3, den: int = 4) -> "RiccatiSpec":
        def mat(r, c):
            return [[Fraction(rng.randint(-spread * den, spread * den), den) for _ in range(c)] for _ in range(r)]

        return cls(n, n, mat(n, n), mat(n, n), mat(n, n), mat(n, n))


def riccati_linearize(spec: RiccatiSpec) -> list:
    """Block matrix ``[[B, D], [-A, -C]]`` acting on ``(u; v)``."""
    top = [list(b) + list(d) for b, d in zip(spec.B, spec.D)]
    bottom = [[-x for x in a] + [-x for x in c] for a, c in zip(spec.A, spec.C)]
    return top + bottom


def _f(M) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in M], dtype=float)


def riccati_solve(spec: RiccatiSpec, X0, t: float) -> np.ndarray:
    """``X(t) = u(t) v(t)^-1`` with ``(u; v) = expm(t M) (X0; I)``."""
    M = _f(riccati_linearize(spec))
    uv0 = np.vstack([_f(X0), np.eye(spec.q)])
    uv = expm(t * M) @ uv0
    u, v = uv[: spec.p], uv[spec.p:]
    if abs(np.linalg.det(v)) < 1e-12:
        raise StepFailure(f"v(t) is singular at t = {t}", 0)
    return np.linalg.solve(v.T, u.T).T


def riccati_system(spec: RiccatiSpec) -> RealSystem:
    """Eq. ``X' = X A X + B X + X C + D`` as a real polynomial system in the entries of ``X``."""
    p, q = spec.p, spec.q
    coords = [f"X[{i + 1},{j + 1}]" for i in range(p) for j in range(q)]
    X = [[rp_var(i * q + j) for j in range(q)] for i in range(p)]
    const = lambda M: [[rp_const(x) for x in row] for row in M]  # noqa: E731

    def mm(P, Q):
        n, m, k = len(P), len(Q[0]), len(Q)
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                acc: dict = {}
                for s in range(k):
                    acc = rp_add(acc, rp_mul(P[i][s], Q[s][j]))
                row.append(acc)
            out.append(row)
        return out

    A, B, C, D = const(spec.A), const(spec.B), const(spec.C), const(spec.D)
    XAX = mm(mm(X, A), X)
    BX = mm(B, X)
    XC = mm(X, C)
    rhs = []
    for i in range(p):
        for j in range(q):
            rhs.append(rp_add(rp_add(rp_add(XAX[i][j], BX[i][j]), XC[i][j]), D[i][j]))
    return RealSystem(coords, rhs)


@dataclass
class RiccatiDifferenceResult:
    xs: list  # exact matrices (lists of Fractions)
    identity_holds: list  # per step

    @property
    def all_hold(self) -> bool:
        return all(self.identity_holds)


def _add(P, Q, s=1):
    return [[a + s * b for a, b in zip(r1, r2)] for r1, r2 in zip(P, Q)]


def _scale(P, s):
    return [[s * a for a in r] for r in P]


def riccati_difference(spec: RiccatiSpec, x0, h, steps: int) -> RiccatiDifferenceResult:
    """Iterate ``Delta u = b E u + d E v``, ``Delta v = -a E u - c E v`` and set ``x = u v^-1``.

    At each step ``Delta x == x a E x + b E x + x c + d`` is checked exactly.
    """
    h = Fraction(h)
    if h == 0:
        raise ValueError("h must be nonzero")
    p, q = spec.p, spec.q
    a, b, c, d = (list(map(list, M)) for M in (spec.A, spec.B, spec.C, spec.D))
    mm = linalg.matmul
    # [[I - h b, -h d], [h a, I + h c]] (u'; v') = (u; v)
    Ip, Iq = linalg.identity(p), linalg.identity(q)
    top = [r1 + r2 for r1, r2 in zip(_add(Ip, _scale(b, h), -1), _scale(d, -h))]
    bot = [r1 + r2 for r1, r2 in zip(_scale(a, h), _add(Iq, _scale(c, h)))]
    step_matrix = top + bot
    x = [[Fraction(v) for v in row] for row in x0]
    u, v = x, Iq
    xs, holds = [x], []
    for k in range(steps):
        try:
            sol = linalg.solve(step_matrix, u + v)
        except linalg.SingularMatrix:
            raise StepFailure(f"implicit step matrix is singular (step {k})", k) from None
        u1, v1 = sol[:p], sol[p:]
        try:
            vinv = linalg.inverse(v1)
        except linalg.SingularMatrix:
            raise StepFailure(f"v is singular at step {k + 1}", k + 1) from None
        x1 = mm(u1, vinv)
        lhs = _scale(_add(x1, x, -1), 1 / h)
        rhs = _add(_add(_add(mm(mm(x, a), x1), mm(b, x1)), mm(x, c)), d)
        holds.append(lhs == rhs)
        xs.append(x1)
        u, v, x = u1, v1, x1
    return RiccatiDifferenceResult(xs, holds)
