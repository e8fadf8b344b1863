"""Exact Gaussian elimination over the rationals."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

Matrix = list  # list[list[Fraction]]


class SingularMatrix(ZeroDivisionError):
    pass


def to_fractions(A) -> Matrix:
    return [[Fraction(x) for x in row] for row in A]


def rref(A: Sequence[Sequence], b: Sequence | None = None):
    """Reduced row echelon form.

    Returns ``(R, rhs, pivots)``; ``rhs`` is ``None`` when ``b`` is not given.
    Pivots are chosen left to right, so later columns are the ones left free.
    """
    R = to_fractions(A)
    t = [Fraction(x) for x in b] if b is not None else None
    n_rows = len(R)
    n_cols = len(R[0]) if R else 0
    pivots = []
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if R[i][c]), None)
        if piv is None:
            continue
        if piv != r:
            R[r], R[piv] = R[piv], R[r]
            if t is not None:
                t[r], t[piv] = t[piv], t[r]
        inv = 1 / R[r][c]
        row = R[r]
        if inv != 1:
            R[r] = row = [x * inv for x in row]
            if t is not None:
                t[r] *= inv
        nz = [j for j in range(c, n_cols) if row[j]]
        for i in range(n_rows):
            if i == r:
                continue
            f = R[i][c]
            if not f:
                continue
            Ri = R[i]
            for j in nz:
                Ri[j] -= f * row[j]
            if t is not None:
                t[i] -= f * t[r]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return R, t, pivots


@dataclass
class LinearSolveResult:
    """Affine solution set ``particular + span(nullspace)`` of ``A x = b``."""

    particular: list | None
    nullspace: list = field(default_factory=list)
    rank: int = 0
    n_unknowns: int = 0
    n_equations: int = 0
    pivots: list = field(default_factory=list)
    free: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.particular is not None

    @property
    def dimension(self) -> int:
        return len(self.nullspace) if self.consistent else -1

    def member(self, params: Sequence) -> list:
        """``particular + sum(params[k] * nullspace[k])``."""
        if not self.consistent:
            raise ValueError("system is inconsistent")
        x = list(self.particular)
        for c, v in zip(params, self.nullspace):
            c = Fraction(c)
            if c:
                x = [xi + c * vi for xi, vi in zip(x, v)]
        return x


def solve_linear(A: Sequence[Sequence], b: Sequence | None = None, n_unknowns: int | None = None) -> LinearSolveResult:
    """Solve ``A x = b`` exactly; ``b`` defaults to zero."""
    n_eq = len(A)
    n = n_unknowns if n_unknowns is not None else (len(A[0]) if A else 0)
    if b is None:
        b = [0] * n_eq
    if n_eq == 0:
        null = [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
        return LinearSolveResult([Fraction(0)] * n, null, 0, n, 0, [], list(range(n)))
    R, t, pivots = rref(A, b)
    rank = len(pivots)
    if any(t[i] for i in range(rank, n_eq)):
        return LinearSolveResult(None, [], rank, n, n_eq, pivots, [])
    free = [c for c in range(n) if c not in set(pivots)]
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = t[i]
    null = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -R[i][f]
        null.append(v)
    return LinearSolveResult(x, null, rank, n, n_eq, pivots, free)


def rank(A: Sequence[Sequence]) -> int:
    if not A:
        return 0
    return len(rref(A)[2])


def matmul(A: Matrix, B: Matrix) -> Matrix:
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in zip(*B)] for row in A]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def inverse(A: Matrix) -> Matrix:
    n = len(A)
    aug = [list(row) + identity(n)[i] for i, row in enumerate(to_fractions(A))]
    R, _, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrix("matrix is singular")
    return [row[n:] for row in R]


def solve(A: Matrix, B: Matrix) -> Matrix:
    """Unique solution ``X`` of ``A X = B`` (``B`` a matrix)."""
    n = len(A)
    m = len(B[0])
    aug = [list(ra) + list(rb) for ra, rb in zip(to_fractions(A), to_fractions(B))]
    R, _, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrix("matrix is singular")
    return [row[n:n + m] for row in R[:n]]


def det(A: Matrix) -> Fraction:
    M = to_fractions(A)
    n = len(M)
    d = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            d = -d
        d *= M[c][c]
        for i in range(c + 1, n):
            f = M[i][c] / M[c][c]
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return d
