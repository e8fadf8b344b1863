"""Quadratic systems ``E(X) = C + T X + beta(X, X)`` and their commutative product.

Vectors passed to these routines are :class:`SuperVector` instances whose
entries are Grassmann elements or polynomials; the symbolic checks
(automorphisms, derivations, power-associativity) run on vectors of fresh
polynomial variables, which makes them identities rather than samples.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

import numpy as np

from ._common import Verdict
from .freepoly import SUPER, FlowSpec, NCPolynomial, Variable
from .grassmann import EVEN, ODD, ZERO, GrassmannElement, SuperVector, basis_indices
from .linalg import det
from .nary import StructureTensor, mu_eval


class DomainError(ValueError):
    """Evaluation at a pole of a blow-up solution."""


class SingularMap(ValueError):
    pass


class PremiseFailure(ValueError):
    """The hypothesis of the exponential-solution criterion does not hold."""


@dataclass(frozen=True)
class QuadraticSystem:
    parities: tuple
    C: SuperVector
    T: tuple  # rows of GrassmannElement
    beta: StructureTensor
    u_index: int | None = None
    names: tuple | None = None

    def __post_init__(self):
        n = len(self.parities)
        object.__setattr__(self, "parities", tuple(self.parities))
        object.__setattr__(self, "T", tuple(tuple(row) for row in self.T))
        if len(self.C) != n or len(self.T) != n or any(len(r) != n for r in self.T):
            raise ValueError("C, T and the slot parities must have matching dimensions")
        if self.beta.N != 2 or self.beta.n != n:
            raise ValueError("beta must be a binary tensor on the same slots")
        for i, row in enumerate(self.T):
            for j, t in enumerate(row):
                want = EVEN if self.parities[i] == self.parities[j] else ODD
                if t.parity() not in (want, ZERO):
                    raise ValueError(f"T[{i}][{j}] must be {want} to preserve parity")
        for (i, (a, b)), c in self.beta.coeffs.items():
            odd = sum(self.parities[k] == ODD for k in (i, a, b)) & 1
            want = ODD if odd else EVEN
            if c.parity() not in (want, ZERO):
                raise ValueError(f"beta coefficient at {(i, (a, b))} must be {want}")

    @property
    def n(self) -> int:
        return len(self.parities)

    @property
    def L(self) -> int:
        return self.beta.L

    @classmethod
    def build(cls, C, T, Q: dict, parities, L: int = 0, **kw) -> "QuadraticSystem":
        """Convenience constructor from plain lists; ``Q`` maps ``(i, (a, b))`` to coefficients."""
        lift = lambda c: c if isinstance(c, GrassmannElement) else GrassmannElement.scalar(c, L)  # noqa: E731
        n = len(parities)
        C = SuperVector([lift(c) for c in (C or [0] * n)], parities)
        T = [[lift(t) for t in row] for row in (T or [[0] * n for _ in range(n)])]
        return cls(tuple(parities), C, T, StructureTensor(n, 2, dict(Q), L), **kw)

    def Q(self, X: SuperVector) -> SuperVector:
        return mu_eval(self.beta, [X, X])

    def TX(self, X: SuperVector) -> SuperVector:
        zero = X.entries[0] - X.entries[0]
        out = []
        for row in self.T:
            acc = zero
            for t, x in zip(row, X.entries):
                if t and x:
                    acc = acc + t * x
            out.append(acc)
        return SuperVector(out, X.parities, check=False)

    def E(self, X: SuperVector) -> SuperVector:
        return self.TX(X) + self.Q(X) + _embed(self.C, X)

    def symbolic_vector(self, prefix: str = "x") -> SuperVector:
        """Vector of fresh supercommuting polynomial variables, one per slot."""
        vs = [Variable(f"{prefix}{i + 1}", p) for i, p in enumerate(self.parities)]
        return SuperVector([NCPolynomial.var(v, SUPER, self.L) for v in vs], self.parities)

    def flow(self, variables: Sequence[Variable] | None = None) -> FlowSpec:
        if variables is None:
            names = self.names or tuple(f"x{i + 1}" for i in range(self.n))
            variables = [Variable(nm, p) for nm, p in zip(names, self.parities)]
        X = SuperVector([NCPolynomial.var(v, SUPER, self.L) for v in variables], self.parities)
        return FlowSpec(tuple(variables), dict(zip(variables, self.E(X).entries)))

    @classmethod
    def from_flow(cls, F: FlowSpec) -> "QuadraticSystem":
        """Split a flow of degree <= 2 into constant, linear and quadratic parts."""
        if F.policy != SUPER:
            raise ValueError("quadratic systems use the supercommutative policy")
        vs = list(F.variables)
        idx = {v: i for i, v in enumerate(vs)}
        L = F.L
        n = len(vs)
        C = [GrassmannElement.zero(L)] * n
        T = [[GrassmannElement.zero(L)] * n for _ in range(n)]
        Q: dict = {}
        for i, v in enumerate(vs):
            for w, c in F.rhs[v].terms.items():
                if len(w) == 0:
                    C[i] = C[i] + c
                elif len(w) == 1:
                    T[i][idx[w[0]]] = T[i][idx[w[0]]] + c
                elif len(w) == 2:
                    key = (i, (idx[w[0]], idx[w[1]]))
                    Q[key] = Q.get(key, GrassmannElement.zero(L)) + c
                else:
                    raise ValueError(f"d{v.name}/dt has degree {len(w)} > 2")
        parities = tuple(v.parity for v in vs)
        return cls(parities, SuperVector(C, parities), T, StructureTensor(n, 2, Q, L), names=tuple(v.name for v in vs))

    def to_json(self) -> dict:
        return {
            "parities": list(self.parities),
            "names": list(self.names) if self.names else None,
            "C": [c.to_json() for c in self.C],
            "T": [[t.to_json() for t in row] for row in self.T],
            "beta": self.beta.to_json(),
            "u_index": self.u_index,
        }

    @classmethod
    def from_json(cls, data) -> "QuadraticSystem":
        beta = StructureTensor.from_json(data["beta"])
        L = beta.L
        parities = tuple(data["parities"])
        C = SuperVector([GrassmannElement.from_json(c).with_budget(L) for c in data["C"]], parities)
        T = [[GrassmannElement.from_json(t).with_budget(L) for t in row] for row in data["T"]]
        names = tuple(data["names"]) if data.get("names") else None
        return cls(parities, C, T, beta, data.get("u_index"), names)


def _embed(C: SuperVector, like: SuperVector) -> SuperVector:
    if like.entries and isinstance(like.entries[0], NCPolynomial):
        p = like.entries[0]
        return SuperVector([NCPolynomial.const(c, p.policy, p.L) for c in C], C.parities, check=False)
    return C


def homogenize(S: QuadraticSystem, name: str = "u") -> QuadraticSystem:
    """Extended system over ``(X, u)`` with ``u' = 0`` and rhs ``u^2 C + u T X + Q(X)``."""
    n = S.n
    u = n
    L = S.L
    half = Fraction(1, 2)
    coeffs = dict(S.beta.coeffs)

    def add(key, c):
        if c:
            coeffs[key] = coeffs.get(key, GrassmannElement.zero(L)) + c

    for i in range(n):
        add((i, (u, u)), S.C[i])
        for j in range(n):
            t = S.T[i][j]
            add((i, (u, j)), t.scale(half))
            add((i, (j, u)), t.scale(half))
    parities = S.parities + (EVEN,)
    names = (S.names + (name,)) if S.names else None
    zero = GrassmannElement.zero(L)
    return QuadraticSystem(
        parities,
        SuperVector([zero] * (n + 1), parities),
        [[zero] * (n + 1) for _ in range(n + 1)],
        StructureTensor(n + 1, 2, coeffs, L),
        u_index=u,
        names=names,
    )


def circ(S: QuadraticSystem, X: SuperVector, Y: SuperVector) -> SuperVector:
    """Commutative product ``X o Y = 1/2 [Q(X+Y) - Q(X) - Q(Y)]``."""
    if len(X) != S.n or len(Y) != S.n:
        raise ValueError("vector dimension does not match the system")
    return (S.Q(X + Y) - S.Q(X) - S.Q(Y)).scale(Fraction(1, 2))


# -- witness searches ---------------------------------------------------------

def _used_generators(S: QuadraticSystem) -> set:
    used = set()
    for c in S.beta.coeffs.values():
        used |= c.generators()
    for c in S.C:
        used |= c.generators()
    for row in S.T:
        for t in row:
            used |= t.generators()
    return used


def probe_vectors(S: QuadraticSystem) -> list:
    """Deterministic probe set: each slot takes 0, 1 or -1 times a probe monomial.

    Even slots probe with 1; odd slots with a fresh generator of their own
    when the budget has room (otherwise they stay 0).  Sparse vectors first.
    """
    L = S.L
    spare = [g for g in range(1, L + 1) if g not in _used_generators(S)]
    probes = []
    for p in S.parities:
        if p == EVEN:
            probes.append(GrassmannElement.one(L))
        elif spare:
            probes.append(GrassmannElement.generator(spare.pop(0), L))
        else:
            probes.append(None)
    choices = [(0,) if pr is None else (0, 1, -1) for pr in probes]
    out = []
    for coeffs in itertools.product(*choices):
        if not any(coeffs):
            continue
        ent = [pr.scale(c) if pr is not None else GrassmannElement.zero(L) for pr, c in zip(probes, coeffs)]
        out.append((sum(1 for c in coeffs if c), SuperVector(ent, S.parities, check=False)))
    out.sort(key=lambda t: t[0])
    return [v for _, v in out]


def random_vector(S: QuadraticSystem, rng: random.Random, spread: int = 2) -> SuperVector:
    L = S.L
    ent = []
    for p in S.parities:
        terms = {idx: rng.randint(-spread, spread) for idx in basis_indices(range(1, L + 1), p) if rng.random() < 0.5}
        ent.append(GrassmannElement(L, terms))
    return SuperVector(ent, S.parities, check=False)


def associativity_witness(S: QuadraticSystem, samples: int = 200, seed: int = 0):
    """A triple with ``(A o B) o C != A o (B o C)``, or ``None``."""
    probes = probe_vectors(S)
    memo: dict = {}

    def prod(i, j, A, B):
        key = (min(i, j), max(i, j))
        if key not in memo:
            memo[key] = circ(S, A, B)
        return memo[key]

    for (i, A), (j, B), (k, C) in itertools.product(enumerate(probes), repeat=3):
        AB = prod(i, j, A, B)
        BC = prod(j, k, B, C)
        if circ(S, AB, C) != circ(S, A, BC):
            return A, B, C
    rng = random.Random(seed)
    for _ in range(samples):
        A, B, C = (random_vector(S, rng) for _ in range(3))
        if circ(S, circ(S, A, B), C) != circ(S, A, circ(S, B, C)):
            return A, B, C
    return None


def _power4_pair(S, X):
    X2 = circ(S, X, X)
    return circ(S, X2, X2), circ(S, circ(S, X2, X), X)


def power_associativity_witness(S: QuadraticSystem, samples: int = 200, seed: int = 0):
    """An element with ``(X^2) o (X^2) != ((X^2) o X) o X``, or ``None``."""
    for X in probe_vectors(S):
        a, b = _power4_pair(S, X)
        if a != b:
            return X
    rng = random.Random(seed)
    for _ in range(samples):
        X = random_vector(S, rng)
        a, b = _power4_pair(S, X)
        if a != b:
            return X
    return None


def power_associativity_identity(S: QuadraticSystem) -> Verdict:
    """Symbolic test of the degree-4 power identity on a generic vector."""
    X = S.symbolic_vector()
    a, b = _power4_pair(S, X)
    d = a - b
    if d.is_zero():
        return Verdict(True, "(X^2)(X^2) == ((X^2)X)X identically")
    i = next(i for i, e in enumerate(d) if e)
    return Verdict(False, f"component {i + 1} differs by {d[i]}")


# -- idempotents -------------------------------------------------------------

@dataclass(frozen=True)
class IdempotentClass:
    kind: str  # "idempotent" | "scaled" | "nilpotent" | "other"
    scale: Fraction | None = None


def idempotent_check(S: QuadraticSystem, X: SuperVector) -> IdempotentClass:
    if X.is_zero():
        raise ValueError("classification needs a nonzero vector")
    XX = circ(S, X, X)
    if XX.is_zero():
        return IdempotentClass("nilpotent")
    if XX == X:
        return IdempotentClass("idempotent", Fraction(1))
    i = next(i for i, e in enumerate(X) if e)
    idx, c = next(iter(X[i].terms.items()))
    a = XX[i].coefficient(idx) / c
    if a and XX == X.scale(a):
        return IdempotentClass("scaled", a)
    return IdempotentClass("other")


def blowup_solution(S: QuadraticSystem, P: SuperVector, a=None, t=0) -> SuperVector:
    """``P / (1 - a t)`` for ``P o P = a P``; raises :class:`DomainError` at the pole."""
    cls = idempotent_check(S, P)
    if cls.kind not in ("idempotent", "scaled"):
        raise ValueError(f"P is {cls.kind}, not idempotent or scaled-idempotent")
    if a is not None and Fraction(a) != cls.scale:
        raise ValueError(f"P o P = {cls.scale} P, not {a} P")
    a = cls.scale
    denom = 1 - a * Fraction(t)
    if denom == 0:
        raise DomainError(f"solution blows up at t = {1 / a}")
    return P.scale(1 / denom)


def find_idempotents(S: QuadraticSystem, tol: float = 1e-10, max_iter: int = 200, lattice=(-1.0, -0.5, 0.5, 1.0)):
    """Real idempotents ``beta(X, X) = X`` by damped Newton from a lattice of starts.

    Only for real-coefficient algebras of dimension at most 4.
    """
    n = S.n
    if n > 4:
        raise ValueError("idempotent search is limited to dimension <= 4")
    A = np.zeros((n, n, n))
    for (i, (a, b)), c in S.beta.coeffs.items():
        if not c.is_scalar():
            raise ValueError("idempotent search needs real coefficients")
        A[i, a, b] += float(c.body())
    B = 0.5 * (A + A.transpose(0, 2, 1))
    eye = np.eye(n)

    def resid(x):
        return np.einsum("ijk,j,k->i", B, x, x) - x

    found: list = []
    for start in itertools.product(lattice, repeat=n):
        x = np.array(start, dtype=float)
        r = resid(x)
        nr = np.linalg.norm(r)
        for _ in range(max_iter):
            if nr < tol:
                break
            J = 2 * np.einsum("ijk,k->ij", B, x) - eye
            try:
                step = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J, -r, rcond=None)[0]
            lam = 1.0
            while lam > 1e-8:
                xn = x + lam * step
                rn = resid(xn)
                if np.linalg.norm(rn) < nr:
                    break
                lam *= 0.5
            x, r, nr = xn, rn, np.linalg.norm(rn)
        if nr < tol and np.linalg.norm(x) > 1e-8 and not any(np.linalg.norm(x - y) < 1e-6 for y in found):
            found.append(x)
    return found


# -- linear maps ----------------------------------------------------------------

@dataclass(frozen=True)
class LinearMap:
    """Matrix of Grassmann elements acting on super-vectors (even diagonal blocks)."""

    matrix: tuple
    parities: tuple

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(r) for r in self.matrix))
        object.__setattr__(self, "parities", tuple(self.parities))
        for i, row in enumerate(self.matrix):
            for j, m in enumerate(row):
                want = EVEN if self.parities[i] == self.parities[j] else ODD
                if m.parity() not in (want, ZERO):
                    raise ValueError(f"entry ({i}, {j}) must be {want} to preserve parity")

    @classmethod
    def from_rows(cls, rows, parities, L: int = 0) -> "LinearMap":
        lift = lambda c: c if isinstance(c, GrassmannElement) else GrassmannElement.scalar(c, L)  # noqa: E731
        return cls([[lift(c) for c in r] for r in rows], parities)

    @classmethod
    def identity(cls, parities, L: int = 0, scale=1) -> "LinearMap":
        n = len(parities)
        return cls.from_rows([[scale if i == j else 0 for j in range(n)] for i in range(n)], parities, L)

    def __call__(self, X: SuperVector) -> SuperVector:
        zero = X.entries[0] - X.entries[0]
        out = []
        for row in self.matrix:
            acc = zero
            for m, x in zip(row, X.entries):
                if m and x:
                    acc = acc + m * x
            out.append(acc)
        return SuperVector(out, X.parities, check=False)

    def compose(self, other) -> "LinearMap":
        """Matrix product ``self @ other`` (``other`` a LinearMap or a row tuple)."""
        B = other.matrix if isinstance(other, LinearMap) else other
        n = len(self.matrix)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = self.matrix[i][0] * B[0][j]
                for k in range(1, n):
                    acc = acc + self.matrix[i][k] * B[k][j]
                row.append(acc)
            rows.append(row)
        return LinearMap(rows, self.parities)

    def body_det(self) -> Fraction:
        return det([[m.body() for m in row] for row in self.matrix])


def _matrix_product(A, B):
    n = len(A)
    return tuple(
        tuple(sum((A[i][k] * B[k][j] for k in range(1, n)), A[i][0] * B[0][j]) for j in range(n)) for i in range(n)
    )


def _first_pair(diff: SuperVector):
    """Locate a basis pair ``(a, b)`` responsible for a nonzero bilinear difference."""
    for i, e in enumerate(diff):
        if not e:
            continue
        for w in e.terms:
            xs = [int(v.name[1:]) - 1 for v in w if v.name.startswith("x")]
            ys = [int(v.name[1:]) - 1 for v in w if v.name.startswith("y")]
            if xs and ys:
                return i, xs[0], ys[0]
        return i, None, None
    return None


def automorphism_check(S: QuadraticSystem, phi: LinearMap) -> Verdict:
    """``phi`` commutes with ``T``, fixes ``C`` and preserves the product."""
    if phi.body_det() == 0:
        raise SingularMap("phi is not invertible")
    if _matrix_product(phi.matrix, S.T) != _matrix_product(S.T, phi.matrix):
        return Verdict(False, "phi T != T phi")
    if phi(S.C) != S.C:
        return Verdict(False, "phi C != C")
    X, Y = S.symbolic_vector("x"), S.symbolic_vector("y")
    diff = phi(circ(S, X, Y)) - circ(S, phi(X), phi(Y))
    hit = _first_pair(diff)
    if hit:
        i, a, b = hit
        return Verdict(False, f"product not preserved on basis pair (E{a + 1}, E{b + 1}) in component {i + 1}",
                       {"component": i, "pair": (a, b)})
    return Verdict(True, "automorphism")


def derivation_check(S: QuadraticSystem, D: LinearMap) -> Verdict:
    """``D`` commutes with ``T``, kills ``C`` and obeys the product rule."""
    if _matrix_product(D.matrix, S.T) != _matrix_product(S.T, D.matrix):
        return Verdict(False, "T D != D T")
    if not D(S.C).is_zero():
        return Verdict(False, "D C != 0")
    X, Y = S.symbolic_vector("x"), S.symbolic_vector("y")
    diff = D(circ(S, X, Y)) - circ(S, D(X), Y) - circ(S, X, D(Y))
    hit = _first_pair(diff)
    if hit:
        i, a, b = hit
        return Verdict(False, f"product rule fails on basis pair (E{a + 1}, E{b + 1}) in component {i + 1}",
                       {"component": i, "pair": (a, b)})
    return Verdict(True, "derivation")


@dataclass(frozen=True)
class ExpSolutionReport:
    holds: bool  # G P == E(P)
    series_agree: bool
    mismatch_order: int | None = None
    exp_coeffs: list = field(default_factory=list, compare=False)

    def __bool__(self):
        return self.holds


def exp_series_premise(S: QuadraticSystem, G: LinearMap, order: int) -> Verdict:
    """Order-by-order check that truncated ``exp(tG)`` preserves the product."""
    X, Y = S.symbolic_vector("x"), S.symbolic_vector("y")
    GX, GY, GB = [X], [Y], [circ(S, X, Y)]
    for _ in range(order):
        GX.append(G(GX[-1]))
        GY.append(G(GY[-1]))
        GB.append(G(GB[-1]))
    for m in range(order + 1):
        lhs = GB[m].scale(Fraction(1, factorial(m)))
        rhs = lhs - lhs
        for i in range(m + 1):
            rhs = rhs + circ(S, GX[i], GY[m - i]).scale(Fraction(1, factorial(i) * factorial(m - i)))
        if lhs != rhs:
            return Verdict(False, f"exp(tG) fails to preserve the product at order t^{m}")
    return Verdict(True, f"exp(tG) preserves the product through order {order}")


def exp_solution_check(S: QuadraticSystem, G: LinearMap, P: SuperVector, order: int = 6) -> ExpSolutionReport:
    """Does ``exp(tG) P`` solve ``X' = E(X)``?  Holds iff ``G P == E(P)`` given the premise.

    The premise (``exp(tG)`` is an automorphism of ``E``) is checked through
    ``order`` on the truncated exponential; :class:`PremiseFailure` is raised
    when it does not hold.  The conclusion is cross-checked against the
    Taylor solution from ``P``.
    """
    from .series import taylor_coeffs

    der = derivation_check(S, G)
    if not der:
        raise PremiseFailure(der.detail)
    pre = exp_series_premise(S, G, order)
    if not pre:
        raise PremiseFailure(pre.detail)
    holds = G(P) == S.E(P)
    exp_coeffs = [P]
    for k in range(1, order + 1):
        exp_coeffs.append(G(exp_coeffs[-1]).scale(Fraction(1, k)))
    sol = taylor_coeffs(S, P, order)
    mismatch = next((k for k in range(order + 1) if exp_coeffs[k] != sol.coeffs[k]), None)
    return ExpSolutionReport(holds, mismatch is None, mismatch, exp_coeffs)
