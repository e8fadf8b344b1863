"""Real-coordinate expansion of flows over a finite Grassmann algebra."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .._common import Verdict
from ..freepoly import FREE, FlowSpec
from ..grassmann import GrassmannElement, basis_indices, merge_indices

# A real polynomial is a dict: monomial -> Fraction, where a monomial is a
# sorted tuple of (coordinate index, power) pairs.


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for i, p in b:
        d[i] = d.get(i, 0) + p
    return tuple(sorted(d.items()))


def rp_add(p: dict, q: dict, scale=1) -> dict:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def rp_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def rp_var(i: int) -> dict:
    return {((i, 1),): Fraction(1)}


def rp_const(c) -> dict:
    c = Fraction(c)
    return {(): c} if c else {}


@dataclass
class RealSystem:
    """``dx_i/dt = rhs[i](x)`` with exact rational polynomial right-hand sides."""

    coords: list
    rhs: list
    degrees: list = field(default_factory=list)  # Grassmann degree of each coordinate
    index: dict = field(default_factory=dict)  # (variable name, multi-index) -> coordinate

    def __post_init__(self):
        if len(self.rhs) != len(self.coords):
            raise ValueError("one right-hand side per coordinate")
        if not self.degrees:
            self.degrees = [0] * len(self.coords)
        self._compiled = None

    @property
    def n(self) -> int:
        return len(self.coords)

    def position(self, name: str) -> int:
        return self.coords.index(name)

    def evaluate(self, x) -> np.ndarray:
        from ._kernels import rhs_eval

        return rhs_eval(np.asarray(x, dtype=float), *self.compiled())

    def evaluate_exact(self, x: Sequence) -> list:
        out = []
        for p in self.rhs:
            acc = Fraction(0)
            for m, c in p.items():
                t = c
                for i, k in m:
                    t *= Fraction(x[i]) ** k
                acc += t
            out.append(acc)
        return out

    def compiled(self):
        """Flat arrays ``(target, coef, ptr, idx, pw)``; every term has at least one factor."""
        if self._compiled is None:
            target, coef, ptr, idx, pw = [], [], [0], [], []
            for i, p in enumerate(self.rhs):
                for m, c in sorted(p.items()):
                    target.append(i)
                    coef.append(float(c))
                    facs = m or ((0, 0),)
                    for j, k in facs:
                        idx.append(j)
                        pw.append(k)
                    ptr.append(len(idx))
            self._compiled = (
                np.array(target, dtype=np.int64),
                np.array(coef, dtype=np.float64),
                np.array(ptr, dtype=np.int64),
                np.array(idx, dtype=np.int64),
                np.array(pw, dtype=np.int64),
            )
        return self._compiled

    def format(self) -> str:
        lines = []
        for name, p in zip(self.coords, self.rhs):
            lines.append(f"d{name}/dt = {format_real(p, self.coords)}")
        return "\n".join(lines)


def format_real(p: dict, coords) -> str:
    if not p:
        return "0"
    parts = []
    for m, c in sorted(p.items(), key=lambda kv: (sum(k for _, k in kv[0]), kv[0])):
        mono = "*".join(coords[i] + (f"^{k}" if k > 1 else "") for i, k in m)
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{c}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


def coordinate_name(var: str, idx: tuple, L: int) -> str:
    if not idx:
        return f"{var}_0"
    sep = "" if L < 10 else "."
    return f"{var}_" + sep.join(str(i) for i in idx)


def _g_mul(a: dict, b: dict) -> dict:
    """Product of Grassmann elements with real-polynomial coefficients (idx -> poly)."""
    out: dict = {}
    for ia, pa in a.items():
        for ib, pb in b.items():
            r = merge_indices(ia, ib)
            if r is None:
                continue
            s, idx = r
            out[idx] = rp_add(out.get(idx, {}), rp_mul(pa, pb), s)
            if not out[idx]:
                del out[idx]
    return out


def _g_const(c: GrassmannElement) -> dict:
    return {idx: rp_const(v) for idx, v in c.terms.items()}


def expand_to_real(F: FlowSpec, matrix_size: int | None = None) -> RealSystem:
    """One real equation per (variable, Grassmann multi-index of matching parity).

    With ``matrix_size`` the variables are square real matrices instead
    (free policy, rational coefficients); coordinates are matrix entries.
    """
    if matrix_size is not None:
        return _expand_matrix(F, matrix_size)
    if F.policy == FREE and any(len(set(w)) > 1 for p in F.rhs.values() for w in p.terms):
        raise ValueError("free-policy flows need matrix_size to be expanded")
    L = F.L
    coords, degrees, index = [], [], {}
    for v in F.variables:
        for idx in basis_indices(range(1, L + 1), v.parity):
            index[(v.name, idx)] = len(coords)
            coords.append(coordinate_name(v.name, idx, L))
            degrees.append(len(idx))
    X = {v: {idx: rp_var(index[(v.name, idx)]) for idx in basis_indices(range(1, L + 1), v.parity)} for v in F.variables}
    rhs = [dict() for _ in coords]
    for v in F.variables:
        total: dict = {}
        for w, c in F.rhs[v].terms.items():
            term = _g_const(c)
            for letter in w:
                term = _g_mul(term, X[letter])
                if not term:
                    break
            for idx, p in term.items():
                total[idx] = rp_add(total.get(idx, {}), p)
        for idx, p in total.items():
            if p:
                rhs[index[(v.name, idx)]] = p
    return RealSystem(coords, rhs, degrees, index)


def _expand_matrix(F: FlowSpec, m: int) -> RealSystem:
    coords, index = [], {}
    for v in F.variables:
        for i in range(m):
            for j in range(m):
                index[(v.name, (i, j))] = len(coords)
                coords.append(f"{v.name}[{i + 1},{j + 1}]")
    mats = {v: [[rp_var(index[(v.name, (i, j))]) for j in range(m)] for i in range(m)] for v in F.variables}
    eye = [[rp_const(int(i == j)) for j in range(m)] for i in range(m)]

    def mm(A, B):
        return [[_dot([A[i][k] for k in range(m)], [B[k][j] for k in range(m)]) for j in range(m)] for i in range(m)]

    rhs = [dict() for _ in coords]
    for v in F.variables:
        acc = [[{} for _ in range(m)] for _ in range(m)]
        for w, c in F.rhs[v].terms.items():
            if not c.is_scalar():
                raise ValueError("matrix expansion needs rational coefficients")
            M = eye
            for letter in w:
                M = mm(M, mats[letter])
            s = c.body()
            acc = [[rp_add(acc[i][j], M[i][j], s) for j in range(m)] for i in range(m)]
        for i in range(m):
            for j in range(m):
                rhs[index[(v.name, (i, j))]] = acc[i][j]
    return RealSystem(coords, rhs, [0] * len(coords), index)


def _dot(a, b):
    out: dict = {}
    for p, q in zip(a, b):
        out = rp_add(out, rp_mul(p, q))
    return out


def hierarchy_check(R: RealSystem) -> Verdict:
    """Coordinates of Grassmann degree ``d`` obey equations affine in themselves.

    Structurally: in the equation for a degree-``d`` coordinate, the degrees
    of the factors in any monomial add up to at most ``d``.
    """
    for i, p in enumerate(R.rhs):
        d = R.degrees[i]
        for m in p:
            tot = sum(R.degrees[j] * k for j, k in m)
            if tot > d:
                return Verdict(False, f"d{R.coords[i]}/dt has a term of degree {tot} > {d}")
            if d > 0 and any(R.degrees[j] == d and k > 1 for j, k in m):
                return Verdict(False, f"d{R.coords[i]}/dt is nonlinear in degree-{d} coordinates")
    return Verdict(True, "hierarchically linear")


def real_initial(R: RealSystem, values: Mapping) -> np.ndarray:
    """Initial real vector from Grassmann values per variable name (missing -> 0)."""
    x = np.zeros(R.n)
    for name, val in values.items():
        if not isinstance(val, GrassmannElement):
            val = GrassmannElement.scalar(val)
        found = False
        for idx, c in val.terms.items():
            key = (name, idx)
            if key not in R.index:
                raise KeyError(f"no coordinate for {name} at multi-index {idx}")
            x[R.index[key]] = float(c)
            found = True
        if not found and not any(k[0] == name for k in R.index):
            raise KeyError(f"unknown variable {name!r}")
    return x

