"""Commuting flows: polynomial ``G`` with ``D_t G = D_tau F``, found by exact linear algebra.

Unknown Grassmann-valued coefficients are expanded over the monomials of
the generators used by ``F`` plus a few surplus generators.  The surplus
lets odd parameters be probed without collapsing products such as ``e*e``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from ._common import Verdict
from .freepoly import (
    FlowSpec,
    NCPolynomial,
    derivation_apply,
    format_word,
    normalize_word,
    word_parity,
    words_up_to,
)
from .grassmann import EVEN, ODD, GrassmannElement, basis_indices
from .linalg import LinearSolveResult, rank, solve, solve_linear


def _flow_generators(F: FlowSpec) -> set:
    gens = set()
    for p in F.rhs.values():
        for c in p.terms.values():
            gens |= c.generators()
    return gens


@dataclass(frozen=True)
class Unknown:
    equation: int  # index of the variable whose rhs holds the term
    word: tuple
    parity: str
    basis: tuple  # Grassmann multi-indices spanned by this coefficient
    label: str


@dataclass
class AnsatzTemplate:
    flow: FlowSpec  # F promoted to the working budget
    degree: int
    words: list
    unknowns: list
    generators: tuple  # generators used by F
    surplus: tuple  # fresh generators

    @property
    def n_rational(self) -> int:
        return sum(len(u.basis) for u in self.unknowns)

    def columns(self):
        """``(unknown index, multi-index)`` for every rational unknown."""
        return [(k, idx) for k, u in enumerate(self.unknowns) for idx in u.basis]

    def flows(self, vector: Sequence) -> dict:
        """Polynomials ``G`` for a rational assignment of all components."""
        F = self.flow
        out = {v: NCPolynomial.zero(F.policy, F.L) for v in F.variables}
        for (k, idx), val in zip(self.columns(), vector):
            if val:
                u = self.unknowns[k]
                v = F.variables[u.equation]
                out[v] = out[v] + NCPolynomial.monomial(u.word, F.policy, F.L, GrassmannElement.monomial(idx, F.L, val))
        return out

    def values(self, vector: Sequence) -> list:
        """Grassmann value of each unknown for a rational assignment."""
        acc = [dict() for _ in self.unknowns]
        for (k, idx), val in zip(self.columns(), vector):
            if val:
                acc[k][idx] = val
        return [GrassmannElement(self.flow.L, a) for a in acc]


def default_label(F: FlowSpec, i: int, w) -> str:
    return f"{F.variables[i].name}:{format_word(w) if w else '1'}"


def ansatz_build(F: FlowSpec, degree: int, surplus: int | None = None, labels: Mapping | None = None) -> AnsatzTemplate:
    """One unknown per (equation, word) with the parity that keeps ``G`` parity-correct."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    gens = tuple(sorted(_flow_generators(F)))
    words = words_up_to(F.variables, degree, F.policy)
    has_odd = any(v.parity == ODD for v in F.variables) or any(True for _ in gens)
    if surplus is None:
        surplus = 1 if has_odd else 0
    top = max([F.L] + list(gens))
    extra = tuple(range(top + 1, top + 1 + surplus))
    L = top + surplus
    Fw = F.with_budget(L) if L != F.L else F
    pool = gens + extra
    unknowns = []
    labels = dict(labels or {})
    for i, v in enumerate(F.variables):
        for w in words:
            par = ODD if (v.parity == ODD) ^ bool(word_parity(w)) else EVEN
            basis = tuple(basis_indices(pool, par))
            label = labels.get((v.name, tuple(x.name for x in w))) or default_label(F, i, w)
            unknowns.append(Unknown(i, w, par, basis, label))
    return AnsatzTemplate(Fw, degree, words, unknowns, gens, extra)


@dataclass
class CommutingSystem:
    matrix: list
    rows: list  # (equation index, word, multi-index)
    lambda_equations: int  # distinct (equation, word) pairs

    @property
    def n_equations(self) -> int:
        return len(self.rows)


def _residual(F: FlowSpec, G: Mapping) -> dict:
    """``D_t G_i - D_tau F_i`` for every variable."""
    Gflow = FlowSpec(F.variables, dict(G))
    return {v: derivation_apply(F, G[v]) - derivation_apply(Gflow, F.rhs[v]) for v in F.variables}


def commuting_condition(F: FlowSpec, A: AnsatzTemplate) -> CommutingSystem:
    """Collect one rational equation per (variable, word, Grassmann monomial)."""
    Fw = A.flow
    if tuple(F.variables) != tuple(Fw.variables) or F.policy != Fw.policy:
        raise ValueError("ansatz was built for a different flow")
    cols = A.columns()
    entries: dict = {}
    zero = {v: NCPolynomial.zero(Fw.policy, Fw.L) for v in Fw.variables}
    for c, (k, idx) in enumerate(cols):
        u = A.unknowns[k]
        G = dict(zero)
        G[Fw.variables[u.equation]] = NCPolynomial.monomial(u.word, Fw.policy, Fw.L, GrassmannElement.monomial(idx, Fw.L))
        for j, v in enumerate(Fw.variables):
            for w, coeff in _residual(Fw, G)[v].terms.items():
                for m, val in coeff.terms.items():
                    entries.setdefault((j, w, m), {})[c] = val
    order = {v: i for i, v in enumerate(Fw.variables)}
    rows = sorted(entries, key=lambda r: (r[0], len(r[1]), [order[x] for x in r[1]], len(r[2]), r[2]))
    matrix = [[entries[r].get(c, Fraction(0)) for c in range(len(cols))] for r in rows]
    return CommutingSystem(matrix, rows, len({(j, w) for j, w, _ in rows}))


@dataclass
class Relation:
    unknown: str
    terms: list  # (coefficient GrassmannElement, parameter label); value = sum coeff * param

    def format(self, names=None) -> str:
        if not self.terms:
            return f"{self.unknown} = 0"
        parts = []
        for c, p in self.terms:
            if c == 1:
                parts.append(p)
            elif c == -1:
                parts.append(f"-{p}")
            elif len(c.terms) == 1:
                parts.append(f"{c.format(names)}*{p}")
            else:
                parts.append(f"({c.format(names)})*{p}")
        return f"{self.unknown} = " + " + ".join(parts).replace("+ -", "- ")


@dataclass
class CommutingSolution:
    template: AnsatzTemplate
    system: CommutingSystem
    result: LinearSolveResult
    free_parameters: list = field(default_factory=list)  # unknown indices
    relations: list = field(default_factory=list)
    relations_verified: bool = False

    @property
    def dimension(self) -> int:
        return self.result.dimension

    @property
    def n_unknowns(self) -> int:
        return len(self.template.unknowns)

    def free_names(self) -> list:
        return [self.template.unknowns[k].label for k in self.free_parameters]

    def relation(self, label: str) -> Relation:
        return next(r for r in self.relations if r.unknown == label)

    def members(self):
        for v in self.result.nullspace:
            yield self.template.flows(v)

    def flows_for(self, params: Mapping) -> dict:
        """``G`` for Grassmann values of the free parameters (by label)."""
        A = self.template
        Fw = A.flow
        vals = {A.unknowns[k].label: GrassmannElement.zero(Fw.L) for k in range(len(A.unknowns))}
        for k in self.free_parameters:
            lab = A.unknowns[k].label
            vals[lab] = _lift(params.get(lab, 0), Fw.L)
        for r in self.relations:
            acc = GrassmannElement.zero(Fw.L)
            for c, p in r.terms:
                acc = acc + c * vals[p]
            vals[r.unknown] = acc
        out = {v: NCPolynomial.zero(Fw.policy, Fw.L) for v in Fw.variables}
        for u in A.unknowns:
            val = vals[u.label]
            if val:
                v = Fw.variables[u.equation]
                out[v] = out[v] + NCPolynomial.monomial(u.word, Fw.policy, Fw.L, val)
        return out

    @property
    def parametrized(self) -> bool:
        """Whether the space is spanned by whole free unknowns with left-linear relations."""
        return bool(self.free_parameters) and self.relations_verified

    def free_components(self, names=None) -> list:
        """Free rational components ``label[monomial]`` of the raw nullspace basis."""
        cols = self.template.columns()
        L = self.template.flow.L
        out = []
        for c in self.result.free:
            k, idx = cols[c]
            mono = GrassmannElement.monomial(idx, L).format(names) if idx else "1"
            out.append(f"{self.template.unknowns[k].label}[{mono}]")
        return out

    def report(self, names=None) -> dict:
        rep = {
            "unknowns": self.n_unknowns,
            "rational_unknowns": self.template.n_rational,
            "equations": self.system.lambda_equations,
            "rational_equations": self.system.n_equations,
            "rank": self.result.rank,
            "dimension": self.dimension,
            "free_parameters": self.free_names(),
            "relations": [r.format(names) for r in self.relations],
            "relations_verified": self.relations_verified,
        }
        if self.result.nullspace and not self.parametrized:
            rep["free_components"] = self.free_components(names)
        return rep


def _lift(x, L):
    if isinstance(x, GrassmannElement):
        return x.with_budget(L)
    return GrassmannElement.scalar(x, L)


def _pick_free(A: AnsatzTemplate, null: list) -> list:
    """Greedy choice in ansatz order of unknowns whose components are jointly free."""
    if not null:
        return []
    cols = A.columns()
    by_unknown: dict = {}
    for c, (k, _) in enumerate(cols):
        by_unknown.setdefault(k, []).append(c)
    chosen, chosen_cols, r = [], [], 0
    for k in range(len(A.unknowns)):
        cs = by_unknown.get(k, [])
        if not cs:
            continue
        trial = chosen_cols + cs
        rk = rank([[v[c] for c in trial] for v in null])
        if rk == r + len(cs):
            chosen.append(k)
            chosen_cols, r = trial, rk
        if r == len(null):
            break
    return chosen if r == len(null) else []


def _extract_relations(A: AnsatzTemplate, null: list, free: list):
    """Express every other unknown as a left-linear combination of free parameters."""
    cols = A.columns()
    free_cols = [c for c, (k, _) in enumerate(cols) if k in set(free)]
    Nf = [[v[c] for c in free_cols] for v in null]  # dim x dim
    L = A.flow.L
    theta = A.surplus[-1] if A.surplus else None

    def vector_for(assign):
        # combination of nullspace vectors with given values on the free columns
        lam = solve([list(r) for r in zip(*Nf)], [[assign.get(c, Fraction(0))] for c in free_cols])
        lam = [row[0] for row in lam]
        return [sum((l * v[c] for l, v in zip(lam, null)), Fraction(0)) for c in range(len(cols))]

    contributions = {k: [] for k in range(len(A.unknowns)) if k not in set(free)}
    for p in free:
        u = A.unknowns[p]
        if u.parity == EVEN:
            target = ()
        else:
            if theta is None:
                return None
            target = (theta,)
        col = next((c for c, (k, idx) in enumerate(cols) if k == p and idx == target), None)
        if col is None:
            return None
        vals = A.values(vector_for({col: Fraction(1)}))
        for k in contributions:
            val = vals[k]
            if not val:
                continue
            if u.parity == ODD:
                stripped = {}
                for idx, c in val.terms.items():
                    if not idx or idx[-1] != theta:
                        return None
                    stripped[idx[:-1]] = c
                val = GrassmannElement(L, stripped)
            contributions[k].append((val, u.label))
    return [Relation(A.unknowns[k].label, contributions[k]) for k in sorted(contributions)]


def _check_relations(A: AnsatzTemplate, null: list, free: list, relations: list) -> bool:
    labels = {u.label: k for k, u in enumerate(A.unknowns)}
    for v in null:
        vals = A.values(v)
        for r in relations:
            acc = GrassmannElement.zero(A.flow.L)
            for c, p in r.terms:
                acc = acc + c * vals[labels[p]]
            if acc != vals[labels[r.unknown]]:
                return False
    return True


def solve_commuting(F: FlowSpec, degree: int = 3, surplus: int | None = None, labels: Mapping | None = None) -> CommutingSolution:
    """All degree-bounded ``G`` commuting with ``F``, with free parameters and relations."""
    A = ansatz_build(F, degree, surplus, labels)
    system = commuting_condition(F, A)
    n = A.n_rational
    res = solve_linear(system.matrix, None, n) if system.matrix else solve_linear([], None, n)
    free = _pick_free(A, res.nullspace)
    relations, ok = [], False
    if free or not res.nullspace:
        rel = _extract_relations(A, res.nullspace, free) if res.nullspace else [
            Relation(u.label, []) for u in A.unknowns
        ]
        if rel is not None:
            relations = rel
            ok = _check_relations(A, res.nullspace, free, relations)
    return CommutingSolution(A, system, res, free, relations, ok)


def verify_commuting(F: FlowSpec, G: Mapping, word_degree: int = 3) -> Verdict:
    """Exact check of ``D_t G_i == D_tau F_i``, cross-checked on words via ``[D_t, D_tau] = 0``."""
    L = max([F.L] + [p.L for p in G.values()])
    Fw = F.with_budget(L) if L != F.L else F
    G = {v: G[v].with_budget(L) if G[v].L != L else G[v] for v in Fw.variables}
    try:
        Gflow = FlowSpec(Fw.variables, G)
    except ValueError as exc:
        return Verdict(False, f"G is not a valid flow: {exc}")
    for v, r in _residual(Fw, G).items():
        if r:
            w, c = sorted(r.terms.items(), key=lambda kv: (len(kv[0]), [x.name for x in kv[0]]))[0]
            return Verdict(False, f"D_t G - D_tau F for {v.name}: term {c}*{format_word(w) or '1'}",
                           {"variable": v.name, "word": [x.name for x in w], "coeff": str(c)})
    seen = set()
    for n in range(1, word_degree + 1):
        for w in product(Fw.variables, repeat=n):
            r = normalize_word(w, Fw.policy)
            if r is None or r[1] in seen:
                continue
            seen.add(r[1])
            p = NCPolynomial.monomial(r[1], Fw.policy, L)
            a = derivation_apply(Fw, derivation_apply(Gflow, p))
            b = derivation_apply(Gflow, derivation_apply(Fw, p))
            if a != b:
                return Verdict(False, f"D_t D_tau != D_tau D_t on {format_word(r[1])}")
    return Verdict(True, "flows commute")


# -- operator form of the Frechet derivative ------------------------------------

@dataclass(frozen=True)
class OperatorTerm:
    """``delta -> coeff * left * delta * right``, written ``R_right L_coeff L_left``."""

    coeff: GrassmannElement
    left: tuple
    right: tuple

    def __call__(self, delta: NCPolynomial) -> NCPolynomial:
        pol, L = delta.policy, delta.L
        lp = NCPolynomial.monomial(self.left, pol, L) if self.left else NCPolynomial.const(1, pol, L)
        rp = NCPolynomial.monomial(self.right, pol, L) if self.right else NCPolynomial.const(1, pol, L)
        return (lp * delta * rp).left_mul(self.coeff.with_budget(L))

    def format(self, names=None) -> str:
        parts = []
        c = self.coeff
        scalar = ""
        if c.is_scalar():
            if c.body() != 1:
                scalar = f"{c.body()}*"
        else:
            cs = c.format(names)
            parts.append(f"L_{cs}" if len(c.terms) == 1 else f"L_({cs})")
        if self.right:
            parts.insert(0, f"R_{format_word(self.right)}")
        if self.left:
            parts.append(f"L_{format_word(self.left)}")
        return scalar + (" ".join(parts) if parts else "1")


def frechet_operator_form(F: FlowSpec) -> dict:
    """For each variable, one list of operator terms per direction slot."""
    idx = {v: j for j, v in enumerate(F.variables)}
    out = {}
    for v in F.variables:
        slots = [dict() for _ in F.variables]
        for w, c in F.rhs[v].terms.items():
            for k, letter in enumerate(w):
                key = (w[:k], w[k + 1:])
                d = slots[idx[letter]]
                d[key] = d.get(key, GrassmannElement.zero(F.L)) + c
        out[v] = [[OperatorTerm(c, l, r) for (l, r), c in sorted(d.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), -len(kv[0][0]))) if c]
                  for d in slots]
    return out


def apply_operator(terms: list, delta: NCPolynomial) -> NCPolynomial:
    acc = NCPolynomial.zero(delta.policy, delta.L)
    for t in terms:
        acc = acc + t(delta)
    return acc


def format_operator(terms: list, names=None) -> str:
    if not terms:
        return "0"
    return " + ".join(t.format(names) for t in terms)
