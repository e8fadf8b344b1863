"""N-ary structure tensors and the polynomial systems they define.

Indices are 0-based in Python and 1-based in the JSON format.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Mapping, Sequence

from ._common import Verdict
from .freepoly import (
    FREE,
    FlowSpec,
    NCPolynomial,
    Variable,
    derivation_apply,
    format_word,
    normalize_word,
    substitute,
    word_parity,
)
from .grassmann import EVEN, ODD, GrassmannElement, SuperVector


class ClosureLimit(RuntimeError):
    """Degree reduction needed more new variables than allowed."""


@dataclass(frozen=True)
class StructureTensor:
    """Sparse coefficients ``a_i^{k1...kN}``: maps ``(i, (k1, ..., kN))`` to a Grassmann element."""

    n: int
    N: int
    coeffs: dict = field(compare=False)
    L: int = 0
    symmetric: bool = False

    def __post_init__(self):
        clean = {}
        for (i, ks), c in self.coeffs.items():
            ks = tuple(ks)
            if len(ks) != self.N:
                raise ValueError(f"entry {(i, ks)} does not have arity {self.N}")
            if not 0 <= i < self.n or any(not 0 <= k < self.n for k in ks):
                raise IndexError(f"entry {(i, ks)} out of range for n={self.n}")
            if not isinstance(c, GrassmannElement):
                c = GrassmannElement.scalar(c, self.L)
            elif c.L != self.L:
                c = c.with_budget(self.L)
            if c:
                clean[(i, ks)] = clean.get((i, ks), GrassmannElement.zero(self.L)) + c
        clean = {k: v for k, v in clean.items() if v}
        object.__setattr__(self, "coeffs", clean)
        if self.symmetric:
            for (i, ks), c in clean.items():
                for perm in set(permutations(ks)):
                    if clean.get((i, perm)) != c:
                        raise ValueError(f"symmetric tensor is not invariant at {(i, perm)}")

    def __eq__(self, other):
        if not isinstance(other, StructureTensor):
            return NotImplemented
        return (self.n, self.N, self.coeffs) == (other.n, other.N, other.coeffs)

    def __hash__(self):
        return hash((self.n, self.N, frozenset(self.coeffs.items())))

    def get(self, i: int, ks: Sequence[int]) -> GrassmannElement:
        return self.coeffs.get((i, tuple(ks)), GrassmannElement.zero(self.L))

    def with_budget(self, L: int) -> "StructureTensor":
        return StructureTensor(self.n, self.N, {k: c.with_budget(L) for k, c in self.coeffs.items()}, L, self.symmetric)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "entries": [
                {"i": i + 1, "k": [k + 1 for k in ks], "coeff": c.to_json()}
                for (i, ks), c in sorted(self.coeffs.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping, L: int | None = None) -> "StructureTensor":
        coeffs = {}
        budget = L
        for e in data["entries"]:
            c = GrassmannElement.from_json(e["coeff"])
            if budget is None:
                budget = c.L
            coeffs[(e["i"] - 1, tuple(k - 1 for k in e["k"]))] = c.with_budget(budget)
        return cls(data["n"], data["N"], coeffs, budget or 0, bool(data.get("symmetric", False)))


def _zero_like(x):
    return x - x


def mu_eval(T: StructureTensor, args: Sequence[SuperVector]) -> SuperVector:
    """Multilinear map ``mu(X1, ..., XN)``; products are taken left to right, coefficient first."""
    if len(args) != T.N:
        raise ValueError(f"mu takes {T.N} arguments, got {len(args)}")
    for a in args:
        if len(a) != T.n:
            raise ValueError(f"argument has dimension {len(a)}, expected {T.n}")
    zero = _zero_like(args[0].entries[0])
    out = [zero] * T.n
    for (i, ks), c in T.coeffs.items():
        prod = args[0].entries[ks[0]]
        if not prod:
            continue
        for slot, k in enumerate(ks[1:], start=1):
            prod = prod * args[slot].entries[k]
            if not prod:
                break
        if prod:
            out[i] = out[i] + c * prod
    return SuperVector(out, args[0].parities)


def default_variables(n: int, parities: Sequence[str] | None = None, prefix: str = "X") -> tuple:
    parities = parities or (EVEN,) * n
    return tuple(Variable(f"{prefix}{i + 1}", parities[i]) for i in range(n))


def build_system(T: StructureTensor, variables: Sequence[Variable] | None = None, policy: str = FREE) -> FlowSpec:
    """The flow ``dX_i/dt = sum a_i^{k1..kN} X_k1 ... X_kN``."""
    variables = tuple(variables) if variables is not None else default_variables(T.n)
    if len(variables) != T.n:
        raise ValueError("need one variable per tensor slot")
    rhs = {v: NCPolynomial.zero(policy, T.L) for v in variables}
    for (i, ks), c in T.coeffs.items():
        w = tuple(variables[k] for k in ks)
        rhs[variables[i]] = rhs[variables[i]] + NCPolynomial.monomial(w, policy, T.L, c)
    return FlowSpec(variables, rhs)


@dataclass(frozen=True)
class ReductionResult:
    reduced: FlowSpec
    dictionary: dict = field(compare=False)  # new Variable -> word over original variables

    def format(self) -> str:
        lines = [f"{y.name} = {format_word(w)}" for y, w in self.dictionary.items()]
        return "\n".join(lines + [self.reduced.format()])


def _splits(w, policy, part_lengths):
    """Candidate factorizations ``w = sign * a * b`` with allowed part lengths."""
    m = len(w)
    seen = set()
    if policy == FREE:
        for k in range(1, m):
            if k in part_lengths and m - k in part_lengths:
                yield 1, w[:k], w[k:]
        return
    for k in range(1, m):
        if k not in part_lengths or m - k not in part_lengths:
            continue
        for pos in combinations(range(m), k):
            a = tuple(w[i] for i in pos)
            b = tuple(w[i] for i in range(m) if i not in pos)
            ra, rb = normalize_word(a, policy), normalize_word(b, policy)
            if ra is None or rb is None:
                continue
            a, b = ra[1], rb[1]
            if (a, b) in seen:
                continue
            seen.add((a, b))
            r = normalize_word(a + b, policy)
            # w = s * a * b  with a*b = r_sign * w
            yield r[0], a, b


def reduce_to_quadratic(F: FlowSpec, max_new: int | None = None) -> ReductionResult:
    """Rewrite a homogeneous degree-N flow as a quadratic flow in more variables.

    New variables stand for words of length N-1 over the original variables;
    only words reachable from the right-hand sides are introduced.
    """
    degs = set()
    for p in F.rhs.values():
        degs |= p.degrees()
    if not degs or max(degs) <= 2:
        return ReductionResult(F, {})
    if len(degs) != 1:
        raise ValueError(f"reduction needs homogeneous right-hand sides, found degrees {sorted(degs)}")
    N = degs.pop()
    n = len(F.variables)
    cap = max_new if max_new is not None else n ** (N - 1)
    policy, L = F.policy, F.L
    order = {v: i for i, v in enumerate(F.variables)}
    key = lambda w: (len(w), [order[v] for v in w])  # noqa: E731
    part_lengths = {1, N - 1}

    known: set = set()  # dictionary words
    plan: dict = {}  # word -> (sign, a, b)

    def is_known(part):
        return len(part) == 1 or part in known

    pending = sorted({w for p in F.rhs.values() for w in p.terms}, key=key)
    while pending:
        w = pending.pop(0)
        if w in plan:
            continue
        best = None
        for s, a, b in _splits(w, policy, part_lengths):
            new = sorted({x for x in (a, b) if not is_known(x)}, key=key)
            cand = (len(new), [key(x) for x in new], key(a), s, a, b, new)
            if best is None or cand[:3] < best[:3]:
                best = cand
        if best is None:
            raise ValueError(f"cannot factor word {format_word(w)} into allowed parts")
        _, _, _, s, a, b, new = best
        plan[w] = (s, a, b)
        for x in new:
            known.add(x)
            if len(known) > cap:
                raise ClosureLimit(f"reduction needs more than {cap} new variables")
            d = derivation_apply(F, NCPolynomial.monomial(x, policy, L))
            pending.extend(d.terms)
        pending = sorted(set(pending) - set(plan), key=key)

    taken = {v.name for v in F.variables}
    prefix = "Y"
    while any(nm.startswith(prefix) for nm in taken):
        prefix += "_"
    words = sorted(known, key=key)
    new_vars = {w: Variable(f"{prefix}{j + 1}", ODD if word_parity(w) else EVEN) for j, w in enumerate(words)}

    def letter(part):
        return NCPolynomial.var(part[0] if len(part) == 1 else new_vars[part], policy, L)

    def rewrite(p: NCPolynomial) -> NCPolynomial:
        out = NCPolynomial.zero(policy, L)
        for w, c in p.terms.items():
            if len(w) <= 2:
                out = out + NCPolynomial.monomial(w, policy, L, c)
                continue
            s, a, b = plan[w]
            out = out + (letter(a) * letter(b)).left_mul(c).scale(s)
        return out

    rhs = {v: rewrite(F.rhs[v]) for v in F.variables}
    for w, y in new_vars.items():
        rhs[y] = rewrite(derivation_apply(F, NCPolynomial.monomial(w, policy, L)))
    reduced = FlowSpec(tuple(F.variables) + tuple(new_vars.values()), rhs)
    return ReductionResult(reduced, {y: w for w, y in new_vars.items()})


def verify_reduction(original: FlowSpec, R: ReductionResult) -> Verdict:
    """Check that substituting the dictionary reproduces the original flow exactly."""
    policy, L = original.policy, original.L
    sigma = {v: NCPolynomial.var(v, policy, L) for v in original.variables}
    for y, w in R.dictionary.items():
        sigma[y] = NCPolynomial.monomial(w, policy, L)
    checks = [(v, original.rhs[v]) for v in original.variables]
    checks += [(y, derivation_apply(original, sigma[y])) for y in R.dictionary]
    for v, expected in checks:
        if v not in R.reduced.rhs:
            return Verdict(False, f"reduced system has no equation for {v.name}")
        got = substitute(R.reduced.rhs[v], sigma)
        diff = got - expected
        if diff:
            w, c = next(iter(sorted(diff.terms.items(), key=lambda kv: (len(kv[0]), [u.name for u in kv[0]]))))
            return Verdict(
                False,
                f"d{v.name}/dt mismatch: term {c}*{format_word(w)} in (reduced - original)",
                {"variable": v.name, "word": [u.name for u in w], "coeff": str(c)},
            )
        if R.reduced.rhs[v].degree() > 2:
            return Verdict(False, f"d{v.name}/dt has degree {R.reduced.rhs[v].degree()} > 2")
    return Verdict(True, "reduction verified")


def homogenize(S):
    """Adjoin a constant even variable ``u`` so that ``C + TX + Q(X)`` becomes ``u^2 C + u T X + Q(X)``."""
    from .quadratic import homogenize as _homogenize

    return _homogenize(S)
