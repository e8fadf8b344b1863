"""Polynomials in graded variables with Grassmann coefficients.

Two commutation policies are supported:

``free``
    letters never commute with each other; words are kept verbatim.
``supercommutative``
    letters are sorted into a canonical order, picking up a minus sign for
    every transposition of two odd letters; a repeated odd letter kills the
    word.

In both policies Grassmann coefficients are written on the left of a word
and supercommute with letters (moving an odd coefficient past an odd word
flips the sign).
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grassmann import EVEN, MIXED, ODD, ZERO, BudgetMismatch, GrassmannElement

FREE = "free"
SUPER = "supercommutative"
POLICIES = (FREE, SUPER)


class PolicyMismatch(ValueError):
    pass


class ParityError(ValueError):
    pass


class UnknownVariable(KeyError):
    pass


@dataclass(frozen=True, order=True)
class Variable:
    name: str
    parity: str = EVEN
    role: str = "dynamic"

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"variable parity must be even or odd, got {self.parity!r}")
        if self.role not in ("dynamic", "direction"):
            raise ValueError(f"unknown variable role {self.role!r}")

    @property
    def odd(self) -> bool:
        return self.parity == ODD

    def __str__(self):
        return self.name


Word = tuple  # tuple[Variable, ...]


def word_parity(w: Word) -> int:
    return sum(1 for v in w if v.parity == ODD) & 1


@lru_cache(maxsize=1 << 16)
def normalize_word(w: Word, policy: str):
    """Canonical form of a word: ``(sign, word)`` or ``None`` if it vanishes."""
    if policy == FREE or len(w) < 2:
        return 1, w
    odd = [v for v in w if v.parity == ODD]
    if len(set(odd)) != len(odd):
        return None
    inv = 0
    for i in range(len(odd)):
        for j in range(i + 1, len(odd)):
            if odd[j] < odd[i]:
                inv += 1
    return (-1 if inv & 1 else 1), tuple(sorted(w))


def _coeff_parity_split(c: GrassmannElement):
    """Yield (part, is_odd) for the even and odd parts of a coefficient."""
    p = c.parity()
    if p == EVEN:
        yield c, 0
    elif p == ODD:
        yield c, 1
    elif p == MIXED:
        yield c.even_part(), 0
        yield c.odd_part(), 1


def format_word(w: Word) -> str:
    if not w:
        return "1"
    parts = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        n = j - i
        parts.append(w[i].name if n == 1 else f"{w[i].name}^{n}")
        i = j
    return "*".join(parts)


class NCPolynomial:
    __slots__ = ("policy", "L", "terms")

    def __init__(self, terms: Mapping[Word, object] | None = None, policy: str = SUPER, L: int = 0):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        self.policy = policy
        self.L = L
        out: dict = {}
        for w, c in (terms or {}).items():
            if not isinstance(c, GrassmannElement):
                c = GrassmannElement.scalar(c, L)
            elif c.L != L:
                raise BudgetMismatch(f"coefficient budget {c.L} differs from polynomial budget {L}")
            r = normalize_word(tuple(w), policy)
            if r is None or not c:
                continue
            s, w = r
            _accumulate(out, w, c if s > 0 else -c)
        self.terms = out

    @classmethod
    def _raw(cls, terms, policy, L):
        obj = object.__new__(cls)
        obj.terms = terms
        obj.policy = policy
        obj.L = L
        return obj

    @classmethod
    def zero(cls, policy: str = SUPER, L: int = 0) -> "NCPolynomial":
        return cls._raw({}, policy, L)

    @classmethod
    def const(cls, c, policy: str = SUPER, L: int = 0) -> "NCPolynomial":
        if not isinstance(c, GrassmannElement):
            c = GrassmannElement.scalar(c, L)
        return cls._raw({(): c} if c else {}, policy, L)

    @classmethod
    def var(cls, v: Variable, policy: str = SUPER, L: int = 0) -> "NCPolynomial":
        return cls._raw({(v,): GrassmannElement.one(L)}, policy, L)

    @classmethod
    def monomial(cls, w: Word, policy: str = SUPER, L: int = 0, coeff=1) -> "NCPolynomial":
        return cls({tuple(w): coeff}, policy, L)

    # -- inspection -------------------------------------------------------
    def parity(self) -> str:
        kinds = set()
        for w, c in self.terms.items():
            cp = c.parity()
            if cp == MIXED:
                return MIXED
            kinds.add((cp == ODD) ^ word_parity(w))
        if not kinds:
            return ZERO
        if len(kinds) == 2:
            return MIXED
        return ODD if kinds.pop() else EVEN

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def degrees(self) -> set[int]:
        return {len(w) for w in self.terms}

    def variables(self) -> set[Variable]:
        return {v for w in self.terms for v in w}

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coefficient(self, w: Word) -> GrassmannElement:
        return self.terms.get(tuple(w), GrassmannElement.zero(self.L))

    def constant_term(self) -> GrassmannElement:
        return self.coefficient(())

    def with_budget(self, L: int) -> "NCPolynomial":
        return NCPolynomial._raw({w: c.with_budget(L) for w, c in self.terms.items()}, self.policy, L)

    # -- arithmetic -------------------------------------------------------
    def _lift(self, other) -> "NCPolynomial | None":
        if isinstance(other, NCPolynomial):
            if other.policy != self.policy:
                raise PolicyMismatch(f"{self.policy} vs {other.policy}")
            if other.L != self.L:
                raise BudgetMismatch(f"generator budgets differ: {self.L} vs {other.L}")
            return other
        if isinstance(other, GrassmannElement):
            if other.L != self.L:
                raise BudgetMismatch(f"generator budgets differ: {self.L} vs {other.L}")
            return NCPolynomial.const(other, self.policy, self.L)
        if isinstance(other, (int, Fraction)):
            return NCPolynomial.const(other, self.policy, self.L)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for w, c in o.terms.items():
            _accumulate(out, w, c)
        return NCPolynomial._raw(out, self.policy, self.L)

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial._raw({w: -c for w, c in self.terms.items()}, self.policy, self.L)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def scale(self, c) -> "NCPolynomial":
        c = Fraction(c)
        if not c:
            return NCPolynomial.zero(self.policy, self.L)
        return NCPolynomial._raw({w: v.scale(c) for w, v in self.terms.items()}, self.policy, self.L)

    def left_mul(self, c: GrassmannElement) -> "NCPolynomial":
        """``c * self`` for a Grassmann constant ``c``."""
        out: dict = {}
        for w, v in self.terms.items():
            _accumulate(out, w, c * v)
        return NCPolynomial._raw(out, self.policy, self.L)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return ncp_mul(self, o)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, GrassmannElement):
            if other.L != self.L:
                raise BudgetMismatch(f"generator budgets differ: {other.L} vs {self.L}")
            return self.left_mul(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        out = NCPolynomial.const(1, self.policy, self.L)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, NCPolynomial):
            return self.policy == other.policy and self.terms == other.terms
        if isinstance(other, (GrassmannElement, int, Fraction)):
            c = other if isinstance(other, GrassmannElement) else GrassmannElement.scalar(other, self.L)
            return self.terms == ({(): c} if c else {})
        return NotImplemented

    def __hash__(self):
        return hash((self.policy, frozenset(self.terms.items())))

    # -- formatting -------------------------------------------------------
    def format(self, names=None) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for w in sorted(self.terms, key=lambda w: (len(w), [v.name for v in w])):
            c = self.terms[w]
            ws = format_word(w)
            if c.is_scalar():
                b = c.body()
                mag = abs(b)
                if not w:
                    txt = str(mag)
                elif mag == 1:
                    txt = ws
                else:
                    txt = f"{mag}*{ws}"
                pieces.append(("-" if b < 0 else "+", txt))
            else:
                cs = c.format(names)
                if len(c.terms) > 1:
                    cs = f"({cs})"
                    sign = "+"
                elif cs.startswith("-"):
                    cs, sign = cs[1:], "-"
                else:
                    sign = "+"
                pieces.append((sign, cs if not w else f"{cs}*{ws}"))
        s = " ".join(f"{sg} {t}" for sg, t in pieces)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __repr__(self):
        return f"NCPolynomial({self.format()}, policy={self.policy!r})"

    __str__ = format

    def to_json(self) -> list:
        return [
            {"word": [v.name for v in w], "coeff": c.to_json()}
            for w, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), [v.name for v in kv[0]]))
        ]

    @classmethod
    def from_json(cls, data: list, variables: Mapping[str, Variable], policy: str, L: int) -> "NCPolynomial":
        terms: dict = {}
        for t in data:
            w = tuple(variables[n] for n in t["word"])
            c = GrassmannElement.from_json(t["coeff"]).with_budget(L)
            terms[w] = terms.get(w, GrassmannElement.zero(L)) + c
        return cls(terms, policy, L)

    def evaluate(self, values: Mapping, identity=None):
        """Numerical value with real coefficients (bodies only).

        ``values`` maps variables (or names) to floats or square arrays; with
        arrays, words become matrix products and constants multiply
        ``identity``.
        """
        lookup = {}
        for k, v in values.items():
            lookup[k.name if isinstance(k, Variable) else k] = v
        total = 0.0
        for w, c in self.terms.items():
            if not c.is_scalar():
                raise ValueError("numerical evaluation needs real coefficients")
            coef = float(c.body())
            if not w:
                total = total + coef * (identity if identity is not None else 1.0)
                continue
            acc = None
            for v in w:
                x = lookup[v.name]
                if acc is None:
                    acc = x
                elif np.ndim(x) == 2:
                    acc = acc @ x
                else:
                    acc = acc * x
            total = total + coef * acc
        return total


def _accumulate(out: dict, w: Word, c: GrassmannElement):
    prev = out.get(w)
    s = c if prev is None else prev + c
    if s:
        out[w] = s
    else:
        out.pop(w, None)


def _mul_into(out: dict, c1: GrassmannElement, w1: Word, c2: GrassmannElement, w2: Word, policy: str):
    r = normalize_word(w1 + w2, policy)
    if r is None:
        return
    s, w = r
    p1 = word_parity(w1)
    for part, odd in _coeff_parity_split(c2):
        coeff = c1 * part
        if not coeff:
            continue
        if (s < 0) ^ (p1 & odd == 1):
            coeff = -coeff
        _accumulate(out, w, coeff)


def ncp_mul(p: NCPolynomial, q: NCPolynomial) -> NCPolynomial:
    if p.policy != q.policy:
        raise PolicyMismatch(f"{p.policy} vs {q.policy}")
    if p.L != q.L:
        raise BudgetMismatch(f"generator budgets differ: {p.L} vs {q.L}")
    out: dict = {}
    for w1, c1 in p.terms.items():
        for w2, c2 in q.terms.items():
            _mul_into(out, c1, w1, c2, w2, p.policy)
    return NCPolynomial._raw(out, p.policy, p.L)


def _sandwich(out: dict, c: GrassmannElement, left: Word, middle: NCPolynomial, right: Word, policy: str):
    """Accumulate ``c * left * middle * right`` into ``out``."""
    pl = word_parity(left)
    for w2, c2 in middle.terms.items():
        r = normalize_word(left + w2 + right, policy)
        if r is None:
            continue
        s, w = r
        for part, odd in _coeff_parity_split(c2):
            coeff = c * part
            if not coeff:
                continue
            if (s < 0) ^ (pl & odd == 1):
                coeff = -coeff
            _accumulate(out, w, coeff)


def _as_poly(x, policy: str, L: int) -> NCPolynomial:
    if isinstance(x, NCPolynomial):
        return x
    return NCPolynomial.const(x, policy, L)


def substitute(p: NCPolynomial, sigma: Mapping) -> NCPolynomial:
    """Homomorphic image of ``p`` under a letter assignment.

    ``sigma`` maps variables (or their names) to polynomials, Grassmann
    elements or rationals.  Every letter of ``p`` must be assigned, and
    images must have the parity of the letter they replace.
    """
    table = {}
    for k, v in sigma.items():
        table[k.name if isinstance(k, Variable) else k] = v
    images: dict[Variable, NCPolynomial] = {}
    for v in p.variables():
        if v.name not in table:
            raise UnknownVariable(f"no assignment for variable {v.name!r}")
        img = _as_poly(table[v.name], p.policy, p.L)
        if img.policy != p.policy:
            raise PolicyMismatch(f"image of {v.name} uses policy {img.policy}")
        ip = img.parity()
        if ip not in (v.parity, ZERO):
            raise ParityError(f"image of {v.name} has parity {ip}, expected {v.parity}")
        images[v] = img
    out = NCPolynomial.zero(p.policy, p.L)
    one = NCPolynomial.const(1, p.policy, p.L)
    for w, c in p.terms.items():
        acc = one
        for v in w:
            acc = ncp_mul(acc, images[v])
            if not acc:
                break
        if acc:
            out = out + acc.left_mul(c)
    return out


@dataclass(frozen=True)
class FlowSpec:
    """A first-order system ``d/dt v = rhs[v]`` over polynomial right-hand sides."""

    variables: tuple
    rhs: dict = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        rhs = {}
        for k, poly in self.rhs.items():
            v = self.var(k) if isinstance(k, str) else k
            if v not in self.variables:
                raise UnknownVariable(f"rhs given for undeclared variable {v}")
            rhs[v] = poly
        missing = [v for v in self.variables if v not in rhs]
        if missing:
            raise ValueError(f"no right-hand side for {', '.join(v.name for v in missing)}")
        polys = list(rhs.values())
        if polys:
            pol = {p.policy for p in polys}
            if len(pol) > 1:
                raise PolicyMismatch("right-hand sides use different policies")
            if len({p.L for p in polys}) > 1:
                raise BudgetMismatch("right-hand sides use different generator budgets")
        for v in self.variables:
            par = rhs[v].parity()
            if par not in (v.parity, ZERO):
                raise ParityError(f"d{v.name}/dt has parity {par}, but {v.name} is {v.parity}")
            stray = rhs[v].variables() - set(self.variables)
            if stray:
                raise UnknownVariable(f"rhs of {v.name} uses undeclared {sorted(s.name for s in stray)}")
        object.__setattr__(self, "rhs", rhs)

    def __eq__(self, other):
        if not isinstance(other, FlowSpec):
            return NotImplemented
        return self.variables == other.variables and self.rhs == other.rhs

    def __hash__(self):
        return hash(self.variables)

    @property
    def policy(self) -> str:
        return next(iter(self.rhs.values())).policy if self.rhs else SUPER

    @property
    def L(self) -> int:
        return next(iter(self.rhs.values())).L if self.rhs else 0

    def var(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(name)

    def __getitem__(self, key) -> NCPolynomial:
        v = self.var(key) if isinstance(key, str) else key
        return self.rhs[v]

    def with_budget(self, L: int) -> "FlowSpec":
        return FlowSpec(self.variables, {v: p.with_budget(L) for v, p in self.rhs.items()})

    def format(self, names=None) -> str:
        return "\n".join(f"d{v.name}/dt = {self.rhs[v].format(names)}" for v in self.variables)


def derivation_apply(F: FlowSpec, p: NCPolynomial) -> NCPolynomial:
    """Apply the even derivation ``v -> F[v]`` (zero on constants) to ``p``."""
    out: dict = {}
    rhs = F.rhs
    for w, c in p.terms.items():
        for k, v in enumerate(w):
            img = rhs.get(v)
            if img is None:
                raise UnknownVariable(f"variable {v.name!r} is not part of the flow")
            if img.terms:
                _sandwich(out, c, w[:k], img, w[k + 1:], p.policy)
    return NCPolynomial._raw(out, p.policy, p.L)


def frechet(p: NCPolynomial, X: Sequence[Variable], directions: Sequence[Variable]) -> NCPolynomial:
    """Part of ``p(X + eps*directions)`` linear in ``eps``.

    Computed by replacing one letter occurrence at a time with its direction.
    """
    if len(X) != len(directions):
        raise ValueError("need one direction per variable")
    swap = {}
    for x, d in zip(X, directions):
        if x.parity != d.parity:
            raise ParityError(f"direction {d.name} must have the parity of {x.name}")
        swap[x] = d
    clash = set(directions) & p.variables()
    if clash:
        raise ValueError(f"directions {sorted(v.name for v in clash)} already occur in the polynomial")
    out: dict = {}
    for w, c in p.terms.items():
        for k, v in enumerate(w):
            d = swap.get(v)
            if d is not None:
                _sandwich(out, c, w[:k], NCPolynomial.var(d, p.policy, p.L), w[k + 1:], p.policy)
    return NCPolynomial._raw(out, p.policy, p.L)


def polarize(Q: NCPolynomial, X: Sequence[Variable], Y: Sequence[Variable]) -> NCPolynomial:
    """Symmetric bilinear form ``1/2 [Q(X+Y) - Q(X) - Q(Y)]``."""
    xs = set(X)
    for w in Q.terms:
        if sum(1 for v in w if v in xs) != 2 or any(v not in xs for v in w):
            raise ValueError("polarize needs a polynomial homogeneous of degree 2 in X")
    pol, L = Q.policy, Q.L
    var = lambda v: NCPolynomial.var(v, pol, L)  # noqa: E731
    q_sum = substitute(Q, {x: var(x) + var(y) for x, y in zip(X, Y)})
    q_y = substitute(Q, {x: var(y) for x, y in zip(X, Y)})
    return (q_sum - Q - q_y).scale(Fraction(1, 2))


def words_up_to(variables: Sequence[Variable], degree: int, policy: str) -> list[Word]:
    """Canonical nonzero words whose even-letter and odd-letter counts are both ``<= degree``."""
    seen = []
    found = set()
    for n in range(0, 2 * degree + 1):
        for w in product(variables, repeat=n):
            n_odd = sum(1 for v in w if v.parity == ODD)
            if n - n_odd > degree or n_odd > degree:
                continue
            r = normalize_word(w, policy)
            if r is None:
                continue
            cw = r[1]
            if cw not in found:
                found.add(cw)
                seen.append(cw)
    return seen


# -- text syntax ----------------------------------------------------------

def parse_polynomial(
    text: str,
    variables: Iterable[Variable],
    constants: Mapping[str, GrassmannElement] | None = None,
    policy: str = SUPER,
    L: int = 0,
) -> NCPolynomial:
    """Parse infix text such as ``"x + e*xi"`` or ``"a*x^2 - 1/2*x*y"``.

    Factor order is kept, so in the free policy ``x*y`` and ``y*x`` differ.
    Raw generators may be written ``b1``, ``b2``, ... unless shadowed by a
    declared name.
    """
    names = {v.name: v for v in variables}
    consts = dict(constants or {})
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse polynomial {text!r}: {exc.msg}") from None

    def lift(x):
        return _as_poly(x, policy, L)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return Fraction(str(node.value))
        if isinstance(node, ast.Name):
            n = node.id
            if n in names:
                return NCPolynomial.var(names[n], policy, L)
            if n in consts:
                return consts[n]
            if n.startswith("b") and n[1:].isdigit():
                return GrassmannElement.generator(int(n[1:]), L)
            raise UnknownVariable(f"unknown name {n!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return lift(a) + lift(b)
            if isinstance(node.op, ast.Sub):
                return lift(a) - lift(b)
            if isinstance(node.op, ast.Mult):
                if isinstance(a, Fraction) and isinstance(b, Fraction):
                    return a * b
                return lift(a) * lift(b)
            if isinstance(node.op, ast.Div):
                if not isinstance(b, Fraction):
                    raise ValueError(f"can only divide by numbers in {text!r}")
                return a / b
            if isinstance(node.op, ast.Pow):
                if not (isinstance(b, Fraction) and b.denominator == 1 and b >= 0):
                    raise ValueError(f"exponents must be non-negative integers in {text!r}")
                if isinstance(a, Fraction):
                    return a ** int(b)
                return lift(a) ** int(b)
        raise ValueError(f"unsupported syntax in polynomial {text!r}")

    return lift(ev(tree))
