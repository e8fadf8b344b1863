"""Exact arithmetic in the finite Grassmann algebra over the rationals.

An element of the algebra with ``L`` generators is stored as a map from
multi-indices (strictly increasing tuples of generator labels in ``1..L``)
to nonzero :class:`fractions.Fraction` coefficients.  The empty tuple is the
unit.  Values are immutable once built.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

EVEN, ODD, MIXED, ZERO = "even", "odd", "mixed", "zero"

Index = tuple  # strictly increasing tuple of ints


class BudgetMismatch(ValueError):
    """Operands live in Grassmann algebras with different generator budgets."""


class BudgetExhausted(ValueError):
    """A computation needs more generators than the declared budget."""


@lru_cache(maxsize=1 << 16)
def merge_indices(a: Index, b: Index):
    """Product of basis monomials ``b_a * b_b``.

    Returns ``(sign, merged)`` or ``None`` when a generator repeats.
    """
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    swaps = 0
    while i < la and j < lb:
        ai, bj = a[i], b[j]
        if ai < bj:
            out.append(ai)
            i += 1
        elif ai > bj:
            out.append(bj)
            swaps += la - i
            j += 1
        else:
            return None
    out.extend(a[i:])
    out.extend(b[j:])
    return (-1 if swaps & 1 else 1), tuple(out)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, str)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c).limit_denominator(10**12)
    raise TypeError(f"cannot use {type(c).__name__} as a rational coefficient")


def basis_indices(generators: Iterable[int], parity: str | None = None) -> list[Index]:
    """All multi-indices over ``generators``, optionally filtered by parity.

    Ordered by length, then lexicographically.
    """
    gens = sorted(set(generators))
    out = []
    for k in range(len(gens) + 1):
        if parity == EVEN and k % 2:
            continue
        if parity == ODD and not k % 2:
            continue
        out.extend(combinations(gens, k))
    return out


class GrassmannElement:
    __slots__ = ("L", "terms", "_hash")

    def __init__(self, L: int, terms: Mapping[Index, object] | None = None):
        if L < 0:
            raise ValueError("generator budget must be non-negative")
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"multi-index {idx} is not strictly increasing")
            if idx and (idx[0] < 1 or idx[-1] > L):
                raise BudgetExhausted(f"multi-index {idx} exceeds generator budget L={L}")
            c = _as_fraction(c)
            if c:
                clean[idx] = clean.get(idx, 0) + c
        self.L = L
        self.terms = {k: v for k, v in clean.items() if v}
        self._hash = None

    @classmethod
    def _raw(cls, L, terms):
        obj = object.__new__(cls)
        obj.L = L
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def scalar(cls, c, L: int = 0) -> "GrassmannElement":
        c = _as_fraction(c)
        return cls._raw(L, {(): c} if c else {})

    @classmethod
    def zero(cls, L: int = 0) -> "GrassmannElement":
        return cls._raw(L, {})

    @classmethod
    def one(cls, L: int = 0) -> "GrassmannElement":
        return cls._raw(L, {(): Fraction(1)})

    @classmethod
    def generator(cls, i: int, L: int) -> "GrassmannElement":
        if not 1 <= i <= L:
            raise BudgetExhausted(f"generator {i} outside budget L={L}")
        return cls._raw(L, {(i,): Fraction(1)})

    @classmethod
    def monomial(cls, idx: Sequence[int], L: int, coeff=1) -> "GrassmannElement":
        """``coeff * b_{i1} b_{i2} ...`` for an arbitrary (unsorted) index list."""
        sign, cur = 1, ()
        for i in idx:
            r = merge_indices(cur, (i,))
            if r is None:
                return cls.zero(L)
            s, cur = r
            sign *= s
        return cls(L, {cur: sign * _as_fraction(coeff)})

    # -- inspection -------------------------------------------------------
    def parity(self) -> str:
        if not self.terms:
            return ZERO
        kinds = {len(k) & 1 for k in self.terms}
        if len(kinds) == 2:
            return MIXED
        return ODD if kinds.pop() else EVEN

    def body(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def is_scalar(self) -> bool:
        return all(not k for k in self.terms)

    def generators(self) -> set[int]:
        return {g for k in self.terms for g in k}

    def even_part(self) -> "GrassmannElement":
        return GrassmannElement._raw(self.L, {k: v for k, v in self.terms.items() if not len(k) & 1})

    def odd_part(self) -> "GrassmannElement":
        return GrassmannElement._raw(self.L, {k: v for k, v in self.terms.items() if len(k) & 1})

    def with_budget(self, L: int) -> "GrassmannElement":
        if L < self.L and any(k and k[-1] > L for k in self.terms):
            raise BudgetExhausted(f"element uses generators beyond L={L}")
        return GrassmannElement._raw(L, dict(self.terms))

    def coefficient(self, idx: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(idx), Fraction(0))

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "GrassmannElement | None":
        if isinstance(other, GrassmannElement):
            if other.L != self.L:
                raise BudgetMismatch(f"generator budgets differ: {self.L} vs {other.L}")
            return other
        if isinstance(other, (int, Fraction)):
            return GrassmannElement.scalar(other, self.L)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for k, v in o.terms.items():
            s = out.get(k, 0) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return GrassmannElement._raw(self.L, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement._raw(self.L, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def scale(self, c) -> "GrassmannElement":
        c = _as_fraction(c)
        if not c:
            return GrassmannElement._raw(self.L, {})
        return GrassmannElement._raw(self.L, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        if other.L != self.L:
            raise BudgetMismatch(f"generator budgets differ: {self.L} vs {other.L}")
        out: dict = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                r = merge_indices(ka, kb)
                if r is None:
                    continue
                s, k = r
                v = out.get(k, 0) + (va * vb if s > 0 else -va * vb)
                if v:
                    out[k] = v
                else:
                    out.pop(k, None)
        return GrassmannElement._raw(self.L, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / _as_fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        out = GrassmannElement.one(self.L)
        for _ in range(n):
            out = out * self
        return out

    def inverse(self) -> "GrassmannElement":
        """Inverse of an element with nonzero body (geometric series in the soul)."""
        b = self.body()
        if not b:
            raise ZeroDivisionError("element has zero body and is not invertible")
        soul = (self - b).scale(-1 / b)
        out = GrassmannElement.one(self.L)
        term = out
        for _ in range(self.L):
            term = term * soul
            if term.is_zero():
                break
            out = out + term
        return out.scale(1 / b)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, GrassmannElement):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return self.terms == ({(): c} if c else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # -- formatting -------------------------------------------------------
    def format(self, names: Mapping[Index, str] | None = None) -> str:
        """Render as a sum of monomials; ``names`` maps multi-indices to labels."""
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda k: (len(k), k)):
            c = self.terms[k]
            mono = _format_index(k, names)
            if not mono:
                txt = str(abs(c))
            elif abs(c) == 1:
                txt = mono
            else:
                txt = f"{abs(c)}*{mono}"
            parts.append(("-" if c < 0 else "+", txt))
        s = " ".join(f"{sg} {t}" for sg, t in parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __repr__(self):
        return f"GrassmannElement(L={self.L}, {self.format()})"

    __str__ = format

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "L": self.L,
            "terms": [
                {"idx": list(k), "num": str(v.numerator), "den": str(v.denominator)}
                for k, v in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GrassmannElement":
        terms = {}
        for t in data["terms"]:
            idx = tuple(int(i) for i in t["idx"])
            terms[idx] = terms.get(idx, 0) + Fraction(int(t["num"]), int(t["den"]))
        return cls(int(data["L"]), terms)


def _format_index(k: Index, names) -> str:
    if not k:
        return ""
    if names:
        # greedily cover the index with named sub-monomials (named pairs first)
        rest = list(k)
        labels = []
        for sub, label in sorted(names.items(), key=lambda kv: -len(kv[0])):
            if sub and all(g in rest for g in sub):
                labels.append((k.index(sub[0]), label))
                for g in sub:
                    rest.remove(g)
        labels.extend((k.index(g), f"b{g}") for g in rest)
        return "*".join(label for _, label in sorted(labels))
    return "*".join(f"b{g}" for g in k)


# thin functional spellings -------------------------------------------------

def gr_mul(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    return a * b


def gr_parity(a: GrassmannElement) -> str:
    return a.parity()


def gr_body(a: GrassmannElement) -> Fraction:
    return a.body()


class ConstantRegistry:
    """Allocates named constants as fresh generators.

    Odd constants take one generator; even non-real constants take the
    product of two fresh generators, so all constants stay algebraically
    independent.
    """

    def __init__(self, L: int):
        self.L = L
        self.next_generator = 1
        self.constants: dict[str, tuple[str, Index]] = {}

    def allocate(self, name: str, parity: str) -> GrassmannElement:
        if name in self.constants:
            raise ValueError(f"constant {name!r} already declared")
        need = 1 if parity == ODD else 2
        if parity not in (EVEN, ODD):
            raise ValueError(f"constant parity must be even or odd, got {parity!r}")
        if self.next_generator + need - 1 > self.L:
            raise BudgetExhausted(
                f"constant {name!r} needs {need} more generator(s); budget L={self.L} is exhausted"
            )
        idx = tuple(range(self.next_generator, self.next_generator + need))
        self.next_generator += need
        self.constants[name] = (parity, idx)
        return GrassmannElement._raw(self.L, {idx: Fraction(1)})

    def __getitem__(self, name: str) -> GrassmannElement:
        return GrassmannElement._raw(self.L, {self.constants[name][1]: Fraction(1)})

    def __contains__(self, name) -> bool:
        return name in self.constants

    @property
    def used(self) -> int:
        return self.next_generator - 1

    def names(self) -> dict[Index, str]:
        return {idx: name for name, (_, idx) in self.constants.items()}

    def format(self, a: GrassmannElement) -> str:
        return a.format(self.names())

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "constants": [{"name": n, "parity": p} for n, (p, _) in self.constants.items()],
        }


class SuperVector:
    """Point of a flat superspace: one entry per slot, each of fixed parity.

    Entries may be :class:`GrassmannElement` or polynomials (anything with a
    ``parity()`` method and ring operations), which lets the same algebraic
    routines run on numbers and on symbolic data.
    """

    __slots__ = ("entries", "parities")

    def __init__(self, entries: Sequence, parities: Sequence[str] | None = None, check: bool = True):
        self.entries = tuple(entries)
        if parities is None:
            parities = (EVEN,) * len(self.entries)
        self.parities = tuple(parities)
        if len(self.parities) != len(self.entries):
            raise ValueError("one parity per entry is required")
        if check:
            for i, (e, p) in enumerate(zip(self.entries, self.parities)):
                ep = e.parity() if hasattr(e, "parity") else (ZERO if not e else EVEN)
                if ep not in (p, ZERO):
                    raise ValueError(f"entry {i} has parity {ep}, slot requires {p}")

    @classmethod
    def from_pq(cls, entries: Sequence, p: int, q: int) -> "SuperVector":
        if len(entries) != p + q:
            raise ValueError(f"expected {p + q} entries, got {len(entries)}")
        return cls(entries, (EVEN,) * p + (ODD,) * q)

    @property
    def p(self) -> int:
        return self.parities.count(EVEN)

    @property
    def q(self) -> int:
        return self.parities.count(ODD)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def _same_shape(self, other: "SuperVector"):
        if not isinstance(other, SuperVector):
            raise TypeError("expected a SuperVector")
        if other.parities != self.parities:
            raise ValueError("super-vector shapes differ")

    def __add__(self, other):
        self._same_shape(other)
        return SuperVector([a + b for a, b in zip(self.entries, other.entries)], self.parities, check=False)

    def __sub__(self, other):
        self._same_shape(other)
        return SuperVector([a - b for a, b in zip(self.entries, other.entries)], self.parities, check=False)

    def __neg__(self):
        return SuperVector([-a for a in self.entries], self.parities, check=False)

    def scale(self, c) -> "SuperVector":
        """Multiply every entry by a rational (or even scalar) on the left."""
        if isinstance(c, (int, Fraction)):
            return SuperVector([a * c for a in self.entries], self.parities, check=False)
        return SuperVector([c * a for a in self.entries], self.parities, check=False)

    def __rmul__(self, c):
        return self.scale(c)

    def is_zero(self) -> bool:
        return all(not a for a in self.entries)

    def __eq__(self, other):
        if not isinstance(other, SuperVector):
            return NotImplemented
        return self.parities == other.parities and all(a == b for a, b in zip(self.entries, other.entries))

    def __hash__(self):
        return hash((self.parities, self.entries))

    def __repr__(self):
        return "SuperVector([" + ", ".join(str(e) for e in self.entries) + "])"

    def map(self, f) -> "SuperVector":
        return SuperVector([f(a) for a in self.entries], self.parities, check=False)
