"""JSON system files.

One schema covers every system kind; a ``kind`` field selects the body.
Rationals and Grassmann constants are written as strings such as
``"1/2*gamma"`` and parsed with the declared constants in scope.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .freepoly import FREE, POLICIES, SUPER, FlowSpec, NCPolynomial, Variable, format_word, parse_polynomial
from .grassmann import EVEN, ODD, ConstantRegistry, GrassmannElement, SuperVector
from .nary import StructureTensor, build_system
from .quadratic import QuadraticSystem

VERSION = 1
KINDS = ("flow", "tensor", "quadratic", "riccati")


class LoadError(ValueError):
    """Schema or validation problem; the message names the offending field."""


def default_budget() -> int | None:
    v = os.environ.get("SUPERODE_GENERATORS")
    if v is None or v == "":
        return None
    try:
        return int(v)
    except ValueError:
        raise LoadError(f"SUPERODE_GENERATORS must be an integer, got {v!r}") from None


@dataclass
class SystemFile:
    kind: str
    body: object
    registry: ConstantRegistry = field(default_factory=lambda: ConstantRegistry(0))
    variables: tuple = ()
    policy: str = SUPER
    symbols: tuple = ()
    initial: dict = field(default_factory=dict)  # variable name -> GrassmannElement | NCPolynomial
    labels: dict = field(default_factory=dict)  # (variable, word names) -> label
    dictionary: dict = field(default_factory=dict)  # new variable name -> word (tuple of Variables)
    initial_matrix: list | None = None  # riccati files
    name: str = ""
    description: str = ""

    def __eq__(self, other):
        if not isinstance(other, SystemFile):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.body == other.body
            and self.registry.to_json() == other.registry.to_json()
            and self.variables == other.variables
            and self.policy == other.policy
            and self.symbols == other.symbols
            and self.initial == other.initial
            and self.labels == other.labels
            and self.dictionary == other.dictionary
            and self.initial_matrix == other.initial_matrix
        )

    @property
    def L(self) -> int:
        return self.registry.L

    @property
    def names(self) -> dict:
        return self.registry.names()

    @property
    def constants(self) -> dict:
        return {n: self.registry[n] for n in self.registry.constants}

    def flow(self) -> FlowSpec:
        if self.kind == "flow":
            return self.body
        if self.kind == "tensor":
            return build_system(self.body, self.variables, self.policy)
        if self.kind == "quadratic":
            return self.body.flow(self.variables)
        raise LoadError(f"a {self.kind} file does not describe a polynomial flow")

    def quadratic(self) -> QuadraticSystem:
        if self.kind == "quadratic":
            return self.body
        F = self.flow()
        if F.policy != SUPER:
            raise LoadError("quadratic analysis needs the supercommutative policy")
        return QuadraticSystem.from_flow(F)

    def initial_vector(self, dimension: int | None = None) -> SuperVector:
        """Initial values in variable order; missing entries are zero."""
        ents = []
        pol = SUPER
        symbolic = any(isinstance(v, NCPolynomial) for v in self.initial.values())
        for v in self.variables:
            val = self.initial.get(v.name)
            if val is None:
                val = GrassmannElement.zero(self.L)
            if symbolic and not isinstance(val, NCPolynomial):
                val = NCPolynomial.const(val, pol, self.L)
            ents.append(val)
        if dimension is not None and dimension > len(ents):
            raise LoadError("initial values do not cover every slot")
        return SuperVector(ents, tuple(v.parity for v in self.variables))


# -- parsing -------------------------------------------------------------------

def _req(data: Mapping, key: str, where: str):
    if key not in data:
        raise LoadError(f"{where}: missing field {key!r}")
    return data[key]


def _variables(items, where: str) -> tuple:
    out = []
    for k, item in enumerate(items):
        name = _req(item, "name", f"{where}[{k}]")
        par = item.get("parity", EVEN)
        if par not in (EVEN, ODD):
            raise LoadError(f"{where}[{k}].parity: expected 'even' or 'odd', got {par!r}")
        out.append(Variable(name, par))
    names = [v.name for v in out]
    if len(set(names)) != len(names):
        raise LoadError(f"{where}: duplicate names")
    return tuple(out)


def _registry(gen: Mapping) -> ConstantRegistry:
    consts = gen.get("constants", [])
    need = sum(1 if c.get("parity", ODD) == ODD else 2 for c in consts)
    L = gen.get("L")
    if L is None:
        L = default_budget()
    if L is None:
        L = need
    if not isinstance(L, int) or L < 0:
        raise LoadError(f"generators.L: expected a non-negative integer, got {L!r}")
    reg = ConstantRegistry(L)
    for k, c in enumerate(consts):
        try:
            reg.allocate(_req(c, "name", f"generators.constants[{k}]"), c.get("parity", ODD))
        except ValueError as exc:
            raise LoadError(f"generators.constants[{k}]: {exc}") from None
    return reg


def _poly(text, where, variables, reg, policy) -> NCPolynomial:
    if not isinstance(text, str):
        text = str(text)
    consts = {n: reg[n] for n in reg.constants}
    try:
        return parse_polynomial(text, variables, consts, policy, reg.L)
    except (ValueError, KeyError, ZeroDivisionError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        raise LoadError(f"{where}: {msg}") from None


def _const(text, where, reg) -> GrassmannElement:
    p = _poly(text, where, (), reg, SUPER)
    return p.constant_term()


def parse_system(data: Mapping) -> SystemFile:
    if not isinstance(data, Mapping):
        raise LoadError("top level must be a JSON object")
    version = data.get("version", VERSION)
    if version != VERSION:
        raise LoadError(f"version: unsupported {version!r}")
    kind = _req(data, "kind", "top level")
    if kind not in KINDS:
        raise LoadError(f"kind: expected one of {KINDS}, got {kind!r}")
    reg = _registry(data.get("generators", {}))
    policy = data.get("policy", SUPER)
    if policy not in POLICIES:
        raise LoadError(f"policy: expected one of {POLICIES}, got {policy!r}")
    variables = _variables(data.get("variables", []), "variables")
    symbols = _variables(data.get("symbols", []), "symbols")
    clash = {v.name for v in variables} & ({s.name for s in symbols} | set(reg.constants))
    if clash:
        raise LoadError(f"names used twice: {sorted(clash)}")

    if kind == "flow":
        rhs_text = _req(data, "flow", "top level")
        rhs = {}
        for v in variables:
            if v.name not in rhs_text:
                raise LoadError(f"flow: no right-hand side for {v.name!r}")
            rhs[v] = _poly(rhs_text[v.name], f"flow.{v.name}", variables, reg, policy)
        extra = set(rhs_text) - {v.name for v in variables}
        if extra:
            raise LoadError(f"flow: undeclared variables {sorted(extra)}")
        try:
            body = FlowSpec(variables, rhs)
        except ValueError as exc:
            raise LoadError(f"flow: {exc}") from None
    elif kind == "tensor":
        t = _req(data, "tensor", "top level")
        coeffs = {}
        for k, e in enumerate(_req(t, "entries", "tensor")):
            where = f"tensor.entries[{k}]"
            key = (_req(e, "i", where) - 1, tuple(j - 1 for j in _req(e, "k", where)))
            coeffs[key] = _const(_req(e, "coeff", where), where + ".coeff", reg)
        try:
            body = StructureTensor(_req(t, "n", "tensor"), _req(t, "N", "tensor"), coeffs, reg.L, bool(t.get("symmetric", False)))
        except (ValueError, IndexError) as exc:
            raise LoadError(f"tensor: {exc}") from None
        if variables and len(variables) != body.n:
            raise LoadError("variables: one variable per tensor slot is required")
        if not variables:
            variables = tuple(Variable(f"X{i + 1}") for i in range(body.n))
        try:
            build_system(body, variables, policy)
        except ValueError as exc:
            raise LoadError(f"tensor: {exc}") from None
    elif kind == "quadratic":
        q = _req(data, "quadratic", "top level")
        n = len(variables)
        C = [_const(c, f"quadratic.C[{i}]", reg) for i, c in enumerate(q.get("C", ["0"] * n))]
        T = [[_const(c, f"quadratic.T[{i}][{j}]", reg) for j, c in enumerate(row)] for i, row in enumerate(q.get("T", [["0"] * n] * n))]
        coeffs = {}
        for k, e in enumerate(q.get("beta", [])):
            where = f"quadratic.beta[{k}]"
            key = (_req(e, "i", where) - 1, tuple(j - 1 for j in _req(e, "k", where)))
            coeffs[key] = _const(_req(e, "coeff", where), where + ".coeff", reg)
        try:
            parities = tuple(v.parity for v in variables)
            u = q.get("u_index")
            body = QuadraticSystem(parities, SuperVector(C, parities), T, StructureTensor(n, 2, coeffs, reg.L),
                                   None if u is None else u - 1, tuple(v.name for v in variables))
        except (ValueError, IndexError) as exc:
            raise LoadError(f"quadratic: {exc}") from None
    else:
        from .dynamics.riccati import RiccatiSpec

        r = _req(data, "riccati", "top level")
        try:
            body = RiccatiSpec.from_json(r)
        except (ValueError, KeyError, ZeroDivisionError) as exc:
            raise LoadError(f"riccati: {exc}") from None

    initial = {}
    for name, text in data.get("initial", {}).items():
        v = next((x for x in variables if x.name == name), None)
        if v is None:
            raise LoadError(f"initial: unknown variable {name!r}")
        p = _poly(text, f"initial.{name}", symbols, reg, SUPER)
        par = p.parity()
        if par not in (v.parity, "zero"):
            raise LoadError(f"initial.{name}: value is {par}, but {name} is {v.parity}")
        initial[name] = p.constant_term() if not p.variables() else p

    labels = {}
    for vname, table in data.get("labels", {}).items():
        for wtext, label in table.items():
            if wtext == "1":
                word = ()
            else:
                p = _poly(wtext, f"labels.{vname}", variables, reg, policy)
                if len(p.terms) != 1:
                    raise LoadError(f"labels.{vname}: {wtext!r} is not a single word")
                word = tuple(x.name for x in next(iter(p.terms)))
            labels[(vname, word)] = label

    dictionary = {}
    for yname, wtext in data.get("dictionary", {}).items():
        base = tuple(v for v in variables if v.name not in data.get("dictionary", {}))
        p = _poly(wtext, f"dictionary.{yname}", base, reg, policy)
        if len(p.terms) != 1 or next(iter(p.terms.values())) != 1:
            raise LoadError(f"dictionary.{yname}: {wtext!r} is not a single word")
        dictionary[yname] = next(iter(p.terms))

    init_m = None
    if "initial_matrix" in data:
        from fractions import Fraction

        try:
            init_m = [[Fraction(str(x)) for x in row] for row in data["initial_matrix"]]
        except (ValueError, ZeroDivisionError) as exc:
            raise LoadError(f"initial_matrix: {exc}") from None

    return SystemFile(kind, body, reg, variables, policy, symbols, initial, labels, dictionary,
                      init_m, data.get("name", ""), data.get("description", ""))


def load_system(path) -> SystemFile:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise LoadError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return parse_system(data)
    except LoadError as exc:
        raise LoadError(f"{path}: {exc}") from None


# -- serialization ---------------------------------------------------------------

def _enc_const(c: GrassmannElement, names) -> str:
    return c.format(names)


def dump_system(sf: SystemFile) -> dict:
    names = sf.names
    out = {"version": VERSION, "kind": sf.kind}
    if sf.name:
        out["name"] = sf.name
    if sf.description:
        out["description"] = sf.description
    out["generators"] = sf.registry.to_json()
    out["policy"] = sf.policy
    out["variables"] = [{"name": v.name, "parity": v.parity} for v in sf.variables]
    if sf.symbols:
        out["symbols"] = [{"name": v.name, "parity": v.parity} for v in sf.symbols]
    if sf.kind == "flow":
        out["flow"] = {v.name: sf.body.rhs[v].format(names) for v in sf.variables}
    elif sf.kind == "tensor":
        T = sf.body
        out["tensor"] = {
            "n": T.n,
            "N": T.N,
            "entries": [{"i": i + 1, "k": [k + 1 for k in ks], "coeff": _enc_const(c, names)} for (i, ks), c in sorted(T.coeffs.items())],
        }
        if T.symmetric:
            out["tensor"]["symmetric"] = True
    elif sf.kind == "quadratic":
        S = sf.body
        out["quadratic"] = {
            "C": [_enc_const(c, names) for c in S.C],
            "T": [[_enc_const(t, names) for t in row] for row in S.T],
            "beta": [{"i": i + 1, "k": [k + 1 for k in ks], "coeff": _enc_const(c, names)} for (i, ks), c in sorted(S.beta.coeffs.items())],
            "u_index": None if S.u_index is None else S.u_index + 1,
        }
    else:
        out["riccati"] = sf.body.to_json()
    if sf.initial:
        out["initial"] = {k: v.format(names) for k, v in sf.initial.items()}
    if sf.labels:
        tab: dict = {}
        for (vname, word), label in sf.labels.items():
            tab.setdefault(vname, {})["*".join(word) if word else "1"] = label
        out["labels"] = tab
    if sf.initial_matrix is not None:
        out["initial_matrix"] = [[str(x) for x in row] for row in sf.initial_matrix]
    if sf.dictionary:
        out["dictionary"] = {y: format_word(w) for y, w in sf.dictionary.items()}
    return out


def save_system(sf: SystemFile, path) -> None:
    Path(path).write_text(json.dumps(dump_system(sf), indent=2) + "\n")


def flow_file(F: FlowSpec, registry: ConstantRegistry | None = None, **kw) -> SystemFile:
    reg = registry if registry is not None else ConstantRegistry(F.L)
    return SystemFile("flow", F, reg, tuple(F.variables), F.policy, **kw)


def data_path(name: str) -> Path:
    """Path of a bundled example system."""
    return Path(__file__).parent / "data" / name


__all__ = [
    "FREE", "SUPER", "LoadError", "SystemFile", "data_path", "dump_system", "flow_file",
    "load_system", "parse_system", "save_system",
]
