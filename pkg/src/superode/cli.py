"""Command-line front end: ``superode <subcommand> FILE [options]``.

Exit status: 0 on success, 1 on usage or input errors, 2 when a
mathematical verification fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .freepoly import NCPolynomial, format_word
from .grassmann import GrassmannElement
from .nary import ReductionResult, StructureTensor, reduce_to_quadratic, verify_reduction

OK, USAGE, FAILED = 0, 1, 2


class UsageError(Exception):
    pass


def _write(args, name: str, payload) -> None:
    if not args.out:
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    if isinstance(payload, (dict, list)):
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        path.write_text(str(payload))


def _fmt(e, names) -> str:
    if isinstance(e, (GrassmannElement, NCPolynomial)):
        return e.format(names)
    return str(e)


def _load(path) -> io.SystemFile:
    p = Path(path)
    if not p.exists() and io.data_path(p.name).exists():
        p = io.data_path(p.name)
    return io.load_system(p)


# -- subcommands ---------------------------------------------------------------------

def cmd_reduce(args) -> int:
    sf = _load(args.file)
    F = sf.flow()
    R = reduce_to_quadratic(F, args.max_new)
    v = verify_reduction(F, R)
    print(R.format())
    print(f"verify_reduction: {'true' if v else 'false'}" + ("" if v else f" ({v.detail})"))
    out = io.flow_file(R.reduced, sf.registry, name=(sf.name + "-reduced") if sf.name else "",
                       dictionary={y.name: w for y, w in R.dictionary.items()})
    _write(args, "reduced.json", io.dump_system(out))
    _write(args, "report.json", {
        "verified": bool(v),
        "detail": v.detail,
        "new_variables": len(R.dictionary),
        "dictionary": {y.name: format_word(w) for y, w in R.dictionary.items()},
    })
    return OK if v else FAILED


def cmd_verify(args) -> int:
    from .symmetry import verify_commuting

    orig = _load(args.original)
    cand = _load(args.candidate)
    F = orig.flow()
    if cand.dictionary:
        G = cand.flow()
        by_name = {v.name: v for v in G.variables}
        R = ReductionResult(G, {by_name[y]: w for y, w in cand.dictionary.items()})
        v = verify_reduction(F, R)
        what = "verify_reduction"
    else:
        G = cand.flow()
        by_name = {v.name: v for v in G.variables}
        missing = [x.name for x in F.variables if x.name not in by_name]
        if missing:
            raise UsageError(f"candidate flow lacks variables {missing}")
        v = verify_commuting(F, {x: G.rhs[by_name[x.name]] for x in F.variables})
        what = "verify_commuting"
    print(f"{what}: {'true' if v else 'false'}" + ("" if v else f" ({v.detail})"))
    _write(args, "verify.json", {"check": what, "ok": bool(v), "detail": v.detail})
    return OK if v else FAILED


def cmd_homogenize(args) -> int:
    from .quadratic import homogenize

    sf = _load(args.file)
    S = sf.quadratic()
    taken = {v.name for v in sf.variables}
    name = args.name
    while name in taken:
        name += "_"
    H = homogenize(S, name)
    from .freepoly import Variable

    variables = tuple(sf.variables) + (Variable(name),)
    print(H.flow(variables).format(sf.names))
    out = io.SystemFile("quadratic", H, sf.registry, variables, sf.policy,
                        name=(sf.name + "-homogenized") if sf.name else "")
    _write(args, "homogenized.json", io.dump_system(out))
    return OK


def cmd_analyze(args) -> int:
    from .quadratic import (
        associativity_witness,
        find_idempotents,
        homogenize,
        power_associativity_identity,
        power_associativity_witness,
    )

    sf = _load(args.file)
    S = sf.quadratic()
    if args.homogenize:
        S = homogenize(S)
    names = sf.names
    assoc = associativity_witness(S, args.samples, args.seed)
    power = power_associativity_witness(S, args.samples, args.seed)
    ident = power_associativity_identity(S)
    report = {
        "dimension": S.n,
        "associative": assoc is None,
        "associativity_witness": None if assoc is None else [[_fmt(e, names) for e in V] for V in assoc],
        "power_associative": power is None and bool(ident),
        "power_associativity_witness": None if power is None else [_fmt(e, names) for e in power],
        "power_identity": ident.detail,
    }
    real = all(c.is_scalar() for c in S.beta.coeffs.values())
    if real and S.n <= 4:
        found = find_idempotents(S)
        report["idempotents"] = [[float(v) for v in x] for x in found]
    else:
        report["idempotents"] = "skipped (needs real coefficients and dimension <= 4)"
    print(f"associative: {'yes' if assoc is None else 'no'}")
    if assoc is not None:
        print("  witness (A, B, C): " + "; ".join("(" + ", ".join(_fmt(e, names) for e in V) + ")" for V in assoc))
    print(f"power-associative: {'yes' if report['power_associative'] else 'no'}")
    if power is not None:
        print("  witness X: (" + ", ".join(_fmt(e, names) for e in power) + ")")
    if isinstance(report["idempotents"], list):
        print(f"idempotents found: {len(report['idempotents'])}")
        for x in report["idempotents"]:
            print("  " + ", ".join(f"{v:.12g}" for v in x))
    else:
        print("idempotents: " + report["idempotents"])
    _write(args, "analyze.json", report)
    return OK


def _series_text(sol, sf) -> list:
    names = sf.names
    lines = []
    for i, v in enumerate(sf.variables):
        text = ""
        for k, c in enumerate(sol.coeffs):
            e = c[i]
            if not e:
                continue
            s = _fmt(e, names)
            sign = "+"
            if k and (" + " in s or " - " in s[1:]):
                s = f"({s})"
            elif s.startswith("-"):
                sign, s = "-", s[1:]
            if k:
                s = ("" if s == "1" else s + "*") + "t" + (f"^{k}" if k > 1 else "")
            text += f" {sign} {s}" if text else (s if sign == "+" else "-" + s)
        lines.append(f"{v.name}(t) = " + (text or "0"))
    return lines


def cmd_series(args) -> int:
    from .series import closed_form_truncated, radius_estimate, series_eval_body, verify_series

    sf = _load(args.file)
    S = sf.quadratic()
    X0 = sf.initial_vector()
    sol = closed_form_truncated(S, X0, args.order)
    v = verify_series(S, sol)
    names = sf.names
    for line in _series_text(sol, sf):
        print(line + (" + ..." if not sol.exact_truncation else ""))
    print(f"exact_truncation: {'true' if sol.exact_truncation else 'false'}")
    print(f"verified: {'true' if v else 'false'}")
    payload = {
        "order": sol.order,
        "exact_truncation": sol.exact_truncation,
        "variables": [x.name for x in sf.variables],
        "coeffs": [[_fmt(e, names) for e in c] for c in sol.coeffs],
        "derivatives": [[_fmt(e, names) for e in c] for c in sol.derivatives()],
        "verified": bool(v),
    }
    if not sol.exact_truncation:
        payload["radius_estimate"] = radius_estimate(sol)
    _write(args, "series.json", payload)
    if args.csv or (args.out and args.samples):
        if any(isinstance(e, NCPolynomial) for e in X0):
            raise UsageError("CSV sampling needs numeric initial values")
        ts = np.linspace(0.0, args.t_end, max(2, args.samples or 11))
        rows = ["t," + ",".join(f"{x.name}_0" for x in sf.variables)]
        for t in ts:
            vals = series_eval_body(sol, t)
            rows.append(",".join([repr(float(t))] + [repr(float(x)) for x in vals]))
        text = "\n".join(rows) + "\n"
        if args.csv:
            Path(args.csv).write_text(text)
        _write(args, "series.csv", text)
    return OK if v else FAILED


def cmd_symmetry(args) -> int:
    from .symmetry import solve_commuting, verify_commuting

    sf = _load(args.file)
    F = sf.flow()
    sol = solve_commuting(F, args.degree, args.surplus, sf.labels)
    names = dict(sf.names)
    members_ok = all(verify_commuting(sol.template.flow, G) for G in sol.members())
    rep = sol.report(names)
    rep["members_verified"] = members_ok
    print(f"unknowns: {rep['unknowns']} ({rep['rational_unknowns']} rational)")
    print(f"equations: {rep['equations']} ({rep['rational_equations']} rational)")
    print(f"rank: {rep['rank']}, solution dimension: {rep['dimension']}")
    if sol.parametrized or not sol.result.nullspace:
        print("free parameters: " + (", ".join(rep["free_parameters"]) or "none"))
        print("relations:")
        for r in rep["relations"]:
            print("  " + r)
        print(f"relations verified: {'true' if sol.relations_verified else 'false'}")
    else:
        print("no parametrization by whole unknowns; free rational components:")
        print("  " + ", ".join(rep["free_components"]))
    print(f"members verified: {'true' if members_ok else 'false'}")
    _write(args, "symmetry.json", rep)
    return OK if members_ok else FAILED


def _overrides(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise UsageError(f"--set expects name=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = float(Fraction(v.strip()))
    return out


def cmd_simulate(args) -> int:
    from .dynamics import euler_iterate, expand_to_real, real_initial, rk4_integrate

    sf = _load(args.file)
    F = sf.flow()
    R = expand_to_real(F, args.matrix_size)
    x0 = np.zeros(R.n)
    if args.matrix_size is None:
        vals = {k: v for k, v in sf.initial.items() if isinstance(v, GrassmannElement)}
        x0 = real_initial(R, vals)
    for k, v in _overrides(args.set).items():
        if k not in R.coords:
            raise UsageError(f"unknown coordinate {k!r}; coordinates are {', '.join(R.coords)}")
        x0[R.position(k)] = v
    if args.scheme == "rk4":
        traj = rk4_integrate(R, x0, args.t_end, args.step, args.record_every)
    else:
        traj = euler_iterate(R, x0, float(Fraction(args.h)), args.steps)
    print(f"{len(R.coords)} coordinates: {', '.join(R.coords)}")
    clock = "t" if args.scheme == "rk4" else "tau"  # difference trajectories are indexed by step
    print(f"final {clock} = {traj.times[-1]:.12g}")
    for name, val in zip(R.coords, traj.states[-1]):
        print(f"  {name} = {val:.12g}")
    if args.csv:
        traj.to_csv(args.csv)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        traj.to_csv(Path(args.out) / "trajectory.csv")
    return OK


def cmd_riccati(args) -> int:
    from .dynamics import riccati_difference, riccati_solve, riccati_system, rk4_integrate

    sf = _load(args.file)
    if sf.kind != "riccati":
        raise UsageError("riccati needs a file of kind 'riccati'")
    spec = sf.body
    X0 = sf.initial_matrix or [[Fraction(0)] * spec.q for _ in range(spec.p)]
    X_lin = riccati_solve(spec, X0, args.t_end)
    x0 = np.array([[float(v) for v in row] for row in X0]).ravel()
    traj = rk4_integrate(riccati_system(spec), x0, args.t_end, args.step)
    err = float(np.max(np.abs(traj.states[-1] - X_lin.ravel())))
    disc = riccati_difference(spec, X0, Fraction(args.h), args.steps)
    print(f"X(t={args.t_end:g}) from u v^-1:")
    for row in X_lin:
        print("  " + "  ".join(f"{v:.12g}" for v in row))
    print(f"max |linearized - rk4| = {err:.3e}")
    print(f"difference identity holds at all {args.steps} steps: {'true' if disc.all_hold else 'false'}")
    _write(args, "riccati.json", {
        "t_end": args.t_end,
        "X_linearized": X_lin.tolist(),
        "X_rk4": traj.states[-1].reshape(spec.p, spec.q).tolist(),
        "max_abs_difference": err,
        "difference_h": str(Fraction(args.h)),
        "difference_steps": args.steps,
        "difference_identity": disc.identity_holds,
        "difference_final": [[str(v) for v in row] for row in disc.xs[-1]],
    })
    ok = disc.all_hold and err <= args.tol
    return OK if ok else FAILED


def cmd_difference(args) -> int:
    from .dynamics import collinearity, difference_iterate

    sf = _load(args.file)
    if sf.kind == "tensor":
        T = sf.body
    else:
        S = sf.quadratic()
        if not S.C.is_zero() or any(t for row in S.T for t in row):
            raise UsageError("difference iteration needs a homogeneous system")
        T = S.beta
    if not isinstance(T, StructureTensor):
        raise UsageError("no structure tensor in file")
    X0 = sf.initial_vector()
    traj = difference_iterate(T, X0, Fraction(args.h), args.steps)
    names = sf.names
    col = collinearity(traj)
    for k, X in enumerate(traj.states):
        print(f"tau={k}: (" + ", ".join(_fmt(e, names) for e in X) + ")")
    print(f"equilibrium start: {'true' if traj.equilibrium else 'false'}")
    print(f"idempotent start: {'true' if traj.idempotent else 'false'}")
    if col is not None:
        print("collinear with X(0); scale factors: " + ", ".join(str(s) for s in col))
    _write(args, "difference.json", {
        "h": str(traj.h),
        "steps": traj.steps,
        "equilibrium": traj.equilibrium,
        "idempotent": traj.idempotent,
        "states": [[_fmt(e, names) for e in X] for X in traj.states],
        "scale_factors": None if col is None else [str(s) for s in col],
    })
    return OK


# -- argument parsing ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superode", description=__doc__.splitlines()[0])
    p.add_argument("--out", help="directory for JSON/CSV artifacts")
    p.add_argument("--seed", type=int, default=0, help="seed for random sampling (default 0)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", default=argparse.SUPPRESS, help="directory for JSON/CSV artifacts")
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for random sampling")
        return sp

    sp = add("reduce", cmd_reduce, "rewrite a homogeneous flow as a quadratic one")
    sp.add_argument("file")
    sp.add_argument("--max-new", type=int, default=None, help="cap on new variables")

    sp = add("verify", cmd_verify, "check a reduction (file with a dictionary) or a commuting flow")
    sp.add_argument("original")
    sp.add_argument("candidate")

    sp = add("homogenize", cmd_homogenize, "adjoin a constant variable to make the system homogeneous")
    sp.add_argument("file")
    sp.add_argument("--name", default="u", help="name of the new variable")

    sp = add("analyze", cmd_analyze, "associativity, power-associativity and idempotents")
    sp.add_argument("file")
    sp.add_argument("--homogenize", action="store_true", help="analyze the homogenized system")
    sp.add_argument("--samples", type=int, default=200, help="random samples after the exhaustive probes")

    sp = add("series", cmd_series, "Taylor solution with exact coefficients")
    sp.add_argument("file")
    sp.add_argument("--order", type=int, default=6)
    sp.add_argument("--csv", help="write sampled body values to this CSV file")
    sp.add_argument("--t-end", type=float, default=0.1)
    sp.add_argument("--samples", type=int, default=0)

    sp = add("symmetry", cmd_symmetry, "solve for commuting flows of bounded degree")
    sp.add_argument("file")
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--surplus", type=int, default=None, help="extra Grassmann generators for the unknowns")

    sp = add("simulate", cmd_simulate, "integrate the real-coordinate expansion")
    sp.add_argument("file")
    sp.add_argument("--scheme", choices=("rk4", "difference"), default="rk4")
    sp.add_argument("--t-end", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--record-every", type=int, default=1)
    sp.add_argument("--h", default="1/100", help="difference step (rational)")
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--matrix-size", type=int, default=None, help="treat free-policy variables as m x m matrices")
    sp.add_argument("--set", action="append", metavar="COORD=VALUE", help="override an initial coordinate")
    sp.add_argument("--csv", help="write the trajectory to this CSV file")

    sp = add("riccati", cmd_riccati, "linearized and discrete matrix Riccati solutions")
    sp.add_argument("file")
    sp.add_argument("--t-end", type=float, default=0.5)
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--h", default="1/10")
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = add("difference", cmd_difference, "exact difference iteration X + h mu(X, ..., X)")
    sp.add_argument("file")
    sp.add_argument("--h", default="1")
    sp.add_argument("--steps", type=int, default=3)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, io.LoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (ValueError, KeyError, ZeroDivisionError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
