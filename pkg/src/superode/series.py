"""Taylor solutions of ``X' = C + T X + beta(X, X)`` with exact coefficients."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from ._common import Verdict
from .freepoly import SUPER, NCPolynomial, Variable
from .grassmann import EVEN, GrassmannElement, SuperVector
from .nary import mu_eval
from .quadratic import QuadraticSystem


@dataclass
class SeriesSolution:
    """Raw Taylor coefficients: ``X(t) = sum_k coeffs[k] t^k``.

    ``exact_truncation`` is set once the tail is proven to vanish; ``coeffs``
    then holds every nonzero coefficient.
    """

    coeffs: list
    order: int
    exact_truncation: bool = False
    system: QuadraticSystem | None = field(default=None, repr=False, compare=False)

    def derivatives(self) -> list:
        """``X^(k)(0) = k! coeffs[k]``."""
        return [c.scale(factorial(k)) for k, c in enumerate(self.coeffs)]

    def to_json(self, names=None) -> dict:
        def enc(e):
            if isinstance(e, GrassmannElement):
                return e.to_json()
            return e.format(names)

        return {
            "order": self.order,
            "exact_truncation": self.exact_truncation,
            "coeffs": [[enc(e) for e in c] for c in self.coeffs],
            "derivatives": [[enc(e) for e in c] for c in self.derivatives()],
        }


def _zero_vec(like: SuperVector) -> SuperVector:
    return like - like


def _next_coeff(S: QuadraticSystem, cs: list, k: int) -> SuperVector:
    # (k+1) c_{k+1} = [k == 0] C + T c_k + sum_j beta(c_j, c_{k-j})
    acc = S.TX(cs[k])
    for j in range(k + 1):
        if cs[j].is_zero() or cs[k - j].is_zero():
            continue
        acc = acc + mu_eval(S.beta, [cs[j], cs[k - j]])
    if k == 0:
        from .quadratic import _embed

        acc = acc + _embed(S.C, cs[0])
    return acc.scale(Fraction(1, k + 1))


def _truncation_point(cs: list):
    """Smallest ``M >= 1`` with ``c_M = ... = c_{2M-1} = 0`` among the computed coefficients.

    Then every later coefficient vanishes too: each term of the recursion for
    ``c_{k+1}``, ``k >= 2M - 1``, contains a factor ``c_m`` with ``M <= m <= k``.
    """
    zero = [c.is_zero() for c in cs]
    K = len(cs) - 1
    for M in range(1, K + 1):
        if 2 * M - 1 > K:
            break
        if all(zero[M:2 * M]):
            return M
    return None


def taylor_coeffs(S: QuadraticSystem, X0: SuperVector, K: int) -> SeriesSolution:
    if K < 0:
        raise ValueError("order must be non-negative")
    if len(X0) != S.n:
        raise ValueError("initial value has the wrong dimension")
    cs = [X0]
    for k in range(K):
        cs.append(_next_coeff(S, cs, k))
    return SeriesSolution(cs, K, _truncation_point(cs) is not None, S)


def closed_form_truncated(S: QuadraticSystem, X0: SuperVector, budget: int = 24) -> SeriesSolution:
    """Run the recursion until the series provably terminates.

    Returns the polynomial part with ``exact_truncation=True``, or the
    ``budget``-order partial series with the flag false.
    """
    cs = [X0]
    for k in range(budget):
        cs.append(_next_coeff(S, cs, k))
        M = _truncation_point(cs)
        if M is not None:
            keep = M
            while keep > 1 and cs[keep - 1].is_zero():
                keep -= 1
            return SeriesSolution(cs[:keep], len(cs) - 1, True, S)
    return SeriesSolution(cs, budget, False, S)


def series_eval(sol: SeriesSolution, t) -> SuperVector:
    """Horner evaluation at a rational (floats are converted exactly)."""
    t = Fraction(t)
    acc = sol.coeffs[-1]
    for c in reversed(sol.coeffs[:-1]):
        acc = acc.scale(t) + c
    return acc


def series_eval_body(sol: SeriesSolution, t: float):
    """Float evaluation of the body (real part) of every component."""
    import numpy as np

    vals = [[float(e.body()) for e in c] for c in sol.coeffs]
    acc = np.zeros(len(vals[0]))
    for row in reversed(vals):
        acc = acc * t + np.array(row)
    return acc


def verify_series(S: QuadraticSystem, sol: SeriesSolution) -> Verdict:
    """Substitute the polynomial in ``t`` into the flow.

    With exact truncation the check is a full identity; otherwise terms of
    ``t``-degree below the order are compared.
    """
    L = S.L
    name = "t"
    while any(isinstance(e, NCPolynomial) and any(v.name == name for v in e.variables()) for c in sol.coeffs for e in c):
        name = "_" + name
    tv = Variable(name, EVEN)
    tp = NCPolynomial.var(tv, SUPER, L)

    def lift(e):
        if isinstance(e, NCPolynomial):
            return e
        return NCPolynomial.const(e, SUPER, L)

    powers = [NCPolynomial.const(1, SUPER, L)]
    for _ in sol.coeffs:
        powers.append(powers[-1] * tp)
    X = sol.coeffs[0].map(lift)
    dX = X - X
    for k, c in enumerate(sol.coeffs[1:], start=1):
        X = X + c.map(lambda e, k=k: lift(e) * powers[k])
        dX = dX + c.map(lambda e, k=k: (lift(e) * powers[k - 1]).scale(k))
    resid = dX - S.E(X)

    def tdeg(w):
        return sum(1 for v in w if v == tv)

    limit = None if sol.exact_truncation else len(sol.coeffs) - 1
    for i, e in enumerate(resid):
        for w, c in e.terms.items():
            if limit is None or tdeg(w) < limit:
                return Verdict(False, f"component {i + 1}: residual term {c} at t^{tdeg(w)}")
    return Verdict(True, "series satisfies the flow" + ("" if limit is None else f" through t^{limit - 1}"))


def radius_estimate(sol: SeriesSolution):
    """Ratio-test estimate of the convergence radius from the last nonzero coefficients.

    Informational only; ``None`` when there are too few nonzero terms.
    """
    norms = []
    for c in sol.coeffs:
        m = 0.0
        for e in c:
            if isinstance(e, GrassmannElement):
                m = max([m] + [abs(float(v)) for v in e.terms.values()])
            else:
                return None
        norms.append(m)
    pairs = [(norms[k], norms[k + 1]) for k in range(len(norms) - 1) if norms[k] and norms[k + 1]]
    if len(pairs) < 2:
        return None
    a, b = pairs[-1]
    return a / b
