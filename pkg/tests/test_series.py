from fractions import Fraction

import numpy as np
import pytest

from superode import io
from superode.dynamics import expand_to_real, rk4_integrate
from superode.grassmann import EVEN, ODD, GrassmannElement, SuperVector
from superode.quadratic import QuadraticSystem
from superode.series import (
    SeriesSolution,
    closed_form_truncated,
    radius_estimate,
    series_eval,
    series_eval_body,
    taylor_coeffs,
    verify_series,
)


def vec(*vals, L=0, parities=None):
    return SuperVector([v if isinstance(v, GrassmannElement) else GrassmannElement.scalar(v, L) for v in vals], parities)


def test_blowup_coefficients_and_eval():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1}, (EVEN,))
    sol = taylor_coeffs(S, vec(1), 10)
    assert not sol.exact_truncation
    assert series_eval(sol, Fraction(1, 2)) == vec(sum(Fraction(1, 2 ** k) for k in range(11)))
    assert sol.derivatives()[4] == vec(24)
    assert radius_estimate(sol) == pytest.approx(1.0)
    assert verify_series(S, sol)


def test_series_matches_rk4_on_real_lienard():
    sf = io.load_system(io.data_path("lienard_real.json"))
    S = sf.quadratic()
    sol = taylor_coeffs(S, sf.initial_vector(), 30)
    tr = rk4_integrate(expand_to_real(sf.flow()), [1.0, 0.0], 0.2, 1e-4)
    assert np.allclose(series_eval_body(sol, 0.2), tr.states[-1], atol=1e-10)


def test_affine_terms_enter_first_coefficient():
    S = QuadraticSystem.build([3], [[2]], {(0, (0, 0)): 1}, (EVEN,))
    sol = taylor_coeffs(S, vec(1), 2)
    # c1 = 3 + 2 + 1, 2 c2 = 2 c1 + 2 c0 c1
    assert sol.coeffs[1] == vec(6)
    assert sol.coeffs[2] == vec(Fraction(2 * 6 + 2 * 6, 2))


def test_nilpotent_data_truncates():
    # x' = gamma xi, xi' = 0 with odd gamma
    L = 2
    g = GrassmannElement.generator(1, L)
    S = QuadraticSystem.build(None, [[0, g], [0, 0]], {}, (EVEN, ODD), L)
    X0 = vec(GrassmannElement.scalar(1, L), GrassmannElement.generator(2, L), L=L, parities=(EVEN, ODD))
    sol = closed_form_truncated(S, X0)
    assert sol.exact_truncation and len(sol.coeffs) == 2
    assert sol.coeffs[1][0] == g * GrassmannElement.generator(2, L)
    assert verify_series(S, sol)


def test_nonterminating_reports_budget():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1}, (EVEN,))
    sol = closed_form_truncated(S, vec(1), budget=7)
    assert not sol.exact_truncation and len(sol.coeffs) == 8


def test_verify_detects_corruption():
    sf = io.load_system(io.data_path("simple.json"))
    S = sf.quadratic()
    sol = closed_form_truncated(S, sf.initial_vector())
    bad = list(sol.coeffs)
    bad[2] = bad[2].scale(2)
    v = verify_series(S, SeriesSolution(bad, sol.order, True, S))
    assert not v and "component 1" in v.detail


def test_to_json_shapes():
    sf = io.load_system(io.data_path("simple.json"))
    sol = closed_form_truncated(sf.quadratic(), sf.initial_vector())
    data = sol.to_json(sf.names)
    assert data["exact_truncation"] is True
    assert len(data["coeffs"]) == 3 and len(data["coeffs"][0]) == 3


def test_negative_order_rejected():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1}, (EVEN,))
    with pytest.raises(ValueError):
        taylor_coeffs(S, vec(1), -1)


def test_pure_quadratic_low_order_pattern():
    # X' = X o X with a non-associative product; powers X^l = X o X^(l-1)
    from superode.quadratic import circ

    S = QuadraticSystem.build(None, None, {(0, (0, 1)): 2, (1, (0, 0)): 1, (1, (1, 1)): -1}, (EVEN, EVEN))
    X = vec(Fraction(1, 2), 3)
    P = [None, X]
    for _ in range(3):
        P.append(circ(S, X, P[-1]))
    c = taylor_coeffs(S, X, 3).coeffs
    assert c[1] == P[2] and c[2] == P[3]
    assert c[3] == (P[4].scale(2) + circ(S, P[2], P[2])).scale(Fraction(1, 3))


def test_idempotent_series_tail():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1}, (EVEN,))
    for K in (20, 30):
        sol = taylor_coeffs(S, vec(1), K)
        val = series_eval(sol, Fraction(1, 2))[0].body()
        assert abs(val - 2) / 2 <= Fraction(1, 2 ** K)


def test_full_lienard_does_not_truncate():
    sf = io.load_system(io.data_path("lienard.json"))
    X0 = vec(GrassmannElement.scalar(1, sf.L), GrassmannElement.zero(sf.L), L=sf.L, parities=(EVEN, ODD))
    sol = closed_form_truncated(sf.quadratic(), X0, budget=10)
    assert not sol.exact_truncation and all(c[0] for c in sol.coeffs)
