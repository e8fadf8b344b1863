import random
from fractions import Fraction

import numpy as np
import pytest

from superode import io
from superode.grassmann import EVEN, ODD, GrassmannElement, SuperVector
from superode.quadratic import (
    DomainError,
    LinearMap,
    PremiseFailure,
    QuadraticSystem,
    SingularMap,
    associativity_witness,
    automorphism_check,
    blowup_solution,
    circ,
    derivation_check,
    find_idempotents,
    homogenize,
    idempotent_check,
    power_associativity_identity,
    power_associativity_witness,
    exp_solution_check,
    random_vector,
)
from superode.series import taylor_coeffs

S1 = lambda c: GrassmannElement.scalar(c)  # noqa: E731


def scalar_vec(*vals):
    return SuperVector([S1(v) for v in vals])


def blowup_system():
    return QuadraticSystem.build(None, None, {(0, (0, 0)): 1}, (EVEN,))


def lienard():
    return io.load_system(io.data_path("lienard.json")).quadratic()


def test_from_flow_splits_parts():
    S = lienard()
    assert S.C.is_zero()
    assert S.T[0][0] == 1 and S.T[0][1]  # x' = x + gamma xi
    assert list(S.beta.coeffs) == [(1, (0, 0))]


def test_flow_round_trip():
    S = lienard()
    assert QuadraticSystem.from_flow(S.flow()) == S


def test_circ_is_symmetric_bilinear():
    rng = random.Random(0)
    S = homogenize(lienard())
    for _ in range(10):
        A, B, C = (random_vector(S, rng) for _ in range(3))
        assert circ(S, A, B) == circ(S, B, A)
        assert circ(S, A + B, C) == circ(S, A, C) + circ(S, B, C)
        assert circ(S, A, A) == S.Q(A)


def test_circ_example():
    S = QuadraticSystem.build(None, None, {(0, (0, 1)): 2, (1, (0, 0)): 1}, (EVEN, EVEN))
    # Q(x, y) = (2xy, x^2): (a, b) o (c, d) = (ad + bc, ac)
    assert circ(S, scalar_vec(1, 2), scalar_vec(3, 4)) == scalar_vec(1 * 4 + 2 * 3, 3)


def test_homogenize_reproduces_affine_flow():
    S = QuadraticSystem.build([1, 0], [[0, 2], [3, 0]], {(1, (0, 0)): -1}, (EVEN, EVEN))
    H = homogenize(S)
    assert H.u_index == 2 and H.C.is_zero()
    rng = random.Random(1)
    for _ in range(10):
        X = random_vector(S, rng)
        XH = SuperVector(list(X.entries) + [S1(1)], H.parities)
        assert H.E(XH) == SuperVector(list(S.E(X).entries) + [S1(0)], H.parities)


def test_homogenized_lienard_not_associative():
    H = homogenize(lienard())
    A, B, C = associativity_witness(H)
    assert circ(H, circ(H, A, B), C) != circ(H, A, circ(H, B, C))
    X = power_associativity_witness(H)
    assert X is not None
    assert not power_associativity_identity(H)


def test_one_dimensional_algebra_is_associative():
    S = blowup_system()
    assert associativity_witness(S, samples=20) is None
    assert power_associativity_witness(S, samples=20) is None
    assert power_associativity_identity(S)


def test_simple_system_is_power_associative():
    S = io.load_system(io.data_path("simple.json")).quadratic()
    assert power_associativity_witness(S) is None
    assert power_associativity_identity(S)


def test_idempotent_classes():
    # Q(x, y) = (x^2, xy + y^2)
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1, (1, (0, 1)): 1, (1, (1, 1)): 1}, (EVEN, EVEN))
    assert idempotent_check(S, scalar_vec(1, 0)).kind == "idempotent"
    c = idempotent_check(S, scalar_vec(2, 0))
    assert c.kind == "scaled" and c.scale == 2
    assert idempotent_check(S, scalar_vec(1, 1)).kind == "other"
    N = QuadraticSystem.build(None, None, {(1, (0, 0)): 1}, (EVEN, EVEN))
    assert idempotent_check(N, scalar_vec(0, 1)).kind == "nilpotent"
    with pytest.raises(ValueError):
        idempotent_check(S, scalar_vec(0, 0))


def test_blowup_solution_and_pole():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): -3}, (EVEN,))
    P = scalar_vec(1)
    assert blowup_solution(S, P, -3, Fraction(1, 3)) == scalar_vec(Fraction(1, 2))
    with pytest.raises(DomainError):
        blowup_solution(S, P, -3, Fraction(-1, 3))
    with pytest.raises(ValueError):
        blowup_solution(S, P, 2, 0)


def test_blowup_matches_taylor():
    S = blowup_system()
    sol = taylor_coeffs(S, scalar_vec(1), 8)
    assert all(c == scalar_vec(1) for c in sol.coeffs)  # 1/(1 - t)


def test_find_idempotents():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1, (1, (1, 1)): 2}, (EVEN, EVEN))
    found = sorted(tuple(np.round(x, 8)) for x in find_idempotents(S))
    assert found == [(0.0, 0.5), (1.0, 0.0), (1.0, 0.5)]


def test_find_idempotents_rejects_grassmann_coefficients():
    with pytest.raises(ValueError):
        find_idempotents(lienard())


def test_automorphism_checks():
    S = QuadraticSystem.build(None, None, {(0, (0, 1)): 1, (1, (0, 0)): 1}, (EVEN, EVEN))
    par = S.parities
    assert automorphism_check(S, LinearMap.identity(par))
    v = automorphism_check(S, LinearMap.identity(par, scale=2))
    assert not v and "basis pair" in v.detail
    with pytest.raises(SingularMap):
        automorphism_check(S, LinearMap.from_rows([[1, 1], [1, 1]], par))
    # (x, y) -> (-x, y): Q(-x, y) = (-xy, x^2) is the image of (xy, x^2)
    flip = LinearMap.from_rows([[-1, 0], [0, 1]], par)
    assert automorphism_check(S, flip)


def test_derivation_check_reports_pair():
    S = QuadraticSystem.build(None, None, {(0, (0, 0)): 1}, (EVEN, EVEN))
    assert derivation_check(S, LinearMap.from_rows([[0, 0], [0, 5]], S.parities))
    v = derivation_check(S, LinearMap.from_rows([[1, 0], [0, 0]], S.parities))
    assert not v and v.data["pair"] == (0, 0)


def lienard_frozen():
    """x' = 0, xi' = alpha x^2 over two generators (alpha = b1)."""
    L = 2
    alpha = GrassmannElement.generator(1, L)
    return QuadraticSystem.build(None, None, {(1, (0, 0)): alpha}, (EVEN, ODD), L), alpha


def test_exp_solution_positive():
    S, alpha = lienard_frozen()
    L = S.L
    x0 = GrassmannElement.scalar(2, L)
    xi0 = GrassmannElement.generator(2, L)
    G = LinearMap([[GrassmannElement.zero(L)] * 2, [alpha * x0, GrassmannElement.zero(L)]], S.parities)
    P = SuperVector([x0, xi0], S.parities)
    rep = exp_solution_check(S, G, P)
    assert rep.holds and rep.series_agree and rep.mismatch_order is None
    assert rep.exp_coeffs[1] == S.E(P)


def test_exp_solution_negative_conclusion():
    S, alpha = lienard_frozen()
    L = S.L
    G = LinearMap([[GrassmannElement.zero(L)] * 2, [alpha.scale(3), GrassmannElement.zero(L)]], S.parities)
    P = SuperVector([GrassmannElement.scalar(2, L), GrassmannElement.zero(L)], S.parities)
    rep = exp_solution_check(S, G, P)
    assert not rep.holds and not rep.series_agree and rep.mismatch_order == 1


def test_exp_solution_premise_failure():
    S, _ = lienard_frozen()
    G = LinearMap.identity(S.parities, S.L)
    with pytest.raises(PremiseFailure):
        exp_solution_check(S, G, SuperVector([GrassmannElement.scalar(1, 2), GrassmannElement.zero(2)], S.parities))


def test_parity_validation():
    with pytest.raises(ValueError):
        QuadraticSystem.build(None, None, {(1, (0, 0)): 1}, (EVEN, ODD))  # odd slot fed by an even product


def test_json_round_trip():
    S = homogenize(lienard())
    assert QuadraticSystem.from_json(S.to_json()) == S
