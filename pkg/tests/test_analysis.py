import numpy as np
import pytest
from hypothesis import given, strategies as st

from minimax_egm import (
    BoxRegion,
    DomainError,
    InnerProxConfig,
    Point,
    StepTooLarge,
    comonotonicity_check,
    envelope_field,
    envelope_monotonicity_check,
    interaction_dominance_alpha,
    interaction_matrices,
    make_quadratic,
    make_quartic,
    prox,
    quadratic_alpha,
    quadratic_alpha_threshold,
    quadratic_converges,
    quadratic_theta_sigma,
    saddle_envelope_value,
    saddle_field,
    step_size_lower_bounds,
    theorem_feasibility,
)
from minimax_egm.analysis import prox_min_term

INNER = InnerProxConfig(inner_epsilon=1e-12)


def test_interaction_matrices_quartic_origin(quartic):
    Mx, My = interaction_matrices(quartic, Point([0.0], [0.0]), 0.005)
    # -20 + 100^2 / (200 - 20)
    assert Mx[0, 0] == pytest.approx(-20 + 1e4 / 180)
    assert My[0, 0] == pytest.approx(-20 + 1e4 / 180)


def test_interaction_matrices_step_too_large():
    with pytest.raises(StepTooLarge) as info:
        interaction_matrices(make_quadratic(1.0, 10.0), Point([0.0], [0.0]), 1.0)
    assert info.value.block == "y"
    with pytest.raises(StepTooLarge):
        interaction_matrices(make_quartic(), Point([0.0], [0.0]), 0.06)


@pytest.mark.parametrize("rho,A,s,n", [(0.1, 10.0, 0.02, 1), (1.0, 10.0, 0.05, 1), (0.5, 5.0, 0.1, 3), (1.0, 0.1, 0.01, 1)])
def test_dominance_matches_closed_form(rho, A, s, n):
    p = make_quadratic(rho, A, n)
    rep = interaction_dominance_alpha(p, BoxRegion.cube(-1.0, 1.0, 2 * n), s)
    assert rep.alpha == pytest.approx(quadratic_alpha(s, rho, A), rel=1e-12, abs=1e-14)


def test_quadratic_closed_forms():
    assert quadratic_alpha(0.05, 1.0, 10.0) == pytest.approx(-1 + 5 / 0.95)
    assert quadratic_alpha(0.5, 0.0, 1.0) == 0.5
    with pytest.raises(DomainError):
        quadratic_alpha(1.0, 1.0, 10.0)
    assert quadratic_alpha_threshold(1.0) == pytest.approx(2 / 98)
    assert quadratic_alpha_threshold(0.5) == pytest.approx(0.375 / 99.5)
    t, g = quadratic_theta_sigma(0.05, 0.5, 1.0, 10.0)
    assert t == pytest.approx(0.90125)
    assert g == pytest.approx(0.275)
    assert quadratic_converges(0.05, 0.5, 1.0, 10.0)
    assert not quadratic_converges(1e-3, 1.0, 0.2, 10.0)


def test_feasibility_bilinear_example():
    rep = theorem_feasibility(s=0.5, lam=0.2, alpha=0.5, rho=0.0, beta=1.0)
    assert rep.min_term == 1.0
    assert rep.lambda_upper == pytest.approx(0.275)
    assert rep.c_predicted == pytest.approx(0.985)
    assert rep.lhs_condition == pytest.approx(2.2)
    assert rep.feasible


def test_feasibility_rejections():
    assert not theorem_feasibility(0.5, 0.3, 0.5, 0.0, 1.0).feasible
    assert not theorem_feasibility(0.5, 0.2, -0.1, 0.0, 1.0).feasible
    assert not theorem_feasibility(0.5, 0.2, 0.5, 2.0, 1.0).feasible
    # quartic, box-certified constants: the step condition fails
    assert not theorem_feasibility(0.005, 0.01, 6.88, 20.0, 221.6).feasible


def test_prox_min_term():
    assert prox_min_term(0.5, 0.0) == 1.0
    assert prox_min_term(0.005, 20.0) == pytest.approx(min(1.0, (10 - 1) ** 2))
    assert prox_min_term(0.04, 20.0) == pytest.approx(0.25**2)


def test_feasibility_to_dict_keys():
    d = theorem_feasibility(0.5, 0.2, 0.5, 0.0, 1.0).to_dict()
    assert {"s", "lambda", "alpha", "rho", "beta", "c_predicted", "feasible"} <= d.keys()


@given(st.floats(0.01, 0.5), st.floats(0.01, 0.2), st.floats(0.0, 0.5))
def test_contraction_monotone_in_alpha_and_beta(s, lam, rho):
    alphas = np.linspace(0.1, 5.0, 5)
    betas = np.linspace(0.1, 5.0, 5)
    c = np.array([[theorem_feasibility(s, lam, a, rho, b).c_predicted for b in betas] for a in alphas])
    assert np.all(np.diff(c, axis=0) <= 1e-15)
    assert np.all(np.diff(c, axis=1) >= -1e-15)


def test_step_size_lower_bounds():
    assert step_size_lower_bounds(0.0, 1.0, 1.0, 1.0, 1.0) == (0.0, 0.0)
    bid, bbeta = step_size_lower_bounds(1.0, 10.0, 2.0, 1.0, 5.0)
    assert bid == pytest.approx(1 / 3)
    assert bbeta == np.inf
    _, bbeta = step_size_lower_bounds(1.0, 1.0, 2.0, 2.0, 5.0)
    assert bbeta == pytest.approx(1 / 127)
    assert step_size_lower_bounds(1.0, 1.0, 10.0, 1.0, 5.0)[0] == np.inf


def test_comonotonicity_bilinear(bilinear):
    rep = comonotonicity_check(bilinear, 0.5, 200, BoxRegion.cube(-1.0, 1.0, 2))
    assert rep.passed and rep.min_slack >= 0


def test_comonotonicity_fails_without_dominance():
    rep = comonotonicity_check(make_quadratic(1.0, 0.1), 0.01, 1000, BoxRegion.cube(-1.0, 1.0, 2))
    assert not rep.passed and rep.min_slack < 0


def test_comonotonicity_is_seeded(quartic):
    box = BoxRegion.cube(-4.0, 4.0, 2)
    a = comonotonicity_check(quartic, 0.005, 100, box, seed=3)
    b = comonotonicity_check(quartic, 0.005, 100, box, seed=3)
    assert a == b


def test_comonotonicity_requires_region(bilinear):
    with pytest.raises(ValueError):
        comonotonicity_check(bilinear, 0.5)


def test_envelope_value_bilinear(bilinear):
    # prox(1, 0) = (0.5, 0.5) at s = 1: 0.25 + (0.25 - 0.25) / 2
    assert saddle_envelope_value(bilinear, Point([1.0], [0.0]), 1.0) == pytest.approx(0.25)


def test_envelope_field_quadratic_is_linear():
    p = make_quadratic(0.5, 4.0, 2)
    s = 0.2
    M = (np.eye(4) - np.linalg.inv(np.eye(4) + s * p.field_matrix())) / s
    z = np.array([0.1, -0.4, 1.3, 0.7])
    np.testing.assert_allclose(envelope_field(p, Point.from_vector(z, 2), s), M @ z, rtol=1e-12)


def test_envelope_field_equals_field_at_prox(quartic):
    z = Point([2.0], [-1.5])
    s = 0.01
    u = prox(quartic, z, s, INNER)
    np.testing.assert_allclose(envelope_field(quartic, z, s, INNER), saddle_field(quartic, u), atol=1e-8)


def test_envelope_approaches_objective(quartic):
    z = Point([1.0], [2.0])
    L = quartic.value(z.x, z.y)
    gaps = [abs(saddle_envelope_value(quartic, z, s, INNER) - L) for s in (0.04, 0.02, 0.01)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_envelope_monotone_bilinear(bilinear):
    rep = envelope_monotonicity_check(bilinear, 0.5, 200, BoxRegion.cube(-1.0, 1.0, 2))
    assert rep.passed


def test_envelope_not_monotone_without_dominance():
    rep = envelope_monotonicity_check(make_quadratic(1.0, 0.1), 0.01, 200, BoxRegion.cube(-1.0, 1.0, 2))
    assert not rep.passed
