import pickle

import numpy as np
import pytest

from minimax_egm import BoxRegion, Point, curvature_bounds, make_quadratic, make_quartic, saddle_field
from minimax_egm.problems import hessian_summary, point_in, region_points


def test_quadratic_field_matrix_structure():
    H = make_quadratic(0.3, 2.0, 2).field_matrix()
    expected = np.array([
        [-0.3, 0, 2, 0],
        [0, -0.3, 0, 2],
        [-2, 0, -0.3, 0],
        [0, -2, 0, -0.3],
    ])
    np.testing.assert_array_equal(H, expected)


def test_quadratic_value():
    p = make_quadratic(1.0, 10.0)
    # -1/2 + 10 * 2 + 1/2 * 4
    assert p.value(np.array([1.0]), np.array([2.0])) == pytest.approx(21.5)


def test_quadratic_prox_exact_cramer():
    p = make_quadratic(1.0, 10.0)
    # (I + 0.05 H) u = (1, 1) with I + 0.05 H = [[0.95, 0.5], [-0.5, 0.95]]
    det = 0.95**2 + 0.25
    expected = [0.45 / det, 1.45 / det]
    np.testing.assert_allclose(p.prox_exact(np.array([1.0, 1.0]), 0.05), expected, rtol=1e-14)


def test_field_batch_matches_field():
    rng = np.random.default_rng(0)
    for p in (make_quadratic(0.2, 3.0, 3), make_quartic(100.0)):
        Z = rng.uniform(-3, 3, (7, p.n + p.m))
        np.testing.assert_allclose(p.field_batch(Z), [p.field(z) for z in Z], rtol=1e-14)


def test_quartic_attributes():
    p = make_quartic()
    assert p.rho == 20.0
    assert p.stationary_point == Point([0.0], [0.0])
    assert np.linalg.norm(saddle_field(p, p.stationary_point)) == 0.0


def test_problems_pickle():
    for p in (make_quadratic(0.1, 10.0, 3), make_quartic(50.0)):
        q = pickle.loads(pickle.dumps(p))
        z = np.arange(p.n + p.m, dtype=float)
        np.testing.assert_array_equal(q.field(z), p.field(z))


def test_invalid_construction():
    with pytest.raises(ValueError):
        make_quadratic(0.1, 1.0, 0)
    with pytest.raises(ValueError):
        BoxRegion(np.array([1.0]), np.array([0.0]))


def test_box_grid_order_and_size():
    box = BoxRegion.cube(-1.0, 1.0, 2, 3)
    g = box.grid()
    assert g.shape == (9, 2)
    np.testing.assert_array_equal(g[:3], [[-1, -1], [-1, 0], [-1, 1]])
    np.testing.assert_array_equal(box.center(), [0.0, 0.0])
    assert box.contains(np.array([0.5, -1.0]))
    assert not box.contains(np.array([1.5, 0.0]))


def test_box_grid_cap():
    with pytest.raises(ValueError):
        BoxRegion.cube(-1.0, 1.0, 6, 33).grid()


def test_box_sample_is_seeded_and_inside():
    box = BoxRegion.cube(-2.0, 3.0, 3)
    a = box.sample(np.random.default_rng(5), 100)
    b = box.sample(np.random.default_rng(5), 100)
    np.testing.assert_array_equal(a, b)
    assert np.all((a >= -2) & (a <= 3))


def test_constant_hessian_uses_single_point():
    p = make_quadratic(0.1, 10.0, 3)
    pts = region_points(p, BoxRegion.cube(-1.0, 1.0, 6, 33))
    assert pts.shape == (1, 6)


def test_curvature_quadratic():
    b = curvature_bounds(make_quadratic(0.1, 10.0), BoxRegion.cube(-1.0, 1.0, 2))
    assert b.rho_hat == pytest.approx(0.1)
    assert b.beta_hat == pytest.approx(np.sqrt(0.01 + 100.0))


def test_curvature_bilinear_is_zero_rho():
    rho, beta = curvature_bounds(make_quadratic(0.0, 1.0), BoxRegion.cube(-1.0, 1.0, 2))
    assert rho == 0.0
    assert beta == pytest.approx(1.0)


def test_curvature_convex_concave_clamps_rho():
    rho, _ = curvature_bounds(make_quadratic(-0.5, 1.0), BoxRegion.cube(-1.0, 1.0, 2))
    assert rho == 0.0


def test_curvature_quartic_box():
    b = curvature_bounds(make_quartic(100.0), BoxRegion.cube(-4.0, 4.0, 2, 33))
    # f'' = 12 t^2 - 20 is most negative at 0; the Hessian [[f''(x), A], [A, -f''(y)]]
    # has the largest norm at f''(x) = 172, f''(y) = -20.
    assert b.rho_hat == pytest.approx(20.0)
    expected_beta = (192 + np.sqrt(152**2 + 4 * 100**2)) / 2
    assert b.beta_hat == pytest.approx(expected_beta)
    assert abs(b.beta_witness.x[0]) == 4.0 and b.beta_witness.y[0] == 0.0


def test_hessian_summary_quartic():
    h = hessian_summary(make_quartic(100.0), BoxRegion.cube(-4.0, 4.0, 2, 33))
    assert h.hess_norm_xx_max == pytest.approx(172.0)
    assert h.hess_norm_yy_max == pytest.approx(172.0)
    assert h.lambda_min_cross == pytest.approx(1e4)


def test_point_in_region():
    p = make_quartic()
    box = BoxRegion.cube(-4.0, 4.0, 2)
    assert point_in(p, Point([1.0], [-4.0]), box)
    assert not point_in(p, Point([4.5], [0.0]), box)
