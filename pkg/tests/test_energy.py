import numpy as np
import pytest

from core.energy import (
    DoubleWell,
    RankOneDirection,
    closed_form_2x2,
    closed_form_3x3,
    evaluate,
    evaluate_g,
    evaluate_h,
    g2_frame,
    gradient,
    hessian_rank_one,
    p3_nonpoly,
    p3_shifted,
    sos_2x2,
)
from core.matrix import frobenius_norm_sq, random_rotation
from core.oracles import fd_gradient, fd_second_derivative
from utils.errors import DimensionMismatchError, MatrixValidationError


def random_wells(rng, n):
    return DoubleWell(rng.standard_normal((n, n)), rng.standard_normal((n, n)))


def test_energy_vanishes_at_wells_and_is_four_at_origin():
    dw = DoubleWell.model(2)
    assert evaluate(dw, np.eye(2)) == 0.0
    assert evaluate(dw, -np.eye(2)) == 0.0
    assert evaluate(dw, np.zeros((2, 2))) == 4.0


def test_wells_split_into_half_difference_and_midpoint():
    dw = DoubleWell(np.diag([2.0, 1.0]), np.zeros((2, 2)))
    np.testing.assert_array_equal(dw.A, np.diag([1.0, 0.5]))
    np.testing.assert_array_equal(dw.B, np.diag([1.0, 0.5]))
    assert dw.n == 2


def test_wells_must_share_dimension():
    with pytest.raises(DimensionMismatchError):
        DoubleWell(np.eye(2), np.eye(3))


def test_wells_json_errors_name_the_missing_field():
    with pytest.raises(MatrixValidationError, match="X2"):
        DoubleWell.from_json({"X1": {"n": 2, "entries": [[1, 0], [0, 1]]}})


@pytest.mark.parametrize("n", [2, 3, 4])
def test_translated_expansion_matches_product_form(n):
    rng = np.random.default_rng(n)
    for _ in range(100):
        dw = random_wells(rng, n)
        X = rng.standard_normal((n, n))
        f = evaluate(dw, X)
        assert abs(evaluate_g(dw, X - dw.B) - f) <= 1e-10 * (1.0 + f)


def test_stacked_evaluation_matches_single_calls():
    rng = np.random.default_rng(5)
    dw = random_wells(rng, 3)
    X = rng.standard_normal((10, 3, 3))
    np.testing.assert_allclose(evaluate(dw, X), [evaluate(dw, x) for x in X], rtol=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_gradient_matches_finite_differences(n):
    rng = np.random.default_rng(30 + n)
    dw = random_wells(rng, n)
    for _ in range(20):
        X = rng.standard_normal((n, n))
        analytic = gradient(dw, X)
        numeric = fd_gradient(lambda M: evaluate(dw, M), X)
        assert np.max(np.abs(analytic - numeric)) <= 1e-6 * (1.0 + np.max(np.abs(analytic)))


def test_gradient_vanishes_at_wells():
    rng = np.random.default_rng(8)
    dw = random_wells(rng, 3)
    np.testing.assert_allclose(gradient(dw, dw.X1), 0.0, atol=1e-12)
    np.testing.assert_allclose(gradient(dw, dw.X2), 0.0, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_rank_one_hessian_matches_finite_differences(n):
    rng = np.random.default_rng(40 + n)
    dw = random_wells(rng, n)
    for _ in range(50):
        Z = rng.standard_normal((n, n))
        d = RankOneDirection(rng.standard_normal(n), rng.standard_normal(n))
        analytic = hessian_rank_one(dw, Z, d)
        numeric = fd_second_derivative(lambda M: evaluate_g(dw, M), Z, d.outer())
        assert abs(analytic - numeric) <= 1e-5 * (1.0 + abs(analytic))


@pytest.mark.parametrize("wells, direction, expected", [
    ((np.eye(2), -np.eye(2)), ([1.0, 0.0], [1.0, 0.0]), 0.0),
    ((np.diag([2.0, 1.0]), np.zeros((2, 2))), ([1.0, 0.0], [1.0, 0.0]), -3.0),
    ((np.diag([2.0, 0.0, 0.0]), np.zeros((3, 3))), ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), -4.0),
], ids=["model_2x2", "unequal_diag_2x2", "rank_one_3x3"])
def test_rank_one_hessian_at_origin(wells, direction, expected):
    dw = DoubleWell(*wells)
    d = RankOneDirection(*direction)
    assert hessian_rank_one(dw, np.zeros((dw.n, dw.n)), d) == pytest.approx(expected, abs=1e-14)


def test_rank_one_hessian_rejects_wrong_direction_length():
    with pytest.raises(DimensionMismatchError):
        hessian_rank_one(DoubleWell.model(2), np.zeros((2, 2)), RankOneDirection([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]))


def test_rank_one_direction_validation():
    with pytest.raises(DimensionMismatchError):
        RankOneDirection([1.0, 0.0], [1.0, 0.0, 0.0])
    assert not RankOneDirection([0.0, 0.0], [1.0, 0.0]).is_nonzero


def test_normalized_energy_after_orthogonal_change_of_variables():
    rng = np.random.default_rng(11)
    Q = random_rotation(3, seed=2)
    B = rng.standard_normal((3, 3))
    a = 0.7
    dw = DoubleWell(B + a * Q, B - a * Q)
    for _ in range(50):
        X = rng.standard_normal((3, 3))
        f = evaluate(dw, X)
        assert evaluate_h(Q.T @ (X - B), a) == pytest.approx(f, rel=1e-10, abs=1e-10)


def test_2x2_closed_form_and_sum_of_squares():
    rng = np.random.default_rng(12)
    dw = DoubleWell.model(2)
    for _ in range(200):
        X = rng.standard_normal((2, 2))
        f = evaluate(dw, X)
        assert abs(closed_form_2x2(X) - f) <= 1e-10 * (1.0 + f)
        g = g2_frame(X)
        assert abs(sos_2x2(X) - g) <= 1e-10 * (1.0 + g)
        assert g >= -1e-12


def test_frame_invariant_2x2_energy_on_rotations_and_reflections():
    for seed in range(20):
        R = random_rotation(2, seed)
        assert abs(g2_frame(R)) <= 1e-12
        assert g2_frame(R @ np.diag([1.0, -1.0])) == pytest.approx(16.0, abs=1e-12)
    assert g2_frame(np.diag([1.0, -1.0])) == 16.0


def test_3x3_closed_form_uses_skew_part():
    rng = np.random.default_rng(13)
    dw = DoubleWell.model(3)
    assert closed_form_3x3(np.eye(3)) == 0.0
    for _ in range(200):
        X = rng.standard_normal((3, 3))
        f = evaluate(dw, X)
        assert abs(closed_form_3x3(X) - f) <= 1e-10 * (1.0 + f)


def test_3x3_variants():
    assert p3_shifted(np.eye(3)) == 27.0
    assert p3_shifted(np.zeros((3, 3))) == 0.0
    assert p3_nonpoly(np.zeros((3, 3))) == 9.0
    rng = np.random.default_rng(14)
    for _ in range(50):
        X = rng.standard_normal((3, 3))
        x2 = frobenius_norm_sq(X)
        assert p3_shifted(X) == pytest.approx(x2 * (x2 + 6.0), rel=1e-10)
        assert p3_nonpoly(X) == pytest.approx((x2 - 3.0) ** 2, rel=1e-9, abs=1e-9)


def test_p3_nonpoly_has_negative_curvature_at_origin():
    for idx in np.ndindex(3, 3):
        E = np.zeros((3, 3))
        E[idx] = 1.0
        assert fd_second_derivative(p3_nonpoly, np.zeros((3, 3)), E) == pytest.approx(-12.0, abs=1e-4)


def test_special_cases_require_their_dimension():
    with pytest.raises(DimensionMismatchError):
        g2_frame(np.eye(3))
    with pytest.raises(DimensionMismatchError):
        p3_shifted(np.eye(2))
