"""
Tests for the Taylor2 kernel, finite-difference oracles and small linear algebra
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler.core.errors import DomainError, SingularMatrix
from finsler.utils.finite_diff import fd_gradient, fd_hessian
from finsler.utils.linalg import (
    MAX_DIM, SymMatrix, cholesky_succeeds, min_eigenvalue, sym_inverse, sym_solve,
)
from finsler.utils.taylor import Taylor2, power, sqrt, exp, log, taylor2_eval


def quartic_norm_squared(v):
    return sqrt(power(v[0], 4) + 3.0 * power(v[0], 2) * power(v[1], 2) + power(v[1], 4))


def test_taylor2_matches_closed_form():
    # f = exp(x) y^3 + x / y
    def program(v):
        return exp(v[0]) * power(v[1], 3) + v[0] / v[1]

    x, y = 0.3, 1.7
    res = taylor2_eval(program, [x, y])
    e = math.exp(x)
    assert res.value == pytest.approx(e * y ** 3 + x / y, rel=1e-14)
    np.testing.assert_allclose(res.gradient, [e * y ** 3 + 1 / y, 3 * e * y ** 2 - x / y ** 2], rtol=1e-13)
    expected = np.array([
        [e * y ** 3, 3 * e * y ** 2 - 1 / y ** 2],
        [3 * e * y ** 2 - 1 / y ** 2, 6 * e * y + 2 * x / y ** 3],
    ])
    np.testing.assert_allclose(res.hessian, expected, rtol=1e-13)
    assert np.array_equal(res.hessian, res.hessian.T)


def test_taylor2_constant_program():
    res = taylor2_eval(lambda v: 2.5, [1.0, 2.0])
    assert res.value == 2.5
    assert not np.any(res.gradient)
    assert not np.any(res.hessian)


def test_integer_power_of_negative_base():
    t = Taylor2.variable(-2.0, 0, 1)
    cube = power(t, 3)
    assert cube.value == -8.0
    assert cube.grad[0] == 12.0
    assert cube.hess[0, 0] == -12.0


def test_numpy_scalar_times_taylor2():
    t = Taylor2.variable(2.0, 0, 1)
    out = np.float64(3.0) * t
    assert isinstance(out, Taylor2)
    assert out.grad[0] == 3.0


@pytest.mark.parametrize("program", [
    lambda v: sqrt(v[0] - 1.0),
    lambda v: log(v[0] - 1.0),
    lambda v: power(v[0] - 2.0, 0.5),
    lambda v: power(v[0] - 1.0, -1),
])
def test_domain_errors(program):
    with pytest.raises(DomainError):
        taylor2_eval(program, [1.0])
    with pytest.raises(DomainError):
        program([1.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.2, max_value=2.0), st.floats(min_value=-2.0, max_value=2.0))
def test_taylor2_agrees_with_finite_differences(a, b):
    point = [a, b]
    res = taylor2_eval(quartic_norm_squared, point)
    np.testing.assert_allclose(res.gradient, fd_gradient(quartic_norm_squared, point), atol=1e-6)
    fd = fd_hessian(quartic_norm_squared, point)
    np.testing.assert_allclose(res.hessian, fd.entries, atol=1e-5 * max(1.0, np.max(np.abs(res.hessian))))


def test_richardson_refinement_is_more_accurate():
    program = lambda v: exp(2.0 * v[0]) * v[1]
    point = [0.4, 1.3]
    exact = taylor2_eval(program, point).gradient
    plain = fd_gradient(program, point, h=1e-2)
    refined = fd_gradient(program, point, h=1e-2, richardson=True)
    assert np.max(np.abs(refined - exact)) < np.max(np.abs(plain - exact))
    assert np.max(np.abs(refined - exact)) < 1e-7


def test_fd_hessian_is_symmetric():
    h = fd_hessian(lambda v: v[0] * v[0] * v[1] + v[1] ** 3, [0.5, -0.3])
    assert isinstance(h, SymMatrix)
    np.testing.assert_allclose(h.entries, [[-0.6, 1.0], [1.0, -1.8]], atol=1e-6)


# ===== linalg =====

def test_sym_matrix_validation():
    with pytest.raises(ValueError):
        SymMatrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        SymMatrix(np.eye(MAX_DIM + 1))
    m = SymMatrix(np.eye(3))
    with pytest.raises(ValueError):
        m.entries[0, 0] = 5.0


def test_sym_solve_and_inverse():
    a = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]])
    b = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(a @ sym_solve(a, b), b, atol=1e-13)
    np.testing.assert_allclose(sym_inverse(a).entries @ a, np.eye(3), atol=1e-13)


def test_singular_matrix_detected():
    with pytest.raises(SingularMatrix):
        sym_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])
    with pytest.raises(SingularMatrix):
        sym_inverse(np.zeros((2, 2)))


def test_min_eigenvalue_and_cholesky():
    assert min_eigenvalue(np.diag([2.0, 3.0])) == pytest.approx(2.0)
    indefinite = np.array([[1.0, 2.0], [2.0, 1.0]])
    assert min_eigenvalue(indefinite) == pytest.approx(-1.0)
    assert not cholesky_succeeds(indefinite)
    assert cholesky_succeeds(np.diag([2.0, 3.0]))


def test_taylor2_quadratic_and_bilinear_programs():
    res = taylor2_eval(lambda v: v[0] * v[0] + v[1] * v[1], [3.0, 4.0])
    assert res.value == 25.0
    assert res.gradient.tolist() == [6.0, 8.0]
    assert res.hessian.tolist() == [[2.0, 0.0], [0.0, 2.0]]
    res = taylor2_eval(lambda v: v[0] * v[1], [0.7, -1.3])
    assert res.hessian.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_taylor2_square_root_of_a_square():
    res = taylor2_eval(lambda v: sqrt(power(v[0], 4) + 2.0 * power(v[0], 2) * power(v[1], 2) + power(v[1], 4)), [1.0, 1.0])
    assert res.value == pytest.approx(2.0, rel=1e-15)
    np.testing.assert_allclose(res.gradient, [2.0, 2.0], rtol=1e-14)


def test_fd_oracle_examples():
    assert fd_gradient(lambda v: v[0] ** 3, [1.0], h=1e-4)[0] == pytest.approx(3.0, abs=1e-6)
    assert not np.any(fd_gradient(lambda v: 2.5, [1.0, 2.0]))
    assert not np.any(fd_hessian(lambda v: 2.5, [1.0, 2.0]).entries)


def test_sym_solve_identity():
    b = np.array([1.5, -2.0, 0.25])
    np.testing.assert_allclose(sym_solve(np.eye(3), b), b, atol=1e-15)


def test_cholesky_agrees_with_min_eigenvalue(rng):
    for _ in range(1000):
        a = rng.standard_normal((4, 4))
        a = 0.5 * (a + a.T)
        assert cholesky_succeeds(a) == (min_eigenvalue(a) > 0.0)
    b = rng.standard_normal((5, 5))
    spd = b.T @ b + 0.1 * np.eye(5)
    assert min_eigenvalue(spd) > 0.0
    assert cholesky_succeeds(spd)
