import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from containsim.errors import SingularMatrixError, SpectraOverlapError
from containsim.linalg import (block_diag, char_poly, is_hurwitz, lu_checked, solve_lyapunov,
                               solve_sylvester, unvec, vec)


def test_vec_is_column_major():
    X = np.array([[1, 2], [3, 4]])
    assert vec(X).tolist() == [1, 3, 2, 4]
    assert np.array_equal(unvec(vec(X), 2, 2), X)


def test_kronecker_vec_identity(rng):
    A, X, B = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=(2, 5))
    np.testing.assert_allclose(vec(A @ X @ B), np.kron(B.T, A) @ vec(X), atol=1e-12)


@pytest.mark.parametrize("A, Lam, Q, expected", [
    (2.0, 1.0, 3.0, [[3.0]]),
    (np.eye(2), -np.eye(2), 2 * np.eye(2), np.eye(2)),
])
def test_sylvester_small_cases(A, Lam, Q, expected):
    np.testing.assert_allclose(solve_sylvester(A, Lam, Q), expected, atol=1e-14)


def test_sylvester_random_residual(rng):
    for _ in range(20):
        A, Lam, Q = rng.normal(size=(4, 4)), rng.normal(size=(3, 3)) - 4 * np.eye(3), rng.normal(size=(4, 3))
        X = solve_sylvester(A + 4 * np.eye(4), Lam, Q)
        assert np.linalg.norm((A + 4 * np.eye(4)) @ X - X @ Lam - Q) < 1e-10


def test_sylvester_shared_eigenvalue_rejected():
    with pytest.raises(SpectraOverlapError):
        solve_sylvester(np.diag([1.0, 2.0]), np.array([[2.0]]), np.ones((2, 1)))


def test_lu_checked_flags_singular():
    with pytest.raises(SingularMatrixError):
        lu_checked(np.array([[1.0, 2.0], [2.0, 4.0]]))
    lu_checked(np.eye(3))


def test_lyapunov_solution(rng):
    M = rng.normal(size=(4, 4)) - 5 * np.eye(4)
    P = solve_lyapunov(M)
    np.testing.assert_allclose(M.T @ P + P @ M, -np.eye(4), atol=1e-10)
    np.testing.assert_allclose(P, P.T, atol=1e-12)


@pytest.mark.parametrize("M, expected", [
    (-np.eye(3), True),
    (np.array([[0.0, 1.0], [-1.0, 0.0]]), False),
    (np.array([[1.0, 0.0], [0.0, -1.0]]), False),
    (np.array([[-1.0, 100.0], [0.0, -2.0]]), True),
    (np.zeros((1, 1)), False),
])
def test_is_hurwitz_cases(M, expected):
    assert is_hurwitz(M) is expected


def test_hurwitz_matches_trace_determinant_rule_on_2x2(rng):
    """Analytic criterion for 2x2: trace < 0 and det > 0."""
    disagreements = 0
    for _ in range(1000):
        M = rng.uniform(-5, 5, size=(2, 2))
        analytic = np.trace(M) < 0 and np.linalg.det(M) > 0
        disagreements += is_hurwitz(M) != analytic
    assert disagreements == 0


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-3, 3)))
def test_char_poly_matches_product_of_eigenfactors(M):
    # roots of the Faddeev-LeVerrier polynomial are the eigenvalues
    coeffs = char_poly(M)
    assert coeffs[0] == 1.0
    for lam in np.linalg.eigvals(M):
        assert abs(np.polyval(coeffs, lam)) <= 1e-7 * (1 + np.abs(M).max()) ** 4


def test_char_poly_known():
    np.testing.assert_allclose(char_poly(np.diag([1.0, 2.0, 3.0])), [1, -6, 11, -6])


def test_block_diag_with_empty_blocks():
    out = block_diag(np.ones((1, 2)), np.zeros((0, 0)), 2 * np.eye(1))
    assert out.shape == (2, 3)
    assert out[1, 2] == 2 and out[0, 2] == 0
