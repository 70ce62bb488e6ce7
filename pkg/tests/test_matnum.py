import math

import numpy as np
import pytest

from oracles import random_stable_matrix, taylor_expm
from predsmc import matnum
from predsmc.errors import DimensionError, DomainError, NotHurwitzError, SingularMatrixError


class TestMatExp:
    def test_zero_time_is_identity(self):
        M = np.array([[1.0, 2.0], [3.0, -4.0]])
        assert np.array_equal(matnum.mat_exp(M, 0.0), np.eye(2))

    def test_scalar_example_positive(self):
        out = matnum.mat_exp([[1.0]], 0.4)
        assert out.shape == (1, 1)
        assert abs(out[0, 0] - math.exp(0.4)) < 1e-12
        assert abs(out[0, 0] - 1.4918246976412703) < 1e-12

    def test_scalar_example_reduced_surface(self):
        # A22 - A21 S2 = 1 - (-3)(-5) = -14 over a 0.1 s step
        out = matnum.mat_exp([[-14.0]], 0.1)
        assert abs(out[0, 0] - math.exp(-1.4)) < 1e-12
        assert abs(out[0, 0] - 0.2465969639416065) < 1e-12

    def test_against_taylor_oracle(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 6))
            M = random_stable_matrix(rng, n, scale=0.8)
            t = float(rng.uniform(0.0, 1.0))
            got = matnum.mat_exp(M, t)
            want = taylor_expm(M, t)
            rel = matnum.spectral_norm(got - want) / max(1.0, matnum.spectral_norm(want))
            assert rel <= 1e-10

    def test_semigroup_property(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 5))
            M = rng.standard_normal((n, n))
            M *= 20.0 / max(1.0, matnum.spectral_norm(M))
            s, t = rng.uniform(0.0, 1.0, size=2)
            lhs = matnum.mat_exp(M, s + t)
            rhs = matnum.mat_exp(M, s) @ matnum.mat_exp(M, t)
            assert matnum.spectral_norm(lhs - rhs) <= 1e-8 * max(1.0, matnum.spectral_norm(lhs))

    def test_derivative_matches_generator(self, rng):
        M = rng.standard_normal((3, 3))
        eps = 1e-6
        base = matnum.mat_exp(M, 0.7)
        fd = (matnum.mat_exp(M, 0.7 + eps) - base) / eps
        assert matnum.spectral_norm(fd - M @ base) <= 50.0 * eps

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            matnum.mat_exp(np.zeros((2, 3)), 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            matnum.mat_exp([[np.nan]], 1.0)
        with pytest.raises(DomainError):
            matnum.mat_exp([[1.0]], math.inf)


class TestSolveLyapunov:
    def test_scalar_closed_form(self):
        P = matnum.solve_lyapunov([[-14.0]])
        assert abs(P[0, 0] - 1.0 / 28.0) < 1e-14

    def test_symmetric_case(self):
        P = matnum.solve_lyapunov(-np.eye(2))
        assert np.allclose(P, 0.5 * np.eye(2), atol=1e-12)

    def test_random_stable_residual(self, rng):
        for _ in range(10):
            A = random_stable_matrix(rng, 3)
            P = matnum.solve_lyapunov(A)
            residual = matnum.spectral_norm(P @ A + A.T @ P + np.eye(3))
            assert residual <= 1e-10
            assert np.allclose(P, P.T)
            assert np.min(np.linalg.eigvalsh(P)) > 0.0

    def test_antistable_rejected(self):
        with pytest.raises(NotHurwitzError):
            matnum.solve_lyapunov([[1.0]])

    def test_imaginary_axis_rejected(self):
        with pytest.raises(NotHurwitzError):
            matnum.solve_lyapunov([[0.0, 1.0], [-1.0, 0.0]])


class TestPseudoInverse:
    def test_orthonormal_column(self):
        assert np.allclose(matnum.pseudo_inverse([[1.0], [0.0]]), [[1.0, 0.0]], atol=1e-14)

    def test_scalar_identity(self):
        assert np.allclose(matnum.pseudo_inverse([[1.0]]), [[1.0]], atol=1e-14)

    def test_scaled_column(self):
        assert np.allclose(matnum.pseudo_inverse([[2.0], [0.0]]), [[0.5, 0.0]], atol=1e-14)

    def test_left_inverse_property(self, rng):
        for _ in range(20):
            rows = int(rng.integers(2, 6))
            cols = int(rng.integers(1, rows + 1))
            B = rng.standard_normal((rows, cols))
            pinv = matnum.pseudo_inverse(B)
            assert matnum.spectral_norm(pinv @ B - np.eye(cols)) <= 1e-10

    def test_rank_deficient_rejected(self):
        with pytest.raises(SingularMatrixError):
            matnum.pseudo_inverse([[1.0, 1.0], [1.0, 1.0]])


def test_is_hurwitz():
    assert matnum.is_hurwitz([[-14.0]])
    assert not matnum.is_hurwitz([[2.0]])
