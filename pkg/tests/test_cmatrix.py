"""Dense kernel: spectral functions, structured factorization, FD utilities."""
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from conftest import seeds
from plcheck.cmatrix import (
    dagger,
    fd_pushforward,
    fd_pushforward4,
    herm_exp,
    herm_exp_derivative,
    herm_log,
    herm_log_derivative,
    is_positive_definite,
    is_unit_upper,
    matrix_from_json,
    matrix_to_json,
    udu_derivative,
    udu_factor,
)
from plcheck.errors import (
    DimensionMismatch,
    EvaluationFailed,
    NonFinite,
    NotHermitian,
    NotPositiveDefinite,
)


def random_hermitian(rng, n, scale=1.0):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (M + dagger(M)) / 2


def random_pd(rng, n):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return M @ dagger(M) + 0.1 * np.eye(n)


class TestHermExpLog:
    def test_exp_of_zero_is_identity(self):
        assert np.array_equal(herm_exp(np.zeros((3, 3))), np.eye(3))

    def test_exp_diagonal(self):
        out = herm_exp(np.diag([-1.0, 1.0]))
        assert np.allclose(out, np.diag([np.e**-1, np.e]), atol=1e-15)

    def test_log_of_identity_is_zero(self):
        assert np.allclose(herm_log(np.eye(4)), 0, atol=1e-15)

    def test_log_diagonal(self):
        out = herm_log(np.diag([np.e**-1, np.e]))
        assert np.allclose(out, np.diag([-1.0, 1.0]), atol=1e-14)

    @given(seeds, st.integers(2, 5))
    def test_exp_matches_scipy(self, seed, n):
        H = random_hermitian(np.random.default_rng(seed), n)
        assert np.allclose(herm_exp(H), sla.expm(H), rtol=1e-12, atol=1e-12)

    @given(seeds, st.integers(2, 5))
    def test_log_exp_roundtrip(self, seed, n):
        H = random_hermitian(np.random.default_rng(seed), n)
        assert np.linalg.norm(herm_log(herm_exp(H)) - H) <= 1e-12 * (1 + np.linalg.norm(H))

    @given(seeds, st.integers(2, 5))
    def test_exp_log_roundtrip(self, seed, n):
        P = random_pd(np.random.default_rng(seed), n)
        assert np.linalg.norm(herm_exp(herm_log(P)) - P) <= 1e-12 * np.linalg.norm(P) * 10

    @given(seeds)
    def test_det_is_exp_trace(self, seed):
        H = random_hermitian(np.random.default_rng(seed), 3)
        assert np.isclose(np.linalg.det(herm_exp(H)), np.exp(np.trace(H)), rtol=1e-12)

    def test_exp_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            herm_exp(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_log_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            herm_log(np.diag([1.0, -1.0]))

    def test_log_rejects_singular(self):
        with pytest.raises(NotPositiveDefinite):
            herm_log(np.diag([1.0, 0.0]))

    @given(seeds)
    def test_exp_derivative_matches_fd(self, seed):
        rng = np.random.default_rng(seed)
        H, dH = random_hermitian(rng, 3), random_hermitian(rng, 3)
        fd = fd_pushforward(lambda s: sla.expm(H + s * dH), 0.0, 1.0, 1e-5)
        assert np.allclose(herm_exp_derivative(H, dH), fd, atol=1e-7 * np.abs(fd).max())

    @given(seeds)
    def test_log_derivative_matches_fd(self, seed):
        rng = np.random.default_rng(seed)
        P, dP = random_pd(rng, 3), random_hermitian(rng, 3)
        fd = fd_pushforward(lambda s: sla.logm(P + s * dP), 0.0, 1.0, 1e-6)
        assert np.allclose(herm_log_derivative(P, dP), fd, atol=1e-6 * (1 + np.abs(fd).max()))

    def test_derivative_with_repeated_eigenvalues(self):
        # degenerate spectrum: divided differences collapse to the derivative
        H = np.diag([0.5, 0.5, -1.0]).astype(complex)
        dH = np.ones((3, 3), complex)
        fd = fd_pushforward(lambda s: sla.expm(H + s * dH), 0.0, 1.0, 1e-5)
        assert np.allclose(herm_exp_derivative(H, dH), fd, atol=1e-8)


class TestUduFactor:
    def test_identity(self):
        N, D = udu_factor(np.eye(3))
        assert np.allclose(N, np.eye(3)) and np.allclose(D, np.eye(3))

    def test_diagonal_is_already_factored(self):
        P = np.diag([2.0, 0.5, 3.0])
        N, D = udu_factor(P)
        assert np.allclose(N, np.eye(3), atol=1e-15)
        assert np.allclose(D, P, atol=1e-15)

    @given(seeds, st.integers(2, 6))
    def test_reconstruction(self, seed, n):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        M /= np.linalg.det(M) ** (1 / n)  # SL(n, C)
        P = M @ dagger(M)
        N, D = udu_factor(P)
        assert is_unit_upper(N)
        assert np.all(np.real(np.diag(D)) > 0) and np.allclose(np.imag(np.diag(D)), 0)
        assert np.linalg.norm(N @ D @ dagger(N) - P) <= 1e-12 * np.linalg.norm(P) * 10

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            udu_factor(np.diag([1.0, -2.0]))

    @given(seeds)
    def test_derivative_matches_fd(self, seed):
        rng = np.random.default_rng(seed)
        P, dP = random_pd(rng, 3), random_hermitian(rng, 3)
        N, D = udu_factor(P)
        dN, dD = udu_derivative(N, D, dP)
        fdN = fd_pushforward(lambda s: udu_factor(P + s * dP)[0], 0.0, 1.0, 1e-6)
        fdD = fd_pushforward(lambda s: udu_factor(P + s * dP)[1], 0.0, 1.0, 1e-6)
        assert np.allclose(dN, fdN, atol=1e-6 * (1 + np.abs(fdN).max()))
        assert np.allclose(dD, fdD, atol=1e-6 * (1 + np.abs(fdD).max()))


class TestFiniteDifferences:
    def test_linear_map_is_exact(self, rng):
        L = rng.standard_normal((4, 4))
        base, d = rng.standard_normal(4), rng.standard_normal(4)
        assert np.allclose(fd_pushforward(lambda x: L @ x, base, d, 0.1), L @ d, atol=1e-13)

    def test_square_map(self):
        assert abs(fd_pushforward(lambda x: x**2, 1.0, 1.0, 1e-5) - 2.0) <= 1e-9

    def test_second_order_convergence(self):
        f, exact = np.sin, np.cos(0.3)
        errs = [abs(fd_pushforward(f, 0.3, 1.0, h) - exact) for h in (1e-2, 5e-3)]
        assert 3.8 < errs[0] / errs[1] < 4.2

    def test_fourth_order_stencil(self):
        f, exact = np.sin, np.cos(0.3)
        errs = [abs(fd_pushforward4(f, 0.3, 1.0, h) - exact) for h in (4e-2, 2e-2)]
        assert 14 < errs[0] / errs[1] < 18

    def test_probe_failure_is_wrapped(self):
        def f(x):
            if x > 0.5:
                raise RuntimeError("outside domain")
            return x

        with pytest.raises(EvaluationFailed):
            fd_pushforward(f, 0.5, 1.0, 0.1)

    def test_non_finite_probe(self):
        with pytest.raises(EvaluationFailed), np.errstate(invalid="ignore"):
            fd_pushforward(lambda x: np.log(x), 0.0, 1.0, 0.1)

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            fd_pushforward(lambda x: x, 0.0, 1.0, 0.0)


class TestJson:
    def test_roundtrip(self, rng):
        M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.array_equal(matrix_from_json(matrix_to_json(M)), M)

    def test_rejects_non_finite(self):
        with pytest.raises(NonFinite):
            matrix_from_json({"dim": 1, "re": [[float("nan")]], "im": [[0.0]]})

    def test_rejects_wrong_dim(self):
        with pytest.raises(DimensionMismatch):
            matrix_from_json({"dim": 3, "re": [[1.0]], "im": [[0.0]]})

    def test_predicates(self):
        assert is_positive_definite(np.eye(2))
        assert not is_positive_definite(np.diag([1.0, -1.0]))
