"""Dual group, the maps f, j, e, dressing and the t = 0 family."""
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given

from conftest import draw, ranks, seeds, t_values
from plcheck.cmatrix import dagger, fd_pushforward, is_unit_upper
from plcheck.dual_group import (
    DualGroupElement,
    SpecialDualElement,
    dress,
    dress_pushforward,
    dressing_vector,
    e_inverse,
    e_inverse_pushforward,
    e_map,
    e_pushforward,
    e_w_inverse,
    e_w_map,
    f_inverse,
    f_map,
    j_map,
    mc_form_special,
    mc_pair,
    mc_pair_special,
    right_trivialized,
    special_inverse,
    special_multiply,
    to_special_body,
    torus_tag,
)
from plcheck.errors import (
    DecompositionFailed,
    NotInSG,
    NotUnitary,
    ParamOutOfRange,
)
from plcheck.lie_su import (
    CartanForm,
    PoissonParams,
    coadjoint_act,
    dual_algebra_basis,
    in_dual_algebra,
    random_cartan_form,
    su_basis,
)

H2 = np.diag([1j, -1j])
E = np.e


def params(t, u):
    return PoissonParams.generic(t, u)


class TestF:
    def test_identity(self):
        A = DualGroupElement.identity(CartanForm.zero(3))
        assert np.allclose(f_map(A), np.eye(3))

    def test_diagonal(self):
        A = DualGroupElement(np.eye(2), [0.5], CartanForm.zero(2))
        assert np.allclose(A.embedding, np.diag([E**-0.5, E**0.5]))
        assert np.allclose(f_map(A), np.diag([1 / E, E]))

    def test_inverse_of_identity(self):
        A = f_inverse(np.eye(3), CartanForm.zero(3))
        assert np.allclose(A.embedding, np.eye(3))

    def test_inverse_of_diagonal(self):
        A = f_inverse(np.diag([1 / E, E]), CartanForm.zero(2))
        assert np.allclose(A.embedding, np.diag([E**-0.5, E**0.5]), atol=1e-14)

    @given(seeds, ranks)
    def test_unit_det_and_roundtrip(self, seed, n):
        r = np.random.default_rng(seed)
        u = random_cartan_form(r, n)
        N = np.triu(r.standard_normal((n, n)) + 1j * r.standard_normal((n, n)), 1) + np.eye(n)
        A0 = DualGroupElement(N, r.uniform(-1, 1, n - 1), u)
        assert abs(np.linalg.det(A0.embedding) - 1) <= 1e-12
        P = f_map(A0)
        assert abs(np.linalg.det(P) - 1) <= 1e-12
        A1 = f_inverse(P, u)
        assert np.allclose(A1.nilpotent, A0.nilpotent, atol=1e-11)
        assert np.allclose(A1.cartan_coord, A0.cartan_coord, atol=1e-11)

    def test_f_is_independent_of_twist(self, rng):
        N = np.triu(rng.standard_normal((3, 3)), 1) + np.eye(3)
        x = rng.standard_normal(2)
        P0 = f_map(DualGroupElement(N, x, CartanForm.zero(3)))
        P1 = f_map(DualGroupElement(N, x, random_cartan_form(rng, 3)))
        assert np.allclose(P0, P1, atol=1e-12)

    def test_inverse_rejects_non_sg(self):
        with pytest.raises(NotInSG):
            f_inverse(np.diag([2.0, 2.0]), CartanForm.zero(2))
        with pytest.raises(NotInSG):
            f_inverse(np.diag([-1.0, -1.0]), CartanForm.zero(2))

    def test_embedding_cache_is_consistent(self, rng):
        u = random_cartan_form(rng, 3)
        A = DualGroupElement(np.triu(rng.standard_normal((3, 3)), 1) + np.eye(3), [0.2, -0.4], u)
        B = DualGroupElement.from_json(A.to_json())
        assert np.allclose(A.embedding, B.embedding, atol=1e-12)
        with pytest.raises(ValueError):
            A.embedding[0, 0] = 2.0


class TestJE:
    def test_j_of_zero(self):
        assert np.allclose(j_map(np.zeros((2, 2)), 0.5), np.eye(2))

    def test_j_diagonal(self):
        assert np.allclose(j_map(H2, 0.5), np.diag([1 / E, E]))

    @given(seeds, ranks, t_values)
    def test_j_matches_scipy(self, seed, n, t):
        a = draw(seed, n)["a"]
        assert np.allclose(j_map(a, t), sla.expm(2j * t * a), atol=1e-12 * np.exp(4 * abs(t) * n))

    @given(seeds, ranks, t_values)
    def test_j_equivariance(self, seed, n, t):
        d = draw(seed, n)
        g = d["g"]
        lhs = j_map(coadjoint_act(g, d["a"]), t)
        assert np.linalg.norm(lhs - g @ j_map(d["a"], t) @ dagger(g)) <= 1e-12 * np.linalg.norm(lhs)

    def test_e_of_zero(self):
        A = e_map(np.zeros((3, 3)), params(0.5, CartanForm.zero(3)))
        assert np.allclose(A.embedding, np.eye(3))

    def test_e_diagonal(self):
        A = e_map(H2, params(0.5, CartanForm.zero(2)))
        assert np.allclose(A.embedding, np.diag([E**-0.5, E**0.5]), atol=1e-14)

    def test_e_inverse_diagonal(self):
        A = DualGroupElement(np.eye(2), [0.5], CartanForm.zero(2))
        assert np.allclose(e_inverse(A, params(0.5, CartanForm.zero(2))).alpha, H2, atol=1e-14)

    def test_e_inverse_of_identity(self):
        A = DualGroupElement.identity(CartanForm.zero(2), 0.3)
        assert np.allclose(e_inverse(A).alpha, 0)

    def test_e_rejects_small_t(self):
        p = PoissonParams(0.0, CartanForm.zero(2), family="special")
        with pytest.raises(ParamOutOfRange):
            e_map(H2, p)

    @given(seeds, ranks, t_values)
    def test_roundtrips(self, seed, n, t):
        d = draw(seed, n)
        p = params(t, d["u"])
        A = e_map(d["a"], p)
        assert np.allclose(f_map(A), j_map(d["a"], t), rtol=1e-11, atol=1e-11)
        assert np.linalg.norm(e_inverse(A, p).alpha - d["a"]) <= 1e-11 * (1 + np.linalg.norm(d["a"]))

    @given(seeds, ranks, t_values)
    def test_pushforward_matches_fd(self, seed, n, t):
        d = draw(seed, n)
        p = params(t, d["u"])
        _, dA = e_pushforward(d["a"], d["X"], p)
        fd = fd_pushforward(lambda s: e_map(d["a"] + s * d["X"], p).embedding, 0.0, 1.0, 1e-6)
        assert np.allclose(dA, fd, atol=1e-7 * (1 + np.abs(fd).max()))

    @given(seeds, ranks, t_values)
    def test_pushforward_lands_in_dual_algebra(self, seed, n, t):
        d = draw(seed, n)
        p = params(t, d["u"])
        A, dA = e_pushforward(d["a"], d["X"], p)
        xi = right_trivialized(A, dA)
        assert in_dual_algebra(xi, d["u"], 1e-10 * (1 + np.abs(xi).max()))
        assert np.allclose(e_inverse_pushforward(A, xi, p), d["X"], atol=1e-10)


class TestDress:
    def test_identity_group_element(self, rng):
        A = e_map(rng.standard_normal() * H2, params(0.5, CartanForm.zero(2)))
        Ag, gp = dress(np.eye(2), A)
        assert np.allclose(Ag.embedding, A.embedding) and np.allclose(gp, np.eye(2))

    @given(seeds, ranks)
    def test_identity_dual_element(self, seed, n):
        d = draw(seed, n)
        Ag, gp = dress(d["g"], DualGroupElement.identity(d["u"]))
        assert np.allclose(Ag.embedding, np.eye(n), atol=1e-12)
        assert np.allclose(gp, d["g"], atol=1e-12)

    @given(seeds, ranks, t_values)
    def test_recomposition_and_unitarity(self, seed, n, t):
        d = draw(seed, n)
        A = e_map(d["a"], params(t, d["u"]))
        Ag, gp = dress(d["g"], A)
        M = d["g"] @ A.embedding
        assert np.linalg.norm(Ag.embedding @ gp - M) <= 1e-10 * np.linalg.norm(M)
        assert np.allclose(gp @ dagger(gp), np.eye(n), atol=1e-10)
        assert is_unit_upper(Ag.nilpotent)

    @given(seeds, ranks, t_values)
    def test_left_action_on_f_images(self, seed, n, t):
        d = draw(seed, n)
        g1, g2 = d["g"], draw(seed + 1, n)["g"]
        A = e_map(d["a"], params(t, d["u"]))
        twice = dress(g1, dress(g2, A)[0])[0]
        once = dress(g1 @ g2, A)[0]
        assert np.linalg.norm(f_map(twice) - f_map(once)) <= 1e-10 * np.linalg.norm(f_map(once))

    @given(seeds, ranks, t_values)
    def test_equivariance_of_e(self, seed, n, t):
        d = draw(seed, n)
        p = params(t, d["u"])
        Ag, _ = dress(d["g"], e_map(d["a"], p))
        ref = e_map(coadjoint_act(d["g"], d["a"]), p)
        assert np.linalg.norm(Ag.embedding - ref.embedding) <= 1e-10 * np.linalg.norm(ref.embedding)

    def test_rejects_non_unitary(self):
        A = DualGroupElement.identity(CartanForm.zero(2))
        with pytest.raises(NotUnitary):
            dress(np.diag([2.0, 0.5]), A)

    def test_dressing_vector_trivial_cases(self, rng):
        u = random_cartan_form(rng, 3)
        A = e_map(0.5 * su_basis(3)[7], params(0.4, u))
        assert np.allclose(dressing_vector(np.zeros((3, 3)), A), 0)
        eps = su_basis(3)[1]
        assert np.allclose(dressing_vector(eps, DualGroupElement.identity(u)), 0, atol=1e-12)

    @given(seeds, ranks, t_values)
    def test_dressing_vector_matches_fd(self, seed, n, t):
        d = draw(seed, n)
        A = e_map(d["a"], params(t, d["u"]))
        xi = dressing_vector(d["eps"], A)
        dA = fd_pushforward(lambda s: dress(sla.expm(s * d["eps"]), A)[0].embedding, 0.0, 1.0, 1e-5)
        fd = dA @ A.inverse_embedding()
        assert np.max(np.abs(xi - fd)) <= 1e-6 * (1 + np.abs(fd).max())
        assert in_dual_algebra(xi, d["u"], 1e-9 * (1 + np.abs(xi).max()))

    @given(seeds, ranks, t_values)
    def test_dressing_vector_intertwines_infinitesimally(self, seed, n, t):
        d = draw(seed, n)
        p = params(t, d["u"])
        A = e_map(d["a"], p)
        mu = e_inverse_pushforward(A, dressing_vector(d["eps"], A), p)
        assert np.allclose(mu, d["eps"] @ d["a"] - d["a"] @ d["eps"], atol=1e-9)

    @given(seeds, ranks, t_values)
    def test_dress_pushforward_matches_fd(self, seed, n, t):
        d = draw(seed, n)
        p = params(t, d["u"])
        A, dA = e_pushforward(d["a"], d["X"], p)
        xi = right_trivialized(A, dA)
        Ag, xig = dress_pushforward(d["g"], A, xi)
        curve = lambda s: dress(d["g"], e_map(d["a"] + s * d["X"], p))[0].embedding  # noqa: E731
        fd = fd_pushforward(curve, 0.0, 1.0, 1e-6) @ Ag.inverse_embedding()
        assert np.max(np.abs(xig - fd)) <= 1e-6 * (1 + np.abs(fd).max())


class TestMcPair:
    def test_zero_eps(self, rng):
        u = random_cartan_form(rng, 3)
        A = DualGroupElement.identity(u)
        assert mc_pair(A, dual_algebra_basis(u)[0], np.zeros((3, 3))) == 0

    @given(seeds, ranks)
    def test_nondegenerate_and_linear(self, seed, n):
        u = draw(seed, n)["u"]
        A = DualGroupElement.identity(u)
        D, B = dual_algebra_basis(u), su_basis(n)
        G = np.array([[mc_pair(A, x, e) for e in B] for x in D])
        assert np.linalg.matrix_rank(G) == len(D)
        assert mc_pair(A, 2 * D[0], B[0]) == 2 * mc_pair(A, D[0], B[0])

    def test_rejects_foreign_tangent(self):
        A = DualGroupElement.identity(CartanForm.zero(2))
        with pytest.raises(ValueError):
            mc_pair(A, su_basis(2)[0], su_basis(2)[0])


class TestSpecialFamily:
    def test_zero_body(self, rng):
        w = random_cartan_form(rng, 3)
        A = e_w_map(np.zeros((3, 3)), w)
        assert np.allclose(A.body, 0) and np.allclose(A.tag, np.eye(3))

    @given(seeds, ranks)
    def test_zero_w_gives_identity_tag(self, seed, n):
        body = to_special_body(draw(seed, n)["a"])
        assert np.allclose(e_w_map(body, CartanForm.zero(n)).tag, np.eye(n))

    @given(seeds, ranks)
    def test_roundtrip_and_tag(self, seed, n):
        d = draw(seed, n)
        body = to_special_body(d["a"])
        A = e_w_map(body, d["u"])
        assert np.array_equal(e_w_inverse(A), A.body)
        assert np.allclose(A.body, body)
        assert A.tag_residual() <= 1e-12
        assert np.allclose(np.abs(np.diag(A.tag)), 1)
        B = SpecialDualElement.from_json(A.to_json())
        assert np.allclose(B.tag, A.tag)

    def test_rejects_lower_mass(self):
        with pytest.raises(DecompositionFailed):
            e_w_map(np.array([[0, 0], [1.0, 0]]), CartanForm.zero(2))

    def test_abelian_mc_form(self, rng):
        dx = to_special_body(su_basis(3)[0] + su_basis(3)[7])
        A = e_w_map(to_special_body(su_basis(3)[2]), CartanForm.zero(3))
        first, second = mc_form_special(A, dx)
        assert np.allclose(first, dx) and np.allclose(second, 0)

    def test_cartan_point(self, rng):
        w = random_cartan_form(rng, 3)
        h = to_special_body(su_basis(3)[6])
        dx = 0.1 * to_special_body(su_basis(3)[7])
        first, second = mc_form_special(e_w_map(h, w), dx)
        assert np.allclose(first, dx)
        # the torus part is the logarithm of the tag of the direction
        assert np.allclose(np.diag(second), 1j * np.angle(np.diag(torus_tag(dx, w))), atol=1e-12)

    @given(seeds, ranks)
    def test_mc_form_matches_group_law_fd(self, seed, n):
        d = draw(seed, n)
        w = d["u"]
        x, dx = to_special_body(d["a"]), to_special_body(d["X"])
        A = e_w_map(x, w)
        Ainv = special_inverse(A)

        def body(s):
            return special_multiply(e_w_map(x + s * dx, w), Ainv).body

        def tag(s):
            return special_multiply(e_w_map(x + s * dx, w), Ainv).tag

        first, second = mc_form_special(A, dx)
        assert np.allclose(fd_pushforward(body, 0.0, 1.0, 1e-5), first, atol=1e-8)
        assert np.allclose(fd_pushforward(tag, 0.0, 1.0, 1e-5), second, atol=1e-8)

    @given(seeds, ranks)
    def test_group_law(self, seed, n):
        d = draw(seed, n)
        A = e_w_map(to_special_body(d["a"]), d["u"])
        B = e_w_map(to_special_body(d["X"]), d["u"])
        I = special_multiply(A, special_inverse(A))
        assert np.allclose(I.body, 0, atol=1e-12) and np.allclose(I.tag, np.eye(n))
        AB = special_multiply(A, B)
        assert AB.tag_residual() <= 1e-12

    def test_pairing_ignores_torus(self, rng):
        eps = su_basis(2)[0]
        first = to_special_body(su_basis(2)[1])
        assert mc_pair_special(first, eps) == pytest.approx(float(np.imag(4 * np.trace(first @ eps))))
