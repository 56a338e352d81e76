"""Deformation field and flow between symplectic structures."""
import numpy as np
import pytest

from conftest import draw
from plcheck.errors import ConfigInvalid, StepSizeUnderflow
from plcheck.forms import FormKernel, beta_values
from plcheck.gw_flow import (
    FlowConfig,
    SIGN_CONVENTION,
    coefficient_field,
    dual_route_gap,
    integrate_flow,
    reversibility_error,
    symplecto_residual,
    v_field,
    v_field_dual,
)
from plcheck.dual_group import e_map, mc_pair
from plcheck.lie_su import CartanForm, PoissonParams, dominant_project, random_cartan_form, su_basis
from plcheck.orbits import coadjoint_point, kks_matrix, lift_generator, stabilizer_complement


def params(t, u):
    return PoissonParams.generic(t, u)


class TestField:
    def test_zero_at_origin(self, rng):
        p = params(0.5, random_cartan_form(rng, 3))
        assert np.allclose(coefficient_field(np.zeros((3, 3)), p), 0)
        assert np.allclose(v_field(np.zeros((3, 3)), p), 0)

    @pytest.mark.parametrize("seed,n", [(0, 2), (1, 3), (2, 3)])
    def test_coefficient_reproduces_beta(self, seed, n):
        d = draw(seed, n)
        p = params(0.5, d["u"])
        E, resid = coefficient_field(d["a"], p, return_residual=True)
        A = e_map(d["a"], p)
        B = su_basis(n)
        beta = beta_values(d["a"], B, p)
        # k(E, dA A^-1 (X)) through the independent pairing on the dual group
        from plcheck.dual_group import e_pushforward, right_trivialized

        got = []
        for X in B:
            A_, dA = e_pushforward(d["a"], X, p)
            got.append(mc_pair(A, right_trivialized(A_, dA), E))
        assert np.allclose(got, beta, atol=1e-6 * (1 + np.abs(beta).max()))
        assert resid <= 1e-6

    def test_coefficient_is_linear_in_beta(self):
        d = draw(3, 3)
        p = params(0.4, d["u"])
        b1, b2 = np.random.default_rng(0).standard_normal((2, 8))
        E1 = coefficient_field(d["a"], p, beta=b1)
        E2 = coefficient_field(d["a"], p, beta=b2)
        assert np.allclose(coefficient_field(d["a"], p, beta=b1 + 2 * b2), E1 + 2 * E2, atol=1e-12)

    @pytest.mark.parametrize("seed,n", [(4, 2), (5, 3)])
    def test_contraction_gives_minus_beta(self, seed, n):
        d = draw(seed, n)
        p = params(0.6, d["u"])
        V = v_field(d["a"], p)
        T = coadjoint_point(d["a"]).tangent_basis
        stack = np.concatenate([V[None], T])
        W = kks_matrix(d["a"], stack) + FormKernel(d["a"], p).omega_matrix(stack)
        beta = beta_values(d["a"], T, p)
        assert np.allclose(W[0, 1:], -beta, atol=1e-6 * (1 + np.abs(beta).max()))

    @pytest.mark.parametrize("seed,n", [(6, 2), (7, 3)])
    def test_dual_route(self, seed, n):
        d = draw(seed, n)
        p = params(0.5, d["u"])
        gap, scale = dual_route_gap(d["a"], p)
        assert gap <= 1e-5 * scale
        v_field(d["a"], p, check=True)

    def test_field_is_tangent(self):
        d = draw(8, 3)
        p = params(0.5, d["u"])
        V = v_field_dual(d["a"], p)
        lift_generator(d["a"], V)
        G = stabilizer_complement(d["a"])
        assert len(G) == 6


class TestConfig:
    def test_validation(self):
        u = CartanForm.zero(2)
        with pytest.raises(ConfigInvalid):
            FlowConfig(0.5, 0.1, u, steps=0)
        with pytest.raises(ConfigInvalid):
            FlowConfig(0.5, 0.1, u, integrator="euler")
        with pytest.raises(ConfigInvalid):
            FlowConfig(0.5, -0.1, u)
        with pytest.raises(ConfigInvalid):
            FlowConfig(0.5, 0.1, u, u_end=CartanForm.zero(3))
        with pytest.raises(ConfigInvalid):
            FlowConfig(0.5, 0.1, u, tol=0.0)
        with pytest.raises(ConfigInvalid):
            FlowConfig(0.5, float("nan"), u)

    def test_paths(self, rng):
        u0, u1 = random_cartan_form(rng, 3), random_cartan_form(rng, 3)
        cfg = FlowConfig(0.5, 0.1, u0, u1, steps=8)
        assert cfg.t_at(0.5) == pytest.approx(0.3)
        assert np.allclose(cfg.u_at(1.0).matrix, u1.matrix)
        rev = cfg.reversed()
        assert rev.t_start == 0.1 and rev.u_start == u1 and rev.u_end == u0
        ref = cfg.refined()
        assert ref.steps == 16 and ref.dt_step == pytest.approx(0.5e-4 * 1.5)
        assert cfg.to_json()["steps"] == 8


class TestFlow:
    def test_trivial_path_is_identity(self):
        d = draw(0, 2)
        cfg = FlowConfig(0.5, 0.5, d["u"], steps=3)
        flow = integrate_flow([d["a"]], cfg)
        assert np.array_equal(flow.finals[0], d["a"])
        assert symplecto_residual(flow, n_pairs=5).max == 0.0

    def test_empty_batch(self):
        flow = integrate_flow([], FlowConfig(0.5, 0.1, CartanForm.zero(2), steps=2))
        assert flow.alphas.shape == (0, 3, 2, 2)

    def test_rank_mismatch(self):
        with pytest.raises(ConfigInvalid):
            integrate_flow([np.zeros((3, 3))], FlowConfig(0.5, 0.1, CartanForm.zero(2)))

    def test_stays_on_orbit_and_records(self):
        d = draw(1, 2)
        flow = integrate_flow([d["a"]], FlowConfig(0.5, 0.1, d["u"], steps=10))
        assert flow.alphas.shape == (1, 11, 2, 2)
        assert flow.times[0] == 0.5 and flow.times[-1] == pytest.approx(0.1)
        assert flow.diagnostics["orbit_drift"] <= 1e-8  # RK4 truncation at 10 steps
        assert flow.diagnostics["sign_convention"] == SIGN_CONVENTION
        assert np.allclose(dominant_project(flow.finals[0]), dominant_project(d["a"]), atol=1e-8)
        obj = flow.to_json(include_trajectory=True)
        assert len(obj["trajectory"][0]) == 11

    def test_symplectomorphism_su2(self):
        d = draw(2, 2)
        flow = integrate_flow([d["a"]], FlowConfig(0.5, 0.1, d["u"], steps=20))
        assert symplecto_residual(flow, n_pairs=10).max <= 1e-6

    def test_symplectomorphism_u_path(self, rng):
        d = draw(3, 3)
        cfg = FlowConfig(0.5, 0.5, d["u"], random_cartan_form(rng, 3), steps=10)
        flow = integrate_flow([0.5 * d["a"]], cfg)
        assert symplecto_residual(flow, n_pairs=10).max <= 1e-5

    def test_explicit_pairs(self):
        d = draw(4, 2)
        flow = integrate_flow([d["a"]], FlowConfig(0.4, 0.2, d["u"], steps=10))
        T = coadjoint_point(d["a"]).tangent_basis
        rep = symplecto_residual(flow, pairs=[(0, T[0], T[1])])
        assert rep.residuals.shape == (1,) and rep.max <= 1e-6

    def test_checking_does_not_change_an_accepted_step(self):
        d = draw(5, 2)
        cfg = FlowConfig(0.5, 0.1, d["u"], steps=10)
        a = integrate_flow([d["a"]], cfg)
        from dataclasses import replace

        b = integrate_flow([d["a"]], replace(cfg, check_steps=False), order=a.diagnostics["quad_order"])
        assert all(k == 1 for k in a.diagnostics["substeps"])
        assert np.array_equal(a.finals, b.finals)

    def test_rk4_fourth_order(self):
        from dataclasses import replace

        d = draw(6, 2)
        base = FlowConfig(0.5, 0.1, d["u"], steps=2, check_steps=False, quad_order=32)
        ref = integrate_flow([d["a"]], replace(base, steps=64)).finals[0]
        e1 = np.abs(integrate_flow([d["a"]], base).finals[0] - ref).max()
        e2 = np.abs(integrate_flow([d["a"]], replace(base, steps=4)).finals[0] - ref).max()
        assert 10.0 <= e1 / e2 <= 24.0

    def test_underflow(self):
        d = draw(7, 2)
        cfg = FlowConfig(0.5, 0.1, d["u"], steps=1, tol=1e-30, max_halvings=1)
        with pytest.raises(StepSizeUnderflow):
            integrate_flow([d["a"]], cfg)

    def test_reversible(self):
        d = draw(8, 2)
        assert reversibility_error([d["a"]], FlowConfig(0.5, 0.1, d["u"], steps=10)) <= 1e-6

    def test_dressing_finals(self):
        d = draw(9, 2)
        flow = integrate_flow([d["a"]], FlowConfig(0.5, 0.2, d["u"], steps=4), final_kind="dressing")
        x = flow.final_points[0]
        assert x.kind == "dressing" and x.dual_rep is not None
