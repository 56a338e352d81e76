"""
Moser-type deformation between the dressing and coadjoint structures.

On a coadjoint orbit ``M`` consider the family ``w_t = w~ + Omega_(t,u)``
(the dressing-orbit form transported by ``e``).  Along a path ``s -> (t, u)``
its derivative is ``d beta_s`` with ``beta_s = d alpha_(t,u) / ds`` for the
radial primitive ``alpha``.  The field

    V_s = t(s) [E_s, alpha],   k(E_s, dA A^-1) = beta_s,

satisfies ``i_V w_s = -beta_s`` by the Lu-Weinstein moment condition, so its
flow ``phi`` obeys ``phi^* w_end = w_start``.

Points are carried by their coadjoint representative ``alpha``; all field
evaluations are batched over points.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dual_group import DualGroupElement, e_inverse
from .errors import ConfigInvalid, IllConditioned, Inconsistent, StepSizeUnderflow
from .forms import (
    FormKernel,
    QUAD_ORDER,
    _z_batch,
    beta_values,
    default_dt,
    omega_tables,
    primitive_order,
)
from .lie_su import (
    TAU_T,
    CartanForm,
    PoissonParams,
    as_alpha,
    bracket,
    coadjoint_act,
    dominant_project,
    im_killing,
    su_basis,
    su_coords,
    su_from_coords,
)
from .orbits import (
    OrbitPoint,
    coadjoint_point,
    dressing_point,
    kks_matrix,
    lift_generator,
    stabilizer_complement,
)

COND_MAX = 1e10
SIGN_CONVENTION = "i_V w = -beta, so phi^* w_end = w_start"


# --- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class FlowConfig:
    """Path ``s in [0, 1] -> (t(s), u(s))`` with linear interpolation.

    Parameters
    ----------
    t_start, t_end : float
        Same sign, both at least ``tau_t`` in modulus.
    u_start, u_end : CartanForm
        ``u_end=None`` keeps ``u`` fixed (a pure t-flow).
    steps : int
        Number of fixed RK4 steps on ``[0, 1]``.
    tol : float
        Per-step tolerance for the step-halving error estimate, relative to
        ``1 + |alpha|``.  Steps over tolerance are subdivided up to
        ``max_halvings`` times.
    dt_step : float, optional
        Central-difference step for ``beta`` measured in ``t``.
    quad_order : int, optional
        Gauss order of the primitive; fixed for the whole flow.
    """

    t_start: float
    t_end: float
    u_start: CartanForm
    u_end: CartanForm | None = None
    steps: int = 100
    integrator: str = "rk4"
    tol: float = 1e-7
    dt_step: float | None = None
    quad_order: int | None = None
    check_steps: bool = True
    max_halvings: int = 6
    tau_t: float = TAU_T

    def __post_init__(self):
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ConfigInvalid("steps must be an integer >= 1")
        if self.integrator != "rk4":
            raise ConfigInvalid(f"unsupported integrator {self.integrator!r}")
        t0, t1 = float(self.t_start), float(self.t_end)
        if not (np.isfinite(t0) and np.isfinite(t1)):
            raise ConfigInvalid("t endpoints must be finite")
        if min(abs(t0), abs(t1)) < self.tau_t or np.sign(t0) != np.sign(t1):
            raise ConfigInvalid("flow path must stay outside (-tau_t, tau_t)")
        if self.u_end is not None and self.u_end.n != self.u_start.n:
            raise ConfigInvalid("u endpoints have different group rank")
        if not self.tol > 0:
            raise ConfigInvalid("tol must be positive")

    @property
    def n(self) -> int:
        return self.u_start.n

    @property
    def delta_t(self) -> float:
        return float(self.t_end) - float(self.t_start)

    @property
    def delta_u(self) -> np.ndarray:
        if self.u_end is None:
            return np.zeros_like(self.u_start.matrix)
        return self.u_end.matrix - self.u_start.matrix

    @property
    def is_trivial(self) -> bool:
        return self.delta_t == 0 and not np.any(self.delta_u)

    def t_at(self, s: float) -> float:
        return float(self.t_start) + s * self.delta_t

    def u_at(self, s: float) -> CartanForm:
        if self.u_end is None:
            return self.u_start
        return CartanForm(self.u_start.matrix + s * self.delta_u)

    def params_at(self, s: float) -> PoissonParams:
        return PoissonParams.generic(self.t_at(s), self.u_at(s))

    def reversed(self) -> "FlowConfig":
        u0 = self.u_start if self.u_end is None else self.u_end
        u1 = None if self.u_end is None else self.u_start
        return replace(self, t_start=self.t_end, t_end=self.t_start, u_start=u0, u_end=u1)

    def refined(self) -> "FlowConfig":
        """Twice the steps and half the ``beta`` difference step."""
        dt = self.dt_step if self.dt_step is not None else default_dt(max(abs(self.t_start), abs(self.t_end)))
        return replace(self, steps=2 * self.steps, dt_step=0.5 * dt)

    def to_json(self) -> dict:
        return {
            "t_start": float(self.t_start),
            "t_end": float(self.t_end),
            "u_start": self.u_start.to_json(),
            "u_end": None if self.u_end is None else self.u_end.to_json(),
            "steps": int(self.steps),
            "integrator": self.integrator,
            "tol": self.tol,
            "dt_step": self.dt_step,
            "quad_order": self.quad_order,
        }


# --- batched field ------------------------------------------------------------------

def _primitive_multi(alphas, t: float, u: CartanForm, basis, order: int) -> np.ndarray:
    """Radial primitive on ``basis`` at every point; shape ``(P, d)``."""
    nodes, wts = np.polynomial.legendre.leggauss(order)
    nodes, wts = 0.5 * (nodes + 1.0), 0.5 * wts
    P = alphas.shape[0]
    base = nodes[None, :, None, None] * alphas[:, None]  # (P, q, n, n)
    n = alphas.shape[-1]
    base = base.reshape(P * order, n, n)
    radial = np.repeat(alphas, order, axis=0)[:, None]  # (P q, 1, n, n)
    tab = omega_tables(base, np.full(P * order, t), u, radial, basis)[:, 0, :]
    tab = tab.reshape(P, order, -1) * (wts * nodes)[None, :, None]
    return tab.sum(axis=1)


def _path_beta(alphas, cfg: FlowConfig, s: float, basis, order: int, dt: float) -> np.ndarray:
    """``d alpha_(t(s),u(s)) / ds`` on ``basis`` by central differences in ``s``."""
    dT, dU = cfg.delta_t, cfg.delta_u
    span = max(abs(dT), float(np.max(np.abs(dU), initial=0.0)))
    if span == 0:
        return np.zeros((alphas.shape[0], len(basis)))
    h = dt / span
    t0 = cfg.t_at(s)
    for sign in (1, -1):
        tp = t0 + sign * h * dT
        if abs(tp) < cfg.tau_t or np.sign(tp) != np.sign(t0):
            raise ConfigInvalid("beta probe crosses the t = 0 exclusion zone")
    if np.any(dU):
        up = CartanForm(cfg.u_at(s).matrix + h * dU)
        um = CartanForm(cfg.u_at(s).matrix - h * dU)
    else:
        up = um = cfg.u_start
    hi = _primitive_multi(alphas, t0 + h * dT, up, basis, order)
    lo = _primitive_multi(alphas, t0 - h * dT, um, basis, order)
    return (hi - lo) / (2.0 * h)


def _pairing_matrices(alphas, t: float, u: CartanForm, basis) -> np.ndarray:
    """``M[p, i, j] = k(B_j, dA A^-1 (B_i))`` at each point."""
    P = alphas.shape[0]
    Z, A = _z_batch(alphas, np.full(P, t), u, basis, return_embedding=True)
    Ainv = np.linalg.inv(A)[:, None]
    xi = A[:, None] @ Z @ Ainv  # right-trivialized pushforwards
    return im_killing(xi[:, :, None], basis[None, None])


def _solve_coefficients(M, beta, cond_max: float = COND_MAX):
    cond = np.linalg.cond(M)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_max):
        raise IllConditioned(f"pairing matrix condition number {np.max(cond):.3e}")
    c = np.stack([np.linalg.lstsq(Mp, bp, rcond=None)[0] for Mp, bp in zip(M, beta)])
    resid = np.linalg.norm(np.einsum("pij,pj->pi", M, c) - beta, axis=1)
    return c, resid, cond


def _basis(n: int) -> np.ndarray:
    return su_basis(n)


def _field(alphas, cfg: FlowConfig, s: float, order: int, dt: float) -> np.ndarray:
    n = cfg.n
    B = _basis(n)
    t = cfg.t_at(s)
    beta = _path_beta(alphas, cfg, s, B, order, dt)
    M = _pairing_matrices(alphas, t, cfg.u_at(s), B)
    c, _, _ = _solve_coefficients(M, beta)
    E = su_from_coords(c, n)
    return t * bracket(E, alphas)


# --- single-point operations ------------------------------------------------------------

def coefficient_field(A, params: PoissonParams, dt_step: float | None = None,
                      order: int | None = None, beta=None, return_residual: bool = False):
    """Coefficient ``E`` with ``k(E, dA A^-1 (X)) = beta_(t,u)(X)`` for all ``X``.

    ``A`` is a :class:`DualGroupElement` or a coalgebra vector ``a``.  The
    system is assembled over the full su(n) basis and solved by least squares;
    ``beta`` may be supplied as its values on that basis.

    Returns
    -------
    E : ndarray
        Element of su(n).
    residual : float
        Fit residual, only when ``return_residual`` is set.
    """
    if isinstance(A, DualGroupElement):
        alpha = e_inverse(A, params).alpha
    else:
        alpha = as_alpha(A)
    n = alpha.shape[0]
    B = _basis(n)
    if beta is None:
        beta = beta_values(alpha, B, params, dt_step, order)
    M = _pairing_matrices(alpha[None], params.t, params.u, B)
    c, resid, _ = _solve_coefficients(M, np.asarray(beta, dtype=float)[None])
    E = su_from_coords(c[0], n)
    return (E, float(resid[0])) if return_residual else E


def _alpha_of(x) -> np.ndarray:
    return x.alpha if isinstance(x, OrbitPoint) else as_alpha(x)


def v_field(x, params: PoissonParams, dt_step: float | None = None,
            order: int | None = None, check: bool = False, rtol: float = 1e-5) -> np.ndarray:
    """Deformation field ``V = t [E, alpha]`` at an orbit point (coadjoint tangent).

    With ``check`` the bivector route is evaluated as well and
    :class:`Inconsistent` is raised when they differ by more than
    ``rtol * (1 + |V|)``.
    """
    alpha = _alpha_of(x)
    E = coefficient_field(alpha, params, dt_step, order)
    V = params.t * bracket(E, alpha)
    if check:
        V2 = v_field_dual(alpha, params, dt_step, order)
        gap = float(np.linalg.norm(V - V2))
        if gap > rtol * (1.0 + np.linalg.norm(V)):
            raise Inconsistent(f"dual routes for V differ by {gap:.3e}")
    return V


def v_field_dual(x, params: PoissonParams, dt_step: float | None = None,
                 order: int | None = None) -> np.ndarray:
    """``V'`` solving ``w_t(V', Y) = -beta(Y)`` on the orbit tangent basis."""
    alpha = _alpha_of(x)
    G = stabilizer_complement(alpha)
    if len(G) == 0:
        return np.zeros_like(alpha)
    T = bracket(G, alpha)
    W = kks_matrix(alpha, T) + FormKernel(alpha, params).omega_matrix(T)
    b = beta_values(alpha, T, params, dt_step, order)
    c = np.linalg.solve(W.T, -b)
    return np.einsum("i,ijk->jk", c, T)


def dual_route_gap(x, params: PoissonParams, dt_step: float | None = None) -> tuple[float, float]:
    """``(|V - V'|, 1 + |V|)`` for the two constructions of the field."""
    alpha = _alpha_of(x)
    order = primitive_order(alpha, _basis(alpha.shape[0]), params)
    V = v_field(alpha, params, dt_step, order)
    V2 = v_field_dual(alpha, params, dt_step, order)
    return float(np.linalg.norm(V - V2)), 1.0 + float(np.linalg.norm(V))


# --- integration -----------------------------------------------------------------------

@dataclass
class FlowResult:
    """Trajectories of a batch of seeds under the deformation flow.

    ``alphas`` has shape ``(P, steps + 1, n, n)``; ``times`` lists the ``t``
    value at every recorded step.
    """

    config: FlowConfig
    times: np.ndarray
    alphas: np.ndarray
    final_points: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def seeds(self) -> np.ndarray:
        return self.alphas[:, 0]

    @property
    def finals(self) -> np.ndarray:
        return self.alphas[:, -1]

    def trajectory(self, p: int) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times.tolist(), self.alphas[p]))

    def to_json(self, include_trajectory: bool = False) -> dict:
        n = self.alphas.shape[-1]
        out = {
            "config": self.config.to_json(),
            "final_points": [su_coords(a).tolist() for a in self.finals],
            "seed_points": [su_coords(a).tolist() for a in self.seeds],
            "n": n,
            "diagnostics": self.diagnostics,
        }
        if include_trajectory:
            out["trajectory"] = [
                [[t, su_coords(a).tolist()] for t, a in self.trajectory(p)]
                for p in range(len(self.alphas))
            ]
        return out


def _rk4(f, y, s, h):
    k1 = f(s, y)
    k2 = f(s + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(s + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(s + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _flow_order(alphas, cfg: FlowConfig) -> int:
    if cfg.quad_order is not None:
        return int(cfg.quad_order)
    B = _basis(cfg.n)
    order = QUAD_ORDER
    for s in (0.0, 1.0):
        p = cfg.params_at(s)
        for a in alphas:
            if np.any(a):
                order = max(order, primitive_order(a, B, p))
    return order


def _run(alphas, cfg: FlowConfig, order: int):
    steps = int(cfg.steps)
    dt = cfg.dt_step if cfg.dt_step is not None else default_dt(max(abs(cfg.t_start), abs(cfg.t_end)))
    f = lambda s, y: _field(y, cfg, s, order, dt)  # noqa: E731
    h = 1.0 / steps
    traj = [alphas]
    field_norm, err_est, substeps = [], [], []

    def advance(y, s, hh, depth):
        full = _rk4(f, y, s, hh)
        if not cfg.check_steps:
            return full, 0.0, 1
        half = _rk4(f, _rk4(f, y, s, 0.5 * hh), s + 0.5 * hh, 0.5 * hh)
        scale = 1.0 + float(np.max(np.linalg.norm(y, axis=(1, 2))))
        est = float(np.max(np.abs(full - half))) / 15.0 / scale
        if est <= cfg.tol:
            return full, est, 1
        if depth >= cfg.max_halvings:
            raise StepSizeUnderflow(f"error estimate {est:.3e} above tol after {depth} halvings")
        y1, e1, k1 = advance(y, s, 0.5 * hh, depth + 1)
        y2, e2, k2 = advance(y1, s + 0.5 * hh, 0.5 * hh, depth + 1)
        return y2, max(e1, e2), k1 + k2

    y = alphas
    for i in range(steps):
        s = i * h
        field_norm.append(float(np.max(np.linalg.norm(f(s, y), axis=(1, 2)))))
        y, est, k = advance(y, s, h, 0)
        if not np.all(np.isfinite(y)):
            raise IllConditioned("flow produced non-finite values")
        err_est.append(est)
        substeps.append(k)
        traj.append(y)
    return np.stack(traj, axis=1), {
        "field_norm": field_norm,
        "error_estimate": err_est,
        "substeps": substeps,
        "dt_step": dt,
    }


def _orbit_drift(traj) -> float:
    drift = 0.0
    for path in traj:
        d0 = dominant_project(path[0])
        for a in path[1:]:
            drift = max(drift, float(np.max(np.abs(dominant_project(a) - d0))))
    return drift


def integrate_flow(points, config: FlowConfig, order: int | None = None,
                   final_kind: str = "coadjoint") -> FlowResult:
    """Integrate the deformation field with classical RK4 from ``s = 0`` to ``1``.

    Parameters
    ----------
    points : sequence
        Orbit points or coalgebra vectors; flowed together as one batch, so
        step subdivision decisions are shared.
    config : FlowConfig
    order : int, optional
        Quadrature order override; otherwise fixed from the seeds.
    final_kind : {"coadjoint", "dressing"}
        Representation of ``final_points``; dressing points use ``t_end``.
    """
    alphas = np.stack([_alpha_of(x) for x in points]) if len(points) else np.zeros((0, config.n, config.n), complex)
    if alphas.shape[-1] != config.n:
        raise ConfigInvalid("points and u differ in group rank")
    steps = int(config.steps)
    times = np.array([config.t_at(i / steps) for i in range(steps + 1)])
    if config.is_trivial or len(alphas) == 0:
        traj = np.repeat(alphas[:, None], steps + 1, axis=1)
        diag = {"field_norm": [0.0] * steps, "error_estimate": [0.0] * steps,
                "substeps": [1] * steps, "dt_step": config.dt_step}
        order = order or QUAD_ORDER
    else:
        order = order if order is not None else _flow_order(alphas, config)
        traj, diag = _run(alphas, config, order)
    diag["quad_order"] = int(order)
    diag["orbit_drift"] = _orbit_drift(traj)
    diag["sign_convention"] = SIGN_CONVENTION
    if final_kind == "dressing":
        p_end = config.params_at(1.0)
        finals = [dressing_point(a, p_end) for a in traj[:, -1]]
    else:
        finals = [coadjoint_point(a) for a in traj[:, -1]]
    return FlowResult(config, times, traj, finals, diag)


# --- symplectomorphism certificate -----------------------------------------------------

@dataclass(frozen=True)
class SymplectoReport:
    residuals: np.ndarray
    fd_step: float
    steps: int

    @property
    def max(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    @property
    def median(self) -> float:
        return float(np.median(self.residuals)) if self.residuals.size else 0.0

    def to_json(self) -> dict:
        return {
            "max_relative_residual": self.max,
            "median_relative_residual": self.median,
            "count": int(self.residuals.size),
            "fd_step": self.fd_step,
            "steps": self.steps,
            "residuals": self.residuals.tolist(),
            "sign_convention": SIGN_CONVENTION,
        }


def _form_table(alpha, T, params: PoissonParams, check: bool) -> np.ndarray:
    return kks_matrix(alpha, T, check=check) + FormKernel(alpha, params).omega_matrix(T)


def _expm_su(X):
    w, V = np.linalg.eigh(-1j * X)
    return (V * np.exp(1j * w)) @ V.conj().T


def _pair_coefficients(alpha, G, pair):
    """Coordinates of a tangent (or generator) on the generators ``G``."""
    X = np.asarray(pair, dtype=complex)
    xi = lift_generator(alpha, X)
    return su_coords(G) @ su_coords(xi)


def symplecto_residual(flow: FlowResult, pairs=None, n_pairs: int = 20, seed: int = 0,
                       fd_step: float = 1e-2) -> SymplectoReport:
    """Compare ``w_end(phi_* X, phi_* Y)`` with ``w_start(X, Y)`` on tangent pairs.

    The flow map is differentiated by a fourth-order central stencil on
    perturbed seeds ``Ad*(exp(+-h G_k), +-2h G_k) alpha`` flowed in one batch
    with the seeds.  Residuals are relative to ``|W_start| |c_X| |c_Y|`` with
    ``c`` the tangent coordinates on the orthonormal generators ``G_k``.

    Parameters
    ----------
    pairs : list of (int, ndarray, ndarray), optional
        ``(seed index, X, Y)`` with coadjoint tangents at that seed.  By
        default ``n_pairs`` random pairs are drawn from ``seed``.
    """
    cfg = flow.config
    seeds = flow.seeds
    p0, p1 = cfg.params_at(0.0), cfg.params_at(1.0)
    gens = [stabilizer_complement(a) for a in seeds]
    h = float(fd_step)
    probes, index = [], []
    for p, (a, G) in enumerate(zip(seeds, gens)):
        for k, g in enumerate(G):
            for sgn in (1.0, -1.0, 2.0, -2.0):
                probes.append(coadjoint_act(_expm_su(sgn * h * g), a, tol=1e-8))
                index.append((p, k, sgn))
    pushed = {}
    if cfg.is_trivial:
        for p, (a, G) in enumerate(zip(seeds, gens)):
            pushed[p] = bracket(G, a)
        ends = seeds
    else:
        batch = np.concatenate([seeds, np.array(probes).reshape(-1, *seeds.shape[1:])])
        res = integrate_flow(batch, cfg, order=flow.diagnostics.get("quad_order"))
        ends = res.finals[: len(seeds)]
        img = dict(zip(index, res.finals[len(seeds):]))
        for p, G in enumerate(gens):
            D = []
            for k in range(len(G)):
                d1 = (img[(p, k, 1.0)] - img[(p, k, -1.0)]) / (2 * h)
                d2 = (img[(p, k, 2.0)] - img[(p, k, -2.0)]) / (4 * h)
                D.append((4 * d1 - d2) / 3)
            pushed[p] = np.array(D)
    W0 = [_form_table(a, bracket(G, a), p0, True) for a, G in zip(seeds, gens)]
    W1 = [_form_table(e, pushed[p], p1, False) for p, e in enumerate(ends)]

    if pairs is None:
        rng = np.random.default_rng(seed)
        coeffs = []
        for _ in range(n_pairs):
            p = int(rng.integers(len(seeds)))
            m = len(gens[p])
            coeffs.append((p, rng.standard_normal(m), rng.standard_normal(m)))
    else:
        coeffs = [
            (p, _pair_coefficients(seeds[p], gens[p], X), _pair_coefficients(seeds[p], gens[p], Y))
            for p, X, Y in pairs
        ]
    res = []
    for p, cx, cy in coeffs:
        before = cx @ W0[p] @ cy
        after = cx @ W1[p] @ cy
        scale = np.linalg.norm(W0[p], 2) * np.linalg.norm(cx) * np.linalg.norm(cy)
        res.append(abs(after - before) / scale if scale > 0 else abs(after - before))
    return SymplectoReport(np.array(res), h, int(cfg.steps))


def reversibility_error(points, config: FlowConfig) -> float:
    """Max distance after flowing forward and then back along the same path."""
    fwd = integrate_flow(points, config)
    back = integrate_flow(list(fwd.finals), config.reversed(), order=fwd.diagnostics["quad_order"])
    return float(np.max(np.abs(back.finals - fwd.seeds))) if len(fwd.seeds) else 0.0
