"""
Two-forms on the coalgebra and their calculus.

``Omega = omega1 + omega2`` where, with ``alpha`` the base point and tangents
given as anti-Hermitian directions ``X, Y``,

* ``omega1(X, Y) = (1/4it) [K(phi(ad alpha) X, Y) - K(phi(ad alpha) Y, X)]``
  with ``phi(l) = (exp(2itl) - 1 - 2itl) / l**2``, the resummed series
  ``sum_k (2it)^k/k! ad^{k-2}``;
* ``omega2(X, Y) = (1/4it) [K(A^-1 dA_X, dA_Y^H A^-H) - (X <-> Y)]`` with
  ``A = e_(t,u)(alpha)``, which simplifies to ``Im K(Z_X, Z_Y^H) / 2t`` for
  ``Z = A^-1 dA``.

The t = 0 family carries the constant form ``Omega_w(X, Y) = w(dh_X, dh_Y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .cmatrix import dagger, default_step, fd_pushforward
from .dual_group import (
    _as_params,
    _check_generic,
    body_cartan_coords,
    e_map,
    e_w_map,
    mc_form_special,
    mc_pair_special,
    to_special_body,
)
from .errors import ParamOutOfRange
from .lie_su import (
    CartanForm,
    PoissonParams,
    _full_r,
    as_alpha,
    bracket,
    im_killing,
    killing,
)

QUAD_ORDER = 16
QUAD_MAX_ORDER = 256
QUAD_RTOL = 1e-10


def _g(x):
    """``(exp(x) - 1 - x) / x**2``, stable near zero."""
    x = np.array(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 0.5
    xs = x[small]
    s = np.zeros_like(xs)
    term = np.full_like(xs, 0.5)
    for m in range(22):
        s += term
        term = term * xs / (m + 3)
    out[small] = s
    xl = x[~small]
    out[~small] = (np.expm1(xl) - xl) / xl**2
    return out


def phi_spectral(mu, t: float):
    """``phi`` evaluated at the ad-eigenvalue ``i mu``; real valued."""
    t = np.asarray(t, dtype=float)
    return -4.0 * t * t * _g(-2.0 * t * np.asarray(mu, dtype=float))


def _z_batch(alphas, ts, u: CartanForm, Xs, return_embedding: bool = False):
    """Left-trivialized pushforwards ``Z = A^-1 dA`` of ``e_(t,u)``, batched.

    ``alphas`` is ``(B, n, n)``, ``ts`` is ``(B,)`` and ``Xs`` is ``(B, m, n, n)``
    or ``(m, n, n)``.  Writing ``A = N T`` with ``T`` diagonal and
    ``L = N^-1 dN``, one has ``Z = T^-1 L T + diag(dlog T)``.
    """
    alphas = np.asarray(alphas, dtype=complex)
    ts = np.asarray(ts, dtype=float)
    n = alphas.shape[-1]
    H = 2j * ts[:, None, None] * alphas
    H = 0.5 * (H + dagger(H))
    w, V = np.linalg.eigh(H)
    ew = np.exp(w)
    P = (V * ew[:, None, :]) @ dagger(V)
    dw = w[:, :, None] - w[:, None, :]
    close = np.abs(dw) <= 1e-9 * (1.0 + np.abs(w)[:, :, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        F = (ew[:, :, None] - ew[:, None, :]) / np.where(close, 1.0, dw)
    F = np.where(close, np.exp(0.5 * (w[:, :, None] + w[:, None, :])), F)
    Xs = np.asarray(Xs, dtype=complex)
    if Xs.ndim == 3:
        Xs = Xs[None]
    dH = 2j * ts[:, None, None, None] * Xs
    Vb = V[:, None]
    dP = Vb @ (F[:, None] * (dagger(Vb) @ dH @ Vb)) @ dagger(Vb)
    rev = slice(None, None, -1)
    Lc = np.linalg.cholesky(0.5 * (P + dagger(P))[:, rev, rev])
    Uc = Lc[:, rev, rev]
    c = np.real(np.diagonal(Uc, axis1=-2, axis2=-1))
    d = c**2
    N = Uc / c[:, None, :]
    Ninv = np.linalg.inv(N)[:, None]
    Q = Ninv @ dP @ dagger(Ninv)
    L = np.triu(Q, 1) / d[:, None, None, :]
    r = -0.5 * np.log(d)
    Uop = u.operator()
    rho = _full_r(r[:, :-1] @ Uop.T)
    T = np.exp(-r - 1j * rho)
    dr = -0.5 * np.real(np.diagonal(Q, axis1=-2, axis2=-1)) / d[:, None, :]
    drho = _full_r(dr[..., :-1] @ Uop.T)
    ratio = T[:, None, :] / T[:, :, None]  # T_k / T_j
    Z = L * ratio[:, None]
    idx = np.arange(n)
    Z[..., idx, idx] = -dr - 1j * drho
    if return_embedding:
        return Z, N * T[:, None, :]
    return Z


def _omega1_batch(alphas, ts, Xs, Ys):
    alphas = np.asarray(alphas, dtype=complex)
    ts = np.asarray(ts, dtype=float)
    n = alphas.shape[-1]
    th, V = np.linalg.eigh(1j * alphas)
    theta = -th  # alpha = V diag(i theta) V^H
    phi = phi_spectral(theta[:, :, None] - theta[:, None, :], ts[:, None, None])
    Vb = V[:, None]
    Xt = dagger(Vb) @ np.asarray(Xs, dtype=complex) @ Vb
    Yt = dagger(Vb) @ np.asarray(Ys, dtype=complex) @ Vb
    kxy = np.einsum("Bajk,Bjk,Bbkj->Bab", Xt, phi, Yt)
    kyx = np.einsum("Bbjk,Bjk,Bakj->Bab", Yt, phi, Xt)
    return np.real(2 * n * (kxy - kyx) / (4j * ts[:, None, None]))


def _omega2_from_z(Zx, Zy, ts):
    n = Zx.shape[-1]
    k = 2 * n * np.einsum("Baij,Bbij->Bab", Zx, np.conj(Zy))
    return np.imag(k) / (2.0 * np.asarray(ts, dtype=float)[:, None, None])


def omega_tables(alphas, ts, u: CartanForm, Xs, Ys=None) -> np.ndarray:
    """Tables ``Omega_(t_b,u)(X_i, Y_j)`` at base points ``alphas[b]``.

    ``Xs``/``Ys`` are ``(m, n, n)`` shared stacks or per-point ``(B, m, n, n)``.
    Returns shape ``(B, m, k)``.
    """
    alphas = np.asarray(alphas, dtype=complex)
    B = alphas.shape[0]
    Xs = np.asarray(Xs, dtype=complex)
    Xs = np.broadcast_to(Xs, (B,) + Xs.shape[-3:]) if Xs.ndim == 3 else Xs
    Zx = _z_batch(alphas, ts, u, Xs)
    if Ys is None:
        Ys, Zy = Xs, Zx
    else:
        Ys = np.asarray(Ys, dtype=complex)
        Ys = np.broadcast_to(Ys, (B,) + Ys.shape[-3:]) if Ys.ndim == 3 else Ys
        Zy = _z_batch(alphas, ts, u, Ys)
    return _omega1_batch(alphas, ts, Xs, Ys) + _omega2_from_z(Zx, Zy, ts)


class FormKernel:
    """Form evaluation at a single base point; tangents are stacks ``(m, n, n)``."""

    def __init__(self, alpha, params: PoissonParams):
        self.alpha = as_alpha(alpha)
        self.params = params
        self.t = params.t
        self._ts = np.array([params.t])

    def omega1_matrix(self, Xs, Ys) -> np.ndarray:
        return _omega1_batch(self.alpha[None], self._ts, Xs, Ys)[0]

    def _z(self, Xs):
        return _z_batch(self.alpha[None], self._ts, self.params.u, Xs)[0]

    def omega2_matrix(self, Xs, Ys, Zx=None, Zy=None) -> np.ndarray:
        Zx = self._z(Xs) if Zx is None else Zx
        Zy = self._z(Ys) if Zy is None else Zy
        return _omega2_from_z(Zx[None], Zy[None], self._ts)[0]

    def omega_matrix(self, Xs, Ys=None) -> np.ndarray:
        return omega_tables(self.alpha[None], self._ts, self.params.u, Xs, Ys)[0]


def _stack(X):
    return np.asarray(X, dtype=complex)[None]


# --- pointwise evaluators --------------------------------------------------------

def omega1_eval(a, X, Y, t: float) -> float:
    """First summand of ``Omega`` in closed form via the spectral function."""
    if t == 0:
        return 0.0  # removable limit
    params = PoissonParams(t, CartanForm.zero(as_alpha(a).shape[0]), tau_t=0.0)
    return float(FormKernel(a, params).omega1_matrix(_stack(X), _stack(Y))[0, 0])


def omega1_series(a, X, Y, t: float, kmax: int = 40) -> float:
    """Truncated series ``sum_{k=2}^{kmax}`` built from repeated commutators."""
    alpha = as_alpha(a)
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    total = 0.0 + 0.0j
    adX, adY = X, Y
    for k in range(2, kmax + 1):
        total += (2j * t) ** k / factorial(k) * (killing(adX, Y) - killing(adY, X))
        adX, adY = bracket(alpha, adX), bracket(alpha, adY)
    return float(np.real(total / (4j * t)))


def _embedding_fd(alpha, X, params, step):
    return fd_pushforward(
        lambda s: e_map(alpha + s * X, params).embedding, 0.0, 1.0, step
    )


def omega2_eval(a, X, Y, params, step: float | None = None, fd: bool = False) -> float:
    """Second summand of ``Omega``.

    By default the pushforward ``dA`` is analytic.  With ``fd=True`` (or an
    explicit ``step``) ``dA`` comes from central differences of ``e_(t,u)``.
    """
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    if not fd and step is None:
        return float(FormKernel(alpha, params).omega2_matrix(_stack(X), _stack(Y))[0, 0])
    if step is None:
        step = default_step(alpha)
    A = e_map(alpha, params).embedding
    Zx = np.linalg.solve(A, _embedding_fd(alpha, np.asarray(X), params, step))
    Zy = np.linalg.solve(A, _embedding_fd(alpha, np.asarray(Y), params, step))
    val = (killing(Zx, dagger(Zy)) - killing(Zy, dagger(Zx))) / (4j * params.t)
    return float(np.real(val))


def omega_eval(a, X, Y, params) -> float:
    """``Omega_(t,u)(X, Y)`` at ``a``."""
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    return float(FormKernel(alpha, params).omega_matrix(_stack(X), _stack(Y))[0, 0])


def omega_w_eval(a, X, Y, w: CartanForm) -> float:
    """``Omega_w(X, Y) = w(dh_X, dh_Y)``, independent of the base point."""
    hx = body_cartan_coords(to_special_body(X))
    hy = body_cartan_coords(to_special_body(Y))
    return float(hx @ w.matrix @ hy)


# --- exterior calculus ---------------------------------------------------------------

def ext_deriv_residual(
    form: Callable, a, X, Y, Z, step: float | None = None
) -> float:
    """``|dOmega(X, Y, Z)|`` with central differences along constant fields.

    ``form(alpha, X, Y)`` evaluates the 2-form.  On a linear space the bracket
    terms vanish, leaving ``D_X W(Y,Z) - D_Y W(X,Z) + D_Z W(X,Y)``.
    """
    alpha = as_alpha(a)
    if step is None:
        step = default_step(alpha)

    def d(U, V, W):
        return fd_pushforward(lambda b: form(b, V, W), alpha, U, step)

    return float(abs(d(X, Y, Z) - d(Y, X, Z) + d(Z, X, Y)))


def one_form_ext_deriv(form1: Callable, a, X, Y, step: float | None = None) -> float:
    """``d theta(X, Y) = D_X theta(Y) - D_Y theta(X)`` for a 1-form ``theta``."""
    alpha = as_alpha(a)
    if step is None:
        step = default_step(alpha)
    dx = fd_pushforward(lambda b: form1(b, Y), alpha, X, step)
    dy = fd_pushforward(lambda b: form1(b, X), alpha, Y, step)
    return float(dx - dy)


def contraction_terms(a, eps, X, params) -> tuple[float, float]:
    """Both sides of ``Omega(X, v_eps) = (1/t) k(dA A^-1 (X), eps) - K(X, eps)``."""
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    eps = np.asarray(eps, dtype=complex)
    X = np.asarray(X, dtype=complex)
    v = bracket(eps, alpha)
    ker = FormKernel(alpha, params)
    Z = ker._z(np.stack([X, v]))
    lhs = ker.omega1_matrix(X[None], v[None])[0, 0] + ker.omega2_matrix(
        None, None, Z[:1], Z[1:]
    )[0, 0]
    A = e_map(alpha, params)
    xi = A.embedding @ Z[0] @ A.inverse_embedding()
    rhs = im_killing(xi, eps) / params.t - np.real(killing(X, eps))
    return float(lhs), float(rhs)


def contraction_residual(a, eps, X, params) -> float:
    lhs, rhs = contraction_terms(a, eps, X, params)
    return abs(lhs - rhs)


def contraction_terms_special(a, eps, X, w: CartanForm) -> tuple[float, float]:
    """Both sides of ``Omega_w(X, v_eps) = <e_w^* dA A^-1 - da, eps>(X)``."""
    alpha = as_alpha(a)
    eps = np.asarray(eps, dtype=complex)
    v = bracket(eps, alpha)
    lhs = omega_w_eval(alpha, X, v, w)
    A = e_w_map(to_special_body(alpha), w)
    dx = to_special_body(X)
    first, _ = mc_form_special(A, dx)
    rhs = mc_pair_special(first, eps) - mc_pair_special(dx, eps)
    return float(lhs), float(rhs)


def contraction_residual_special(a, eps, X, w: CartanForm) -> float:
    lhs, rhs = contraction_terms_special(a, eps, X, w)
    return abs(lhs - rhs)


# --- primitive and its t-derivative -----------------------------------------------

def _gauss(order: int):
    x, wts = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * wts


def _primitive_batch(alpha, ts, u, Xs, order):
    """Primitive values for several ``t`` at once, shape ``(len(ts), m)``."""
    nodes, wts = _gauss(order)
    ts = np.asarray(ts, dtype=float)
    s_all = np.tile(nodes, len(ts))
    t_all = np.repeat(ts, order)
    tab = omega_tables(s_all[:, None, None] * alpha, t_all, u, alpha[None], Xs)[:, 0, :]
    tab = tab * (np.tile(wts * nodes, len(ts)))[:, None]
    return tab.reshape(len(ts), order, -1).sum(axis=1)


def primitive_values(a, Xs, params, order: int = QUAD_ORDER) -> np.ndarray:
    """Radial primitive ``int_0^1 s Omega(s a; a, X) ds`` for a stack ``Xs``."""
    alpha = as_alpha(a)
    Xs = np.asarray(Xs, dtype=complex)
    if not np.any(alpha):
        return np.zeros(len(Xs))
    return _primitive_batch(alpha, [params.t], params.u, Xs, order)[0]


def primitive_order(a, Xs, params, rtol: float = QUAD_RTOL) -> int:
    """Smallest doubling of the base order whose change falls below ``rtol``."""
    order = QUAD_ORDER
    prev = primitive_values(a, Xs, params, order)
    while order < QUAD_MAX_ORDER:
        cur = primitive_values(a, Xs, params, 2 * order)
        if np.max(np.abs(cur - prev)) <= rtol * (1.0 + np.max(np.abs(cur))):
            return order
        order, prev = 2 * order, cur
    return order


def primitive_eval(a, X, params, order: int | None = None) -> float:
    """Radial-homotopy primitive ``alpha_(t,u)`` evaluated on ``X`` at ``a``."""
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    Xs = _stack(X)
    if order is None:
        order = primitive_order(alpha, Xs, params)
    return float(primitive_values(alpha, Xs, params, order)[0])


def default_dt(t: float) -> float:
    return 1e-4 * (1.0 + abs(t))


def beta_values(a, Xs, params, dt_step: float | None = None, order: int | None = None):
    """``d/dt`` of the primitive by central differences, stack version."""
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    t = params.t
    dt = default_dt(t) if dt_step is None else dt_step
    if abs(t) - dt < params.tau_t or np.sign(t - dt) != np.sign(t + dt):
        raise ParamOutOfRange("t-probe crosses the t = 0 exclusion zone")
    Xs = np.asarray(Xs, dtype=complex)
    if order is None:
        order = primitive_order(alpha, Xs, params)
    if not np.any(alpha):
        return np.zeros(len(Xs))
    hi, lo = _primitive_batch(alpha, [t + dt, t - dt], params.u, Xs, order)
    return (hi - lo) / (2.0 * dt)


def beta_eval(a, X, params, dt_step: float | None = None) -> float:
    """``beta_(t,u) = d alpha_(t,u) / dt`` on ``X`` at ``a``."""
    return float(beta_values(a, _stack(X), params, dt_step)[0])


# --- samples ---------------------------------------------------------------------

FORM_IDS = ("omega1", "omega2", "omega_total", "omega_w")


@dataclass(frozen=True)
class TwoFormSample:
    base: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    value: float
    form_id: str
    params: PoissonParams = field(repr=False)

    def to_json(self) -> dict:
        from .cmatrix import matrix_to_json

        return {
            "form_id": self.form_id,
            "value": self.value,
            "base": matrix_to_json(self.base),
            "X": matrix_to_json(self.X),
            "Y": matrix_to_json(self.Y),
            "params": self.params.to_json(),
        }


@dataclass(frozen=True)
class OneFormSample:
    base: np.ndarray
    X: np.ndarray
    value: float
    form_id: str


def evaluate_form(form_id: str, a, X, Y, params: PoissonParams) -> TwoFormSample:
    """Evaluate any of :data:`FORM_IDS` and wrap the result."""
    alpha = as_alpha(a)
    if form_id == "omega1":
        val = omega1_eval(alpha, X, Y, params.t)
    elif form_id == "omega2":
        val = omega2_eval(alpha, X, Y, params)
    elif form_id == "omega_total":
        val = omega_eval(alpha, X, Y, params)
    elif form_id == "omega_w":
        val = omega_w_eval(alpha, X, Y, params.w)
    else:
        raise ValueError(f"unknown form id {form_id!r}; expected one of {FORM_IDS}")
    return TwoFormSample(alpha, np.asarray(X), np.asarray(Y), val, form_id, params)


ONE_FORM_IDS = ("primitive_alpha", "beta")


def evaluate_one_form(form_id: str, a, X, params: PoissonParams) -> OneFormSample:
    """Evaluate the primitive or its t-derivative and wrap the result."""
    alpha = as_alpha(a)
    if form_id == "primitive_alpha":
        val = primitive_eval(alpha, X, params)
    elif form_id == "beta":
        val = beta_eval(alpha, X, params)
    else:
        raise ValueError(f"unknown one-form id {form_id!r}; expected one of {ONE_FORM_IDS}")
    return OneFormSample(alpha, np.asarray(X), val, form_id)
