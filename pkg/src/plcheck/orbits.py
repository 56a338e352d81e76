"""
Model symplectic G-spaces: coadjoint and dressing orbits.

Tangent vectors are represented differently on the two kinds of orbit:

* coadjoint orbit through ``alpha``: anti-Hermitian directions ``[xi, alpha]``;
* dressing orbit through ``A = e(alpha)``: right-trivialized vectors
  ``dA A^-1`` in the dual algebra, so that the Lu-Weinstein moment map
  ``m = id`` pulls ``dA A^-1`` back to the tangent itself.

The coadjoint orbit carries the KKS form ``w~(v_xi, v_eta) = -K(alpha,
[xi, eta])``, whose moment map is the identity.  The dressing orbit carries
``w = mu^* w~ + mu^* Omega`` with ``mu = e^-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dual_group import (
    DualGroupElement,
    dress,
    dress_pushforward,
    dressing_vector,
    e_inverse,
    e_inverse_pushforward,
    e_map,
    mc_pair,
)
from .errors import DegenerateRepresentation, Inconsistent
from .forms import FormKernel
from .lie_su import (
    CoalgebraVector,
    PoissonParams,
    as_alpha,
    bracket,
    coadjoint_act,
    dominant_project,
    killing,
    random_unitary,
    su_basis,
    su_coords,
    su_from_coords,
)


def stabilizer_complement(a, rtol: float = 1e-9) -> np.ndarray:
    """Orthonormal su(n) generators spanning the complement of the stabilizer.

    Returned as a stack of matrices; its length is the orbit dimension.
    """
    alpha = as_alpha(a)
    n = alpha.shape[0]
    B = su_basis(n)
    M = su_coords(bracket(B, alpha)).T
    _, s, Vt = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, n, n), complex)
    keep = s > rtol * s[0]
    return su_from_coords(Vt[keep], n)


def coadjoint_tangent(a, xi) -> np.ndarray:
    """Infinitesimal coadjoint action ``-[alpha, xi]``."""
    return bracket(np.asarray(xi, dtype=complex), as_alpha(a))


def lift_generator(a, X, tol: float = 1e-9, check: bool = True) -> np.ndarray:
    """Minimal-norm ``xi`` with ``[xi, alpha] = X``.

    With ``check=False`` the normal component of ``X`` is silently dropped.
    """
    alpha = as_alpha(a)
    n = alpha.shape[0]
    B = su_basis(n)
    M = su_coords(bracket(B, alpha)).T
    X = np.asarray(X, dtype=complex)
    rhs = su_coords(X)
    c, *_ = np.linalg.lstsq(M, rhs.T, rcond=1e-10)
    resid = np.linalg.norm(M @ c - rhs.T, axis=0)
    if check and np.any(resid > tol * (1.0 + np.linalg.norm(rhs.T, axis=0))):
        raise DegenerateRepresentation("tangent is not tangent to the orbit")
    return su_from_coords(c.T, n)


def kks_eval(a, X, Y, xi=None, eta=None) -> float:
    """Kirillov-Kostant-Souriau form on coadjoint tangents ``X, Y``.

    Generators ``xi, eta`` with ``X = [xi, alpha]`` may be supplied; otherwise
    they are recovered by :func:`lift_generator`.
    """
    alpha = as_alpha(a)
    xi = lift_generator(alpha, X) if xi is None else xi
    eta = lift_generator(alpha, Y) if eta is None else eta
    return float(-np.real(killing(alpha, bracket(xi, eta))))


def kks_matrix(a, Xs, Ys=None, check: bool = True) -> np.ndarray:
    """Table ``w~(X_i, Y_j)`` for coadjoint tangents."""
    alpha = as_alpha(a)
    G = lift_generator(alpha, Xs, check=check)
    H = G if Ys is None else lift_generator(alpha, Ys, check=check)
    br = G[:, None] @ H[None, :] - H[None, :] @ G[:, None]
    return -np.real(killing(alpha, br))


def moment_residual_hamiltonian(a, xi, X) -> float:
    """``|w~(X, v_xi) - <da(X), xi>|`` with ``<da(X), xi> = K(X, xi)``."""
    alpha = as_alpha(a)
    v = coadjoint_tangent(alpha, xi)
    lhs = kks_eval(alpha, X, v, eta=xi)
    return abs(lhs - float(np.real(killing(X, xi))))


# --- orbit points -----------------------------------------------------------------

@dataclass(frozen=True)
class OrbitPoint:
    """A point of a model orbit together with a spanning set of tangents."""

    kind: str
    coadjoint_rep: CoalgebraVector
    dual_rep: DualGroupElement | None = None
    tangent_basis: np.ndarray = field(default=None, repr=False, compare=False)
    generators: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def alpha(self) -> np.ndarray:
        return self.coadjoint_rep.alpha

    def to_json(self) -> dict:
        out = {"kind": self.kind, "mu": self.coadjoint_rep.to_json()}
        if self.dual_rep is not None:
            out["dual"] = self.dual_rep.to_json()
        return out


def coadjoint_point(a) -> OrbitPoint:
    alpha = as_alpha(a)
    G = stabilizer_complement(alpha)
    return OrbitPoint("coadjoint", CoalgebraVector(alpha), None, coadjoint_tangent(alpha, G), G)


def dressing_point(a, params: PoissonParams, A: DualGroupElement | None = None) -> OrbitPoint:
    """Dressing-orbit point ``A = e(a)`` with right-trivialized tangent basis.

    A precomputed ``A`` may be passed; ``a`` must then equal ``e^-1(A)``.
    """
    alpha = as_alpha(a)
    A = e_map(alpha, params) if A is None else A
    G = stabilizer_complement(alpha)
    T = dressing_vector(G, A) if len(G) else np.zeros((0,) + alpha.shape, complex)
    return OrbitPoint("dressing", CoalgebraVector(alpha), A, T, G)


def dressing_tangent(x: OrbitPoint, eps) -> np.ndarray:
    """Universal field ``v_eps`` at a dressing point (right-trivialized)."""
    return dressing_vector(eps, x.dual_rep)


def mu_pushforward(x: OrbitPoint, X, params: PoissonParams) -> np.ndarray:
    """Coadjoint image ``mu_* X`` of right-trivialized dressing tangents."""
    return e_inverse_pushforward(x.dual_rep, X, params)


def _kernel(x: OrbitPoint, params):
    return FormKernel(x.alpha, params)


def dressing_form_matrix(x: OrbitPoint, Xs, params: PoissonParams, Ys=None) -> np.ndarray:
    """Table of ``w = mu^* (w~ + Omega)`` on right-trivialized tangents."""
    Xs = np.asarray(Xs, dtype=complex)
    aX = mu_pushforward(x, Xs, params)
    if Ys is None:
        aY = aX
    else:
        aY = mu_pushforward(x, np.asarray(Ys, dtype=complex), params)
    gx = lift_generator(x.alpha, aX)
    gy = gx if Ys is None else lift_generator(x.alpha, aY)
    br = gx[:, None] @ gy[None, :] - gy[None, :] @ gx[:, None]
    kks = -np.real(killing(x.alpha, br))
    return kks + _kernel(x, params).omega_matrix(aX, aY if Ys is not None else None)


def dressing_form_eval(x: OrbitPoint, X, Y, params: PoissonParams) -> float:
    return float(dressing_form_matrix(x, np.asarray(X)[None], params, np.asarray(Y)[None])[0, 0])


def dressing_kks_eval(x: OrbitPoint, X, Y, params: PoissonParams) -> float:
    """``mu^* w~`` on right-trivialized dressing tangents."""
    aX = mu_pushforward(x, X, params)
    aY = mu_pushforward(x, Y, params)
    return kks_eval(x.alpha, aX, aY)


def moment_terms_poisson(x: OrbitPoint, eps, X, params: PoissonParams):
    """Both sides of the Lu-Weinstein condition ``w(X, v_eps) = k(X, eps) / t``."""
    v = dressing_tangent(x, eps)
    lhs = dressing_form_eval(x, X, v, params)
    rhs = mc_pair(x.dual_rep, X, eps) / params.t
    return lhs, rhs


def moment_residual_poisson(x: OrbitPoint, eps, X, params: PoissonParams) -> float:
    lhs, rhs = moment_terms_poisson(x, eps, X, params)
    return abs(lhs - rhs)


def form_rank(W: np.ndarray, margin: float = 1e-6) -> tuple[int, float]:
    """Numerical rank of a form matrix and its smallest singular value."""
    s = np.linalg.svd(W, compute_uv=False)
    if s.size == 0:
        return 0, 0.0
    return int(np.sum(s > margin)), float(s.min())


def invariance_residual(x: OrbitPoint, g, X, Y, params: PoissonParams) -> tuple[float, float]:
    """``(|w~_{x^g}(g_*X, g_*Y) - w~_x(X, Y)|, |w~_x(X, Y)|)`` on a dressing orbit."""
    A = x.dual_rep
    Ag, pushed = dress_pushforward(g, A, np.stack([X, Y]))
    xg = OrbitPoint("dressing", e_inverse(Ag, params), Ag)
    before = dressing_kks_eval(x, X, Y, params)
    after = dressing_kks_eval(xg, pushed[0], pushed[1], params)
    return abs(after - before), abs(before)


# --- sampling and convexity ----------------------------------------------------------

def orbit_sample(
    seed: int,
    count: int,
    base,
    kind: str = "coadjoint",
    params: PoissonParams | None = None,
    include_base: bool = True,
    via_dressing: bool = False,
) -> list[OrbitPoint]:
    """Points ``Ad*(g) base`` for Haar random ``g``, deterministic in ``seed``.

    With ``include_base`` the first point uses the identity rotation.
    Dressing points are mapped through ``e_(t,u)``; with ``via_dressing`` they
    are instead produced by dressing ``e(base)`` with ``g`` and ``mu`` is read
    back through ``e^-1``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if kind not in ("coadjoint", "dressing"):
        raise ValueError(f"unknown orbit kind {kind!r}")
    if kind == "dressing" and params is None:
        raise ValueError("dressing orbits need params")
    alpha = as_alpha(base)
    rng = np.random.default_rng(seed)
    n = alpha.shape[0]
    A0 = e_map(alpha, params) if kind == "dressing" else None
    out = []
    for i in range(count):
        g = np.eye(n, dtype=complex) if (i == 0 and include_base) else random_unitary(rng, n)
        if kind == "dressing" and via_dressing:
            Ag, _ = dress(g, A0)
            out.append(dressing_point(e_inverse(Ag, params), params, Ag))
            continue
        a = coadjoint_act(g, alpha, tol=1e-8)
        out.append(coadjoint_point(a) if kind == "coadjoint" else dressing_point(a, params))
    return out


@dataclass(frozen=True)
class ConvexityReport:
    dominant_weight: np.ndarray
    spread: float
    count: int
    tol: float

    def to_json(self) -> dict:
        return {
            "dominant_weight": self.dominant_weight.tolist(),
            "spread": self.spread,
            "count": self.count,
            "tol": self.tol,
            "polytope_vertices": [self.dominant_weight.tolist()],
        }


def convexity_check(points, params: PoissonParams | None = None, tol: float = 1e-8):
    """Dominant projections of ``mu(x)`` over the sample must coincide.

    For dressing points ``mu`` is recomputed from the dual representative via
    ``e^-1``, so the check sees the equivariance of the whole pipeline.
    """
    weights = []
    for x in points:
        if x.kind == "dressing":
            mu = e_inverse(x.dual_rep, params) if params is not None else e_inverse(x.dual_rep)
        else:
            mu = x.coadjoint_rep
        weights.append(dominant_project(mu))
    W = np.array(weights)
    spread = float(np.max(np.ptp(W, axis=0))) if len(W) else 0.0
    if spread > tol:
        raise Inconsistent(f"dominant projections spread {spread:.3e} > {tol:.0e}")
    return ConvexityReport(W.mean(axis=0), spread, len(W), tol)
