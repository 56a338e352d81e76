"""
The dual group, the space SG and the equivariant map ``e_(t,u)``.

An element of the dual group is ``A = N exp(i(h + i u(h)))`` with ``N`` unit
upper triangular and ``h = i diag(r)`` a Cartan element.  The anti-involution
singling out SU(n) is ``x -> x^H``, so ``f(A) = A A^H`` lands in SG, the
positive-definite Hermitian matrices of unit determinant.

The t = 0 family lives at the bottom of the module: its group is the
semi-direct product of the torus with the additive group of upper triangular
"bodies" ``ih + n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cmatrix import (
    TOL_ALG,
    as_matrix,
    dagger,
    has_unit_det,
    herm_exp,
    herm_exp_derivative,
    herm_log,
    herm_log_derivative,
    is_hermitian,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    udu_derivative,
    udu_factor,
)
from .errors import (
    DecompositionFailed,
    NotInSG,
    NotPositiveDefinite,
    NotUnitary,
    ParamOutOfRange,
    SingularDecomposition,
)
from .lie_su import (
    CartanForm,
    CoalgebraVector,
    PoissonParams,
    _full_r,
    as_alpha,
    dual_algebra_basis,
    im_killing,
    in_dual_algebra,
    sl_coords,
    su_basis,
    su_dim,
)


def _torus_factor(x, u: CartanForm) -> np.ndarray:
    """Diagonal of ``exp(i(h + i u(h)))`` for Cartan coordinates ``x``."""
    r = _full_r(x)
    rho = _full_r(np.asarray(x) @ u.operator().T)
    return np.exp(-r - 1j * rho)


@dataclass(frozen=True)
class DualGroupElement:
    """Point of the dual group stored as its factor pair plus the embedding."""

    nilpotent: np.ndarray
    cartan_coord: np.ndarray
    u: CartanForm
    t: float | None = None
    embedding: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        N = as_matrix(self.nilpotent)
        x = np.asarray(self.cartan_coord, dtype=float).reshape(-1)
        if x.shape[0] != N.shape[0] - 1 or self.u.n != N.shape[0]:
            raise ValueError("dimension mismatch between N, Cartan coordinates and u")
        N = np.triu(N, 1) + np.eye(N.shape[0])
        for arr in (N, x):
            arr.setflags(write=False)
        emb = N * _torus_factor(x, self.u)[None, :]
        emb.setflags(write=False)
        object.__setattr__(self, "nilpotent", N)
        object.__setattr__(self, "cartan_coord", x)
        object.__setattr__(self, "embedding", emb)

    @property
    def n(self) -> int:
        return self.nilpotent.shape[0]

    @classmethod
    def identity(cls, u: CartanForm, t: float | None = None) -> "DualGroupElement":
        return cls(np.eye(u.n, dtype=complex), np.zeros(u.n - 1), u, t)

    def inverse_embedding(self) -> np.ndarray:
        return np.linalg.inv(self.embedding)

    def to_json(self) -> dict:
        return {
            "N": matrix_to_json(self.nilpotent),
            "cartan_coord": self.cartan_coord.tolist(),
            "u": self.u.to_json(),
            "t": self.t,
            "embedding": matrix_to_json(self.embedding),
        }

    @classmethod
    def from_json(cls, obj) -> "DualGroupElement":
        return cls(
            matrix_from_json(obj["N"]),
            np.asarray(obj["cartan_coord"], dtype=float),
            CartanForm.from_json(obj["u"]),
            obj.get("t"),
        )


def _as_params(params, n=None) -> PoissonParams:
    if isinstance(params, PoissonParams):
        return params
    t, u = params
    return PoissonParams.generic(t, u, n)


def _check_generic(params: PoissonParams):
    if params.family != "generic" or abs(params.t) < params.tau_t:
        raise ParamOutOfRange(
            f"e_(t,u) needs the generic family with |t| >= {params.tau_t:.0e}; "
            "use the special-family operations for t = 0"
        )


# --- f, f^-1, j, e ----------------------------------------------------------

def f_map(A: DualGroupElement) -> np.ndarray:
    """``A A^H``; equals ``N exp(2i h) N^H`` because the u-twist is unitary."""
    E = A.embedding
    P = E @ dagger(E)
    return 0.5 * (P + dagger(P))


def check_sg(P, tol: float = TOL_ALG) -> np.ndarray:
    P = as_matrix(P)
    scale = max(1.0, float(np.abs(P).max()))
    if not is_hermitian(P, tol * scale):
        raise NotInSG("matrix is not Hermitian")
    if not has_unit_det(P, 1e3 * tol * scale):
        raise NotInSG(f"det = {np.linalg.det(P):.6g} is not 1")
    return 0.5 * (P + dagger(P))


def f_inverse(P, u: CartanForm, t: float | None = None, tol: float = TOL_ALG):
    """The unique dual-group element ``A`` with ``A A^H = P``."""
    P = check_sg(P, tol)
    try:
        N, D = udu_factor(P, tol=tol * max(1.0, float(np.abs(P).max())))
    except NotPositiveDefinite as exc:
        raise NotInSG(str(exc)) from exc
    r = -0.5 * np.log(np.real(np.diag(D)))
    return DualGroupElement(N, r[:-1], u, t)


def f_inverse_pushforward(P, dP, u: CartanForm):
    """Tangent of ``f^-1`` at ``P`` along Hermitian ``dP`` (stack-aware).

    Returns ``(A, dA)`` with ``dA`` the derivative of the embedding.
    """
    N, D = udu_factor(P)
    d = np.real(np.diag(D))
    r = -0.5 * np.log(d)
    A = DualGroupElement(N, r[:-1], u)
    dN, dD = udu_derivative(N, D, dP)
    dr = -0.5 * np.real(np.diagonal(dD, axis1=-2, axis2=-1)) / d
    drho = _full_r(dr[..., :-1] @ u.operator().T)
    T = _torus_factor(r[:-1], u)
    dA = dN * T + (N * T) @ ((-dr - 1j * drho)[..., None] * np.eye(len(d)))
    return A, dA


def j_map(a, t: float) -> np.ndarray:
    """``exp(2it alpha)``, a point of SG."""
    return herm_exp(2j * t * as_alpha(a))


def e_map(a, params) -> DualGroupElement:
    """``e_(t,u) = f^-1 o j``."""
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    return f_inverse(j_map(alpha, params.t), params.u, params.t)


def e_inverse(A: DualGroupElement, params=None) -> CoalgebraVector:
    """``alpha = log(A A^H) / (2it)``."""
    if params is None:
        t = A.t
        if t is None:
            raise ParamOutOfRange("no t attached to the element; pass params")
    else:
        params = _as_params(params, A.n)
        _check_generic(params)
        t = params.t
    L = herm_log(f_map(A))
    return CoalgebraVector(L / (2j * t), tol=1e-8)


def e_pushforward(a, X, params):
    """Derivative of ``e_(t,u)`` at ``a`` along coalgebra direction(s) ``X``.

    Returns ``(A, dA)`` where ``dA`` has the shape of ``X``.
    """
    alpha = as_alpha(a)
    params = _as_params(params, alpha.shape[0])
    _check_generic(params)
    t = params.t
    H = 2j * t * alpha
    P = herm_exp(H)
    dP = herm_exp_derivative(H, 2j * t * np.asarray(X, dtype=complex))
    A, dA = f_inverse_pushforward(P, dP, params.u)
    return DualGroupElement(A.nilpotent, A.cartan_coord, A.u, t), dA


def right_trivialized(A: DualGroupElement, dA) -> np.ndarray:
    return np.asarray(dA) @ A.inverse_embedding()


def e_inverse_pushforward(A: DualGroupElement, xi, params) -> np.ndarray:
    """Coalgebra tangent of ``e^-1`` along right-trivialized ``xi = dA A^-1``."""
    params = _as_params(params, A.n)
    _check_generic(params)
    P = f_map(A)
    xi = np.asarray(xi, dtype=complex)
    dP = xi @ P + P @ dagger(xi)
    dL = herm_log_derivative(P, dP)
    return dL / (2j * params.t)


# --- dressing action -----------------------------------------------------------

def dress(g, A: DualGroupElement, tol: float = 1e-10):
    """Factor ``g A = A^g g'`` with ``A^g`` in the dual group and ``g'`` in SU(n)."""
    g = as_matrix(g, A.n)
    if not is_unitary(g, tol):
        raise NotUnitary("dressing needs a unitary group element")
    M = g @ A.embedding
    Ag = f_inverse(M @ dagger(M), A.u, A.t)
    gp = np.linalg.solve(Ag.embedding, M)
    if not is_unitary(gp, tol * max(1.0, np.abs(M).max() ** 2)):
        raise NotUnitary("computed compact factor is not unitary; numerical breakdown")
    return Ag, gp


def dress_pushforward(g, A: DualGroupElement, xi):
    """Image of right-trivialized tangent(s) ``xi`` at ``A`` under ``A -> A^g``.

    Works on f-images: ``P -> g P g^-1`` carries ``dP = xi P + P xi^H``.
    Returns ``(A^g, xi^g)``.
    """
    g = as_matrix(g, A.n)
    P = f_map(A)
    xi = np.asarray(xi, dtype=complex)
    dP = xi @ P + P @ dagger(xi)
    Pg = g @ P @ dagger(g)
    Ag, dAg = f_inverse_pushforward(0.5 * (Pg + dagger(Pg)), g @ dP @ dagger(g), A.u)
    Ag = DualGroupElement(Ag.nilpotent, Ag.cartan_coord, A.u, A.t)
    return Ag, dAg @ Ag.inverse_embedding()


def dressing_vector(eps, A: DualGroupElement, cond_max: float = 1e12) -> np.ndarray:
    """Infinitesimal dressing action of ``eps`` at ``A``, right-trivialized.

    Splits ``eps = xi + A eta A^-1`` with ``xi`` in the dual algebra and ``eta``
    in su(n); ``xi = (d/ds A^{exp(s eps)}) A^-1`` at ``s = 0``.  ``eps`` may be
    a stack.
    """
    n = A.n
    E = A.embedding
    Ei = A.inverse_embedding()
    cols = np.concatenate([dual_algebra_basis(A.u), E @ su_basis(n) @ Ei])
    M = sl_coords(cols).T
    c = np.linalg.cond(M)
    if not c < cond_max:
        raise SingularDecomposition(f"splitting system has condition number {c:.2e}")
    eps = np.asarray(eps, dtype=complex)
    rhs = sl_coords(eps)
    sol = np.linalg.solve(M, rhs.T).T
    return np.tensordot(sol[..., : su_dim(n)], dual_algebra_basis(A.u), axes=([-1], [0]))


def mc_pair(A: DualGroupElement, xi, eps, tol: float = 1e-8) -> float:
    """``k(xi, eps)``: right Maurer-Cartan value ``xi`` evaluated against ``eps``."""
    xi = np.asarray(xi)
    scale = max(1.0, float(np.abs(xi).max(initial=0.0)))
    if not in_dual_algebra(xi, A.u, tol * scale):
        raise ValueError("tangent is not in the dual algebra of A")
    return float(im_killing(xi, eps))


# --- the t = 0 family -------------------------------------------------------------

def to_special_body(a) -> np.ndarray:
    """Coalgebra vector as ``ih + n``: the upper triangular ``b`` with ``b + b^H = 2i alpha``."""
    alpha = as_alpha(a)
    M = 2j * alpha
    return np.triu(M, 1) + np.diag(np.real(np.diag(M)) / 2).astype(complex)


def from_special_body(body) -> np.ndarray:
    body = np.asarray(body, dtype=complex)
    return (body + dagger(body)) / 2j


def body_cartan_coords(body) -> np.ndarray:
    """Cartan coordinates of ``h`` in ``ih + n`` (``ih = -diag(r)``)."""
    return -np.real(np.diagonal(body, axis1=-2, axis2=-1))[..., :-1]


def _check_body(body, tol):
    body = np.asarray(body, dtype=complex)
    scale = max(1.0, float(np.abs(body).max(initial=0.0)))
    if np.max(np.abs(np.tril(body, -1)), initial=0.0) > tol * scale:
        raise DecompositionFailed("body has lower triangular mass")
    d = np.diagonal(body, axis1=-2, axis2=-1)
    if np.max(np.abs(d.imag), initial=0.0) > tol * scale or np.max(
        np.abs(d.sum(axis=-1))
    ) > tol * scale:
        raise DecompositionFailed("body diagonal must be real and traceless")
    return np.triu(body, 1) + np.real(d)[..., None] * np.eye(body.shape[-1])


def torus_tag(body, w: CartanForm) -> np.ndarray:
    """``exp(-w(h))`` for the Cartan part ``h`` of ``body``; a unitary diagonal."""
    x = body_cartan_coords(body)
    rho = _full_r(x @ w.operator().T)
    return np.diag(np.exp(-1j * rho))


@dataclass(frozen=True)
class SpecialDualElement:
    """Element ``(ih + n, exp(-w(h)))`` of the t = 0 dual group."""

    body: np.ndarray
    tag: np.ndarray
    w: CartanForm

    def __post_init__(self):
        body = as_matrix(self.body)
        tag = as_matrix(self.tag)
        body.setflags(write=False)
        tag.setflags(write=False)
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "tag", tag)

    @property
    def n(self) -> int:
        return self.body.shape[0]

    def tag_residual(self) -> float:
        """Mismatch between the stored tag and ``exp(-w(h))`` of the body."""
        return float(np.abs(self.tag - torus_tag(self.body, self.w)).max())

    def to_json(self) -> dict:
        return {"body": matrix_to_json(self.body), "w": self.w.to_json()}

    @classmethod
    def from_json(cls, obj) -> "SpecialDualElement":
        return e_w_map(matrix_from_json(obj["body"]), CartanForm.from_json(obj["w"]))


def e_w_map(body, w: CartanForm, tol: float = TOL_ALG) -> SpecialDualElement:
    body = _check_body(body, tol)
    return SpecialDualElement(body, torus_tag(body, w), w)


def e_w_inverse(A: SpecialDualElement) -> np.ndarray:
    """Forgetting map: drop the torus tag."""
    return np.array(A.body)


def special_multiply(A: SpecialDualElement, B: SpecialDualElement) -> SpecialDualElement:
    """Group law ``(x1, s1)(x2, s2) = (x1 + s1^-1 x2 s1, s1 s2)``."""
    s1 = A.tag
    return SpecialDualElement(A.body + dagger(s1) @ B.body @ s1, s1 @ B.tag, A.w)


def special_inverse(A: SpecialDualElement) -> SpecialDualElement:
    s = A.tag
    return SpecialDualElement(-(s @ A.body @ dagger(s)), dagger(s), A.w)


def mc_form_special(A: SpecialDualElement, tangent, tol: float = TOL_ALG):
    """Right Maurer-Cartan form ``(i dh + dn - [w(dh), n], -w(dh))``.

    ``tangent`` is a body direction ``i dh + dn`` (stack-aware).
    """
    tangent = _check_body(tangent, tol)
    x = body_cartan_coords(tangent)
    wdh = 1j * _full_r(x @ A.w.operator().T)[..., None] * np.eye(A.n)
    nil = np.triu(A.body, 1)
    first = tangent - (wdh @ nil - nil @ wdh)
    return first, -wdh


def mc_pair_special(first, eps) -> float:
    """Pairing with su(n); the torus component of ``dA A^-1`` is disregarded."""
    return im_killing(first, eps)
