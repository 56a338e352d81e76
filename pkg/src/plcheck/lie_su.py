"""
Structure theory of su(n) inside sl(n, C).

Conventions used throughout the package:

* Killing form ``K(X, Y) = 2n tr(XY)`` on sl(n, C); the Manin pairing is
  ``k = Im K``.
* An element ``a`` of the coalgebra is stored as its Killing dual
  ``alpha = K(a)``, an anti-Hermitian traceless matrix, so that
  ``<a, eps> = K(alpha, eps)``.
* Cartan elements are ``h = i diag(r)`` with ``sum(r) = 0``; their
  coordinates are the first ``n - 1`` entries of ``r``.
* Positive roots are the strictly upper triangular matrix units.
* A :class:`CartanForm` stores a real antisymmetric bilinear form ``S`` in
  Cartan coordinates.  The operator ``u`` on the Cartan subalgebra is defined
  by ``K(u(a), b) = S(a, b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cmatrix import TOL_ALG, as_matrix, dagger, is_unitary
from .errors import ConfigInvalid, DimensionMismatch, NotCartan, NotUnitary

TAU_T = 1e-8


# --- bases and coordinates ---------------------------------------------------

@lru_cache(maxsize=None)
def _su_basis(n: int) -> np.ndarray:
    B = []
    for j in range(n):
        for k in range(j + 1, n):
            E = np.zeros((n, n), complex)
            E[j, k], E[k, j] = 1.0, -1.0
            B.append(E)
            E = np.zeros((n, n), complex)
            E[j, k] = E[k, j] = 1j
            B.append(E)
    for j in range(n - 1):
        E = np.zeros((n, n), complex)
        E[j, j], E[n - 1, n - 1] = 1j, -1j
        B.append(E)
    out = np.array(B).reshape(len(B), n, n)
    out.setflags(write=False)
    return out


def su_basis(n: int) -> np.ndarray:
    """Real basis of su(n), shape ``(n**2 - 1, n, n)``.

    Ordered as ``E_jk - E_kj, i(E_jk + E_kj)`` for ``j < k`` followed by the
    Cartan generators ``i(E_jj - E_nn)``.
    """
    return _su_basis(n)


def su_dim(n: int) -> int:
    return n * n - 1


def su_coords(X) -> np.ndarray:
    """Coordinates of an anti-Hermitian traceless matrix in :func:`su_basis`.

    Accepts stacks of shape ``(..., n, n)``.
    """
    X = np.asarray(X)
    n = X.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    off = X[..., iu, ju]
    pairs = np.stack([off.real, off.imag], axis=-1).reshape(*X.shape[:-2], -1)
    diag = np.diagonal(X, axis1=-2, axis2=-1)[..., : n - 1].imag
    return np.concatenate([pairs, diag], axis=-1)


def su_from_coords(c, n: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.tensordot(c, su_basis(n), axes=([-1], [0]))


def sl_coords(X) -> np.ndarray:
    """Real coordinates of sl(n, C) in the basis ``su_basis + i*su_basis``."""
    X = np.asarray(X)
    ah = 0.5 * (X - dagger(X))
    h = 0.5 * (X + dagger(X))
    return np.concatenate([su_coords(ah), su_coords(-1j * h)], axis=-1)


def sl_from_coords(c, n: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    d = su_dim(n)
    return su_from_coords(c[..., :d], n) + 1j * su_from_coords(c[..., d:], n)


def cartan_coords(h) -> np.ndarray:
    """Coordinates ``r[:n-1]`` of ``h = i diag(r)``."""
    h = np.asarray(h)
    return np.diagonal(h, axis1=-2, axis2=-1)[..., :-1].imag


def cartan_from_coords(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = np.concatenate([x, -x.sum(axis=-1, keepdims=True)], axis=-1)
    return 1j * r[..., None] * np.eye(n)


def _full_r(x):
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, -x.sum(axis=-1, keepdims=True)], axis=-1)


def cartan_gram(n: int) -> np.ndarray:
    """Gram matrix of ``-K / 2n`` on Cartan coordinates, ``I + 11^T``."""
    return np.eye(n - 1) + np.ones((n - 1, n - 1))


# --- Killing form --------------------------------------------------------------

def killing(X, Y):
    """``K(X, Y) = 2n tr(XY)``; complex bilinear, symmetric, stack-aware."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape[-2:] != Y.shape[-2:]:
        raise DimensionMismatch(f"{X.shape[-2:]} vs {Y.shape[-2:]}")
    n = X.shape[-1]
    return 2 * n * np.einsum("...ij,...ji->...", X, Y)


def im_killing(X, Y):
    """Manin pairing ``k(X, Y) = Im K(X, Y)``."""
    return np.imag(killing(X, Y))


# --- domain types ----------------------------------------------------------------

@dataclass(frozen=True)
class CoalgebraVector:
    """Element of the coalgebra, stored through its Killing dual ``alpha``."""

    alpha: np.ndarray
    tol: float = field(default=TOL_ALG, repr=False, compare=False)

    def __post_init__(self):
        A = as_matrix(self.alpha)
        scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
        if np.max(np.abs(A + dagger(A)), initial=0.0) > self.tol * scale:
            raise ValueError("alpha is not anti-Hermitian")
        if abs(np.trace(A)) > self.tol * scale:
            raise ValueError("alpha is not traceless")
        A = 0.5 * (A - dagger(A))
        A = A - np.trace(A) / A.shape[0] * np.eye(A.shape[0])
        A.setflags(write=False)
        object.__setattr__(self, "alpha", A)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def from_coords(cls, c, n: int) -> "CoalgebraVector":
        return cls(su_from_coords(c, n))

    def coords(self) -> np.ndarray:
        return su_coords(self.alpha)

    def to_json(self) -> dict:
        from .cmatrix import matrix_to_json

        return {"alpha": matrix_to_json(self.alpha)}

    @classmethod
    def from_json(cls, obj) -> "CoalgebraVector":
        from .cmatrix import matrix_from_json

        if "alpha" in obj:
            return cls(matrix_from_json(obj["alpha"]))
        if "coords" in obj:
            return cls.from_coords(obj["coords"], int(obj["n"]))
        return cls(matrix_from_json(obj))


def as_alpha(a) -> np.ndarray:
    """Accept a :class:`CoalgebraVector` or a raw matrix."""
    if isinstance(a, CoalgebraVector):
        return a.alpha
    return np.asarray(a, dtype=complex)


@dataclass(frozen=True, eq=False)
class CartanForm:
    """Real antisymmetric form on Cartan coordinates (``u`` or ``w``)."""

    matrix: np.ndarray
    discarded: float = field(default=0.0, compare=False)

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if S.shape[0] != S.shape[1]:
            raise DimensionMismatch(f"Cartan form must be square, got {S.shape}")
        if not np.all(np.isfinite(S)):
            raise ConfigInvalid("Cartan form has non-finite entries")
        sym = 0.5 * (S + S.T)
        S = 0.5 * (S - S.T)
        S.setflags(write=False)
        object.__setattr__(self, "matrix", S)
        object.__setattr__(
            self, "discarded", float(self.discarded) + float(np.linalg.norm(sym))
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CartanForm):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(np.array_equal(self.matrix, other.matrix))

    __hash__ = None

    @classmethod
    def zero(cls, n: int) -> "CartanForm":
        return cls(np.zeros((n - 1, n - 1)))

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.rank + 1

    def operator(self) -> np.ndarray:
        """Matrix of ``u`` acting on Cartan coordinates."""
        n = self.n
        return np.linalg.solve(cartan_gram(n), self.matrix.T) / (-2.0 * n)

    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def to_json(self) -> list:
        return self.matrix.tolist()

    @classmethod
    def from_json(cls, obj) -> "CartanForm":
        return cls(np.asarray(obj, dtype=float))


@dataclass(frozen=True)
class PoissonParams:
    """Parameters of the Poisson structure.

    ``family='generic'`` is the ``(t, u)`` family with ``|t| >= tau_t``;
    ``family='special'`` is the ``t = 0`` family and ``u`` then holds ``w``.
    """

    t: float
    u: CartanForm
    family: str = "generic"
    tau_t: float = field(default=TAU_T, compare=False)

    def __post_init__(self):
        if self.family not in ("generic", "special"):
            raise ConfigInvalid(f"unknown family {self.family!r}")
        if not isinstance(self.u, CartanForm):
            object.__setattr__(self, "u", CartanForm(self.u))
        if self.family == "generic" and not abs(self.t) >= self.tau_t:
            raise ConfigInvalid(f"|t|={abs(self.t):.2e} below tau_t={self.tau_t:.0e}")
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def generic(cls, t: float, u=None, n: int | None = None) -> "PoissonParams":
        if u is None:
            u = CartanForm.zero(n)
        return cls(t, u if isinstance(u, CartanForm) else CartanForm(u))

    @classmethod
    def special(cls, w) -> "PoissonParams":
        return cls(0.0, w if isinstance(w, CartanForm) else CartanForm(w), "special")

    @property
    def n(self) -> int:
        return self.u.n

    @property
    def w(self) -> CartanForm:
        return self.u

    def with_t(self, t: float) -> "PoissonParams":
        return PoissonParams(t, self.u, self.family, self.tau_t)

    def to_json(self) -> dict:
        return {"t": self.t, "u": self.u.to_json(), "family": self.family}

    @classmethod
    def from_json(cls, obj) -> "PoissonParams":
        fam = obj.get("family", "generic")
        form = obj.get("u", obj.get("w"))
        return cls(float(obj.get("t", 0.0)), CartanForm.from_json(form), fam)


# --- operations ----------------------------------------------------------------

def coadjoint_act(g, a, tol: float = TOL_ALG):
    """``alpha -> g alpha g^-1`` for ``g`` in SU(n)."""
    g = as_matrix(g)
    if not is_unitary(g, tol):
        raise NotUnitary("coadjoint action needs a unitary group element")
    out = g @ as_alpha(a) @ dagger(g)
    return CoalgebraVector(out) if isinstance(a, CoalgebraVector) else out


def bracket(X, Y):
    return X @ Y - Y @ X


@lru_cache(maxsize=None)
def _sl_basis(n: int) -> np.ndarray:
    B = su_basis(n)
    return np.concatenate([B, 1j * B])


def ad_operator(alpha) -> np.ndarray:
    """Real matrix of ``X -> [alpha, X]`` on sl(n, C) in :func:`sl_coords`."""
    alpha = as_alpha(alpha)
    n = alpha.shape[0]
    if abs(np.trace(alpha)) > TOL_ALG * max(1.0, np.abs(alpha).max()):
        raise DimensionMismatch("ad_operator expects a traceless matrix")
    images = alpha @ _sl_basis(n) - _sl_basis(n) @ alpha
    return sl_coords(images).T


def u_apply(u: CartanForm, h, tol: float = TOL_ALG) -> np.ndarray:
    """Apply the Cartan operator of ``u`` to a diagonal Cartan element ``h``."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[-1]
    if n != u.n:
        raise DimensionMismatch(f"form of rank {u.rank} vs n={n}")
    off = h - np.diagonal(h, axis1=-2, axis2=-1)[..., None] * np.eye(n)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if np.max(np.abs(off), initial=0.0) > tol * scale:
        raise NotCartan("element has off-diagonal mass")
    d = np.diagonal(h, axis1=-2, axis2=-1)
    if np.max(np.abs(d.real), initial=0.0) > tol * scale or abs(d.sum()) > tol * scale:
        raise NotCartan("element is not anti-Hermitian traceless diagonal")
    return cartan_from_coords(cartan_coords(h) @ u.operator().T, n)


def u_apply_coords(u: CartanForm, x) -> np.ndarray:
    """Cartan operator on coordinates, returning full ``r`` vectors."""
    return _full_r(np.asarray(x) @ u.operator().T)


def dominant_project(a) -> np.ndarray:
    """Eigenvalues of ``i alpha`` in descending order (positive Weyl chamber)."""
    alpha = as_alpha(a)
    H = 1j * alpha
    return np.linalg.eigvalsh(0.5 * (H + dagger(H)))[::-1]


# --- the dual algebra ------------------------------------------------------------

def dual_algebra_basis(u: CartanForm) -> np.ndarray:
    """Real basis of the dual algebra ``n + {i(h + i u(h))}``.

    ``E_jk, i E_jk`` for ``j < k``, then the twisted Cartan generators for
    each Cartan basis element ``i(E_jj - E_nn)``.
    """
    n = u.n
    B = []
    for j in range(n):
        for k in range(j + 1, n):
            E = np.zeros((n, n), complex)
            E[j, k] = 1.0
            B.append(E)
            B.append(1j * E)
    if n > 1:
        eye = np.eye(n - 1)
        h = cartan_from_coords(eye, n)
        B.extend(1j * (h + 1j * cartan_from_coords(eye @ u.operator().T, n)))
    return np.array(B).reshape(len(B), n, n)


def in_dual_algebra(X, u: CartanForm, tol: float = TOL_ALG) -> bool:
    """Membership test for the dual algebra of ``u``."""
    X = np.asarray(X)
    if np.max(np.abs(np.tril(X, -1)), initial=0.0) > tol:
        return False
    d = np.diag(X)
    if abs(d.sum()) > tol:
        return False
    # diagonal is i(h + i u(h)) = -r - i u(r): real part fixes h
    x = -d.real[:-1]
    expect = -_full_r(x @ u.operator().T)
    return bool(np.max(np.abs(d.imag - expect)) <= tol)


# --- random sampling -------------------------------------------------------------

def random_su(rng: np.random.Generator, n: int, norm_range=(0.1, 2.0)) -> np.ndarray:
    """Gaussian coefficients in the su(n) basis, norm clamped to ``norm_range``."""
    c = rng.standard_normal(su_dim(n))
    nrm = np.linalg.norm(c)
    lo, hi = norm_range
    c = c * (np.clip(nrm, lo, hi) / nrm)
    return su_from_coords(c, n)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed SU(n) element via QR of a complex Gaussian matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    Q = Q * (d / np.abs(d))[None, :]
    det = np.linalg.det(Q)
    return Q / det ** (1.0 / n)


def random_cartan_form(rng: np.random.Generator, n: int) -> CartanForm:
    S = rng.uniform(-1.0, 1.0, (n - 1, n - 1))
    return CartanForm(np.triu(S, 1) - np.triu(S, 1).T)
