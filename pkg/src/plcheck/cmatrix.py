"""
Dense complex matrix kernel
~~~~~~~~~~~~~~~~~~~~~~~~~~~
Predicates, spectral matrix functions of Hermitian matrices and their
Frechet derivatives, the unit-upper/diagonal factorization ``P = N D N^H``,
finite-difference pushforwards and JSON matrix I/O.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  All routines
are pure functions; nothing here is mutated after construction.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    EvaluationFailed,
    NonFinite,
    NotHermitian,
    NotPositiveDefinite,
)

TOL_ALG = 1e-10
FD_STEP = 1e-5


def as_matrix(M, n: int | None = None) -> np.ndarray:
    """Return ``M`` as a finite square complex array, optionally of size n."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise DimensionMismatch(f"expected {n}x{n}, got {A.shape[0]}x{A.shape[0]}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has NaN or Inf entries")
    return A


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def herm_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + dagger(M))


def antiherm_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M - dagger(M))


# --- predicates -----------------------------------------------------------

def is_hermitian(M, tol: float = TOL_ALG) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M - dagger(M)), initial=0.0) <= tol)


def is_antihermitian(M, tol: float = TOL_ALG) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M + dagger(M)), initial=0.0) <= tol)


def is_unitary(M, tol: float = TOL_ALG) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M @ dagger(M) - np.eye(M.shape[0]))) <= tol)


def has_unit_det(M, tol: float = TOL_ALG) -> bool:
    return bool(abs(np.linalg.det(M) - 1.0) <= tol)


def is_positive_definite(M, tol: float = TOL_ALG) -> bool:
    if not is_hermitian(M, tol):
        return False
    return bool(np.linalg.eigvalsh(herm_part(np.asarray(M))).min() > tol)


def is_unit_upper(M, tol: float = TOL_ALG) -> bool:
    M = np.asarray(M)
    lower = np.tril(M, -1)
    return bool(
        np.max(np.abs(lower), initial=0.0) <= tol
        and np.max(np.abs(np.diag(M) - 1.0)) <= tol
    )


# --- spectral functions -----------------------------------------------------

def _check_hermitian(H, tol):
    H = as_matrix(H)
    resid = np.max(np.abs(H - dagger(H)), initial=0.0)
    if resid > tol * max(1.0, np.max(np.abs(H))):
        raise NotHermitian(f"symmetry residual {resid:.3e} exceeds tolerance")
    return herm_part(H)


def herm_func(H, func: Callable[[np.ndarray], np.ndarray], tol: float = TOL_ALG):
    """Apply a scalar function to a Hermitian matrix through its eigenbasis."""
    H = _check_hermitian(H, tol)
    w, V = np.linalg.eigh(H)
    return (V * func(w)) @ dagger(V)


def herm_exp(H, tol: float = TOL_ALG) -> np.ndarray:
    """Exponential of a Hermitian matrix; the result is positive-definite."""
    return herm_func(H, np.exp, tol)


def herm_log(P, tol: float = TOL_ALG) -> np.ndarray:
    """Unique Hermitian logarithm of a positive-definite matrix."""
    P = _check_hermitian(P, tol)
    w, V = np.linalg.eigh(P)
    if w.min() <= tol:
        raise NotPositiveDefinite(f"smallest eigenvalue {w.min():.3e}")
    return (V * np.log(w)) @ dagger(V)


def _divided_differences(w, fw, fpw):
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) <= 1e-9 * (1.0 + np.abs(w)[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        F = (fw[:, None] - fw[None, :]) / np.where(close, 1.0, dw)
    # first divided difference degenerates to the derivative at the midpoint
    mid = 0.5 * (w[:, None] + w[None, :])
    return np.where(close, fpw(mid), F)


def herm_func_derivative(H, dH, func, dfunc) -> np.ndarray:
    """Frechet derivative of ``H -> func(H)`` along ``dH`` (Daleckii-Krein).

    ``dH`` may be a single matrix or a stack of shape ``(m, n, n)``.
    """
    H = herm_part(np.asarray(H, dtype=complex))
    w, V = np.linalg.eigh(H)
    F = _divided_differences(w, func(w), dfunc)
    Vh = dagger(V)
    return V @ (F * (Vh @ np.asarray(dH, dtype=complex) @ V)) @ Vh


def herm_exp_derivative(H, dH) -> np.ndarray:
    return herm_func_derivative(H, dH, np.exp, np.exp)


def herm_log_derivative(P, dP) -> np.ndarray:
    return herm_func_derivative(P, dP, np.log, lambda x: 1.0 / x)


# --- structured factorization ---------------------------------------------

def udu_factor(P, tol: float = TOL_ALG) -> tuple[np.ndarray, np.ndarray]:
    """Factor a positive-definite matrix as ``P = N D N^H``.

    ``N`` is unit upper triangular and ``D`` positive diagonal.  Computed from
    the Cholesky factor of the index-reversed matrix ``J P J``.

    Returns
    -------
    N, D : ndarray
    """
    P = _check_hermitian(P, tol)
    n = P.shape[0]
    rev = slice(None, None, -1)
    try:
        L = np.linalg.cholesky(P[rev, rev])
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("failed pivot in factorization") from exc
    U = L[rev, rev]  # upper triangular, U U^H = P
    c = np.real(np.diag(U))
    if c.min() <= 0 or c.min() ** 2 <= tol:
        raise NotPositiveDefinite("non-positive pivot in factorization")
    N = U / c[None, :]
    np.fill_diagonal(N, 1.0)
    return N, np.diag(c**2).astype(complex) if n else np.zeros((0, 0), complex)


def udu_derivative(N, D, dP) -> tuple[np.ndarray, np.ndarray]:
    """Derivative of the ``udu_factor`` factors along a Hermitian ``dP``.

    With ``Q = N^-1 dP N^-H`` one has ``Q = L D + dD + D L^H`` for the strictly
    upper ``L = N^-1 dN``, which is solved entrywise.  ``dP`` may be stacked.
    """
    d = np.real(np.diag(D))
    Ninv = np.linalg.inv(N)
    Q = Ninv @ np.asarray(dP, dtype=complex) @ dagger(Ninv)
    L = np.triu(Q, 1) / d[None, :]
    dD = np.real(np.diagonal(Q, axis1=-2, axis2=-1))
    dN = N @ L
    eye = np.eye(N.shape[0])
    return dN, dD[..., None] * eye


# --- finite differences -----------------------------------------------------

def default_step(base) -> float:
    """Displacement length ``FD_STEP * (1 + |base|)`` used for probes at ``base``."""
    return FD_STEP * (1.0 + float(np.linalg.norm(np.asarray(base))))


def fd_pushforward(fn, base, direction, step: float | None = None):
    """Central-difference derivative of ``fn`` at ``base`` along ``direction``.

    ``step`` is the distance the probe points move from ``base``, so the curve
    parameter advances by ``step / |direction|``.  Error is O(step**2) for
    smooth maps and exact (to roundoff) for linear ones.
    """
    base = np.asarray(base)
    direction = np.asarray(direction)
    if step is None:
        step = default_step(base)
    if not step > 0:
        raise ValueError("step must be positive")
    length = float(np.linalg.norm(direction))
    h = step / length if length > 0 else step
    try:
        plus = np.asarray(fn(base + h * direction))
        minus = np.asarray(fn(base - h * direction))
    except Exception as exc:  # noqa: BLE001 - any probe failure is reported
        raise EvaluationFailed(f"map raised at probe point: {exc!r}") from exc
    if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
        raise EvaluationFailed("map returned non-finite values at a probe point")
    return (plus - minus) / (2.0 * h)


def fd_pushforward4(fn, base, direction, step: float | None = None):
    """Fourth-order central stencil (Richardson combination of two steps)."""
    d1 = fd_pushforward(fn, base, direction, step)
    if step is None:
        step = default_step(base)
    d2 = fd_pushforward(fn, base, direction, 2.0 * step)
    return (4.0 * d1 - d2) / 3.0


# --- JSON I/O ----------------------------------------------------------------

def matrix_to_json(M) -> dict:
    M = as_matrix(M)
    return {"dim": M.shape[0], "re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != im.shape:
        raise DimensionMismatch("re/im parts differ in shape")
    M = as_matrix(re + 1j * im)
    if "dim" in obj and int(obj["dim"]) != M.shape[0]:
        raise DimensionMismatch(f"declared dim {obj['dim']} != {M.shape[0]}")
    return M
