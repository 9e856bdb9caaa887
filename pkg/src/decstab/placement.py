"""Single-input pole placement."""

from __future__ import annotations

import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import IllConditionedPlacement, UncontrollablePair
from .statespace import inf_norm, match_spectra

log = logging.getLogger(__name__)

PLACEMENT_COND_LIMIT = 1e12


def _arnoldi(A: NDArray, b: NDArray):
    """Orthonormal Krylov basis Q with ``Q^T b = beta e1`` and ``H = Q^T A Q`` upper Hessenberg."""
    k = A.shape[0]
    Q = np.zeros((k, k))
    beta = float(np.linalg.norm(b))
    if beta == 0:
        return Q, np.zeros((k, k)), beta, np.zeros(max(k - 1, 0))
    Q[:, 0] = b / beta
    sub = np.zeros(max(k - 1, 0))
    for c in range(1, k):
        w = A @ Q[:, c - 1]
        for _ in range(2):
            w = w - Q[:, :c] @ (Q[:, :c].T @ w)
        h = float(np.linalg.norm(w))
        sub[c - 1] = h
        if h == 0:
            break
        Q[:, c] = w / h
    H = Q.T @ A @ Q
    return Q, H, beta, sub


def _check_targets(targets, k) -> NDArray[np.complex128]:
    p = np.asarray(targets, dtype=complex).ravel()
    if p.size != k:
        raise ValueError(f"need {k} target poles, got {p.size}")
    if match_spectra(p, p.conj()) > 1e-9 * (1 + np.max(np.abs(p), initial=0)):
        raise ValueError("target poles must be closed under conjugation")
    return p


def _row_times_char_poly(v: NDArray, H: NDArray, p: NDArray) -> NDArray:
    """``v @ prod(H - p_i I)`` evaluated with real arithmetic."""
    rem = list(p)
    while rem:
        z = rem.pop(0)
        if abs(z.imag) > 0:
            # pair with its conjugate
            idx = int(np.argmin([abs(w - np.conj(z)) for w in rem]))
            rem.pop(idx)
            vH = v @ H
            v = vH @ H - 2.0 * z.real * vH + abs(z) ** 2 * v
        else:
            v = v @ H - z.real * v
    return v


def place_poles(A: ArrayLike, b: ArrayLike, targets, tol: float | None = None) -> NDArray[np.float64]:
    """State feedback ``F`` (1 x k) with ``eig(A - b F) = targets``.

    Ackermann's formula applied in controller-Hessenberg coordinates,
    where the controllability matrix is triangular.  Repeated targets are
    allowed.

    Raises
    ------
    UncontrollablePair
        If a Krylov subdiagonal falls below ``tol``.
    IllConditionedPlacement
        If the controllability matrix is worse conditioned than 1e12 and
        the a-posteriori check fails.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    k = A.shape[0]
    if A.shape != (k, k) or b.shape[0] != k:
        raise ValueError("A must be square and b must match its size")
    p = _check_targets(targets, k)
    if k == 0:
        return np.zeros((1, 0))
    if tol is None:
        tol = k * np.finfo(float).eps * max(inf_norm(A), inf_norm(b), 1.0)
    Q, H, beta, sub = _arnoldi(A, b[:, 0])
    if beta <= tol or np.any(sub <= tol):
        raise UncontrollablePair("(A, b) is not controllable at the given tolerance")
    ek = np.zeros(k)
    ek[-1] = 1.0
    row = _row_times_char_poly(ek, H, p)
    # last diagonal entry of the triangular controllability matrix
    scale = beta * float(np.prod(sub))
    F = (row / scale) @ Q.T
    F = F.reshape(1, k)

    # conditioning of [b, Hb, ...] in Hessenberg coordinates (same as original)
    Kry = np.zeros((k, k))
    v = np.zeros(k)
    v[0] = beta
    for c in range(k):
        Kry[:, c] = v
        v = H @ v
    cond = np.linalg.cond(Kry)
    if cond > PLACEMENT_COND_LIMIT:
        err = match_spectra(np.linalg.eigvals(A - b @ F), p)
        if err > 1e-6 * (1.0 + inf_norm(A)):
            raise IllConditionedPlacement(
                f"controllability matrix condition {cond:.3g}; placement error {err:.3g}"
            )
        log.warning("pole placement with controllability condition %.3g", cond)
    return F
