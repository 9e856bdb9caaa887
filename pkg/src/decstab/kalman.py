"""Kalman canonical decomposition.

States are split into four groups, numbered as usual:

1. controllable and observable
2. controllable, unobservable
3. uncontrollable, observable
4. uncontrollable, unobservable

so that, after ``x -> T x``, the transformed matrices have the zero
pattern::

    [A11  0  A13  0 | B1]
    [A21 A22 A23 A24 | B2]
    [ 0   0  A33  0 |  0]
    [ 0   0  A43 A44 |  0]
    [C1   0  C3   0 |  D]

Each group is spanned by an orthonormal basis.  The groups themselves are
mutually orthogonal except groups 1 and 4, which in general cannot be.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import NumericalFailure
from .statespace import Spectrum, StateSpace, default_eig_tol, inf_norm, spectrum

_MAX_COND = 1e12


RANK_TOL_SAFETY = 1e3


def default_rank_tol(P: StateSpace) -> float:
    """``c * n * eps * max(||A||, ||B||, ||C||, 1)``.

    The safety factor ``c`` keeps the rounding noise accumulated over the
    staircase steps (a few ``eps * ||A||`` each) below the rank threshold.
    """
    n = max(P.n, 1)
    return RANK_TOL_SAFETY * n * np.finfo(float).eps * max(inf_norm(P.A), inf_norm(P.B), inf_norm(P.C), 1.0)


def zero_tol(P: StateSpace) -> float:
    return 1e-8 * (1.0 + inf_norm(P.A))


def reachable_basis(A: NDArray, B: NDArray, tol: float) -> NDArray:
    """Orthonormal basis of the smallest A-invariant subspace containing range(B).

    Orthogonal staircase reduction: at each stage the coupling block into
    the not-yet-reached states is compressed by an SVD, and directions with
    singular values above ``tol`` are accepted.  Working on the
    transformed matrix (rather than on Krylov vectors) keeps rounding
    noise at the ``eps * ||A||`` level.
    """
    n = A.shape[0]
    if n == 0 or B.size == 0:
        return np.zeros((n, 0))
    At = np.array(A, dtype=float)
    Q = np.eye(n)
    block = np.asarray(B, dtype=float)
    off = 0
    while off < n and block.size:
        U, s, _ = np.linalg.svd(block, full_matrices=True)
        r = int(np.sum(s > tol))
        if r == 0:
            break
        At[off:, :] = U.T @ At[off:, :]
        At[:, off:] = At[:, off:] @ U
        Q[:, off:] = Q[:, off:] @ U
        block = At[off + r:, off:off + r]
        off += r
    return Q[:, :off]


def orth_complement(Q: NDArray, n: int) -> NDArray:
    """Orthonormal basis of the orthogonal complement of range(Q) in R^n."""
    k = Q.shape[1]
    if k == 0:
        return np.eye(n)
    if k >= n:
        return np.zeros((n, 0))
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    return U[:, k:]


@dataclass(frozen=True)
class KalmanDecomposition:
    T: NDArray[np.float64]
    Tinv: NDArray[np.float64]
    block_dims: tuple[int, int, int, int]
    Atilde: NDArray[np.float64]
    Btilde: NDArray[np.float64]
    Ctilde: NDArray[np.float64]
    D: NDArray[np.float64]
    time_domain: str = "continuous"

    def _slices(self):
        edges = np.cumsum((0,) + tuple(self.block_dims))
        return [slice(int(edges[k]), int(edges[k + 1])) for k in range(4)]

    def a(self, i: int, j: int) -> NDArray:
        """Block ``A_ij`` of the transformed dynamics (1-based block indices)."""
        s = self._slices()
        return self.Atilde[s[i - 1], s[j - 1]]

    def b(self, i: int) -> NDArray:
        return self.Btilde[self._slices()[i - 1], :]

    def c(self, j: int) -> NDArray:
        return self.Ctilde[:, self._slices()[j - 1]]

    @property
    def n(self) -> int:
        return self.Atilde.shape[0]

    def block_spectrum(self, i: int, tol: float | None = None) -> Spectrum:
        tol = default_eig_tol(self.Atilde) if tol is None else tol
        return spectrum(self.a(i, i), tol)

    def structural_residual(self) -> float:
        """Largest entry among the blocks that must vanish."""
        zeros = [self.a(1, 2), self.a(1, 4), self.a(3, 1), self.a(3, 2), self.a(3, 4),
                 self.a(4, 1), self.a(4, 2), self.b(3), self.b(4), self.c(2), self.c(4)]
        return max((float(np.max(np.abs(Z))) for Z in zeros if Z.size), default=0.0)


def kalman_decompose(P: StateSpace, tol: float | None = None) -> KalmanDecomposition:
    """Split the state space of ``P`` into its four Kalman groups.

    Parameters
    ----------
    P : StateSpace
    tol : float, optional
        Rank tolerance for the staircase steps; defaults to
        ``1e3 * n * eps * max(||A||, ||B||, ||C||, 1)``.

    Returns
    -------
    KalmanDecomposition
        ``T`` maps original coordinates to Kalman coordinates, so
        ``Atilde = T A T^{-1}``.
    """
    n = P.n
    tol = default_rank_tol(P) if tol is None else tol
    if n == 0:
        E = np.zeros((0, 0))
        return KalmanDecomposition(E, E, (0, 0, 0, 0), E, np.zeros((0, P.n_inputs)),
                                   np.zeros((P.n_outputs, 0)), P.D, P.time_domain.value)
    A, B, C = P.A, P.B, P.C

    Vc = reachable_basis(A, B, tol)
    Vo = reachable_basis(A.T, C.T, tol)
    No = orth_complement(Vo, n)

    # observable part of the controllable subsystem
    Ac = Vc.T @ A @ Vc
    Cc = C @ Vc
    Zo = reachable_basis(Ac.T, Cc.T, tol)
    X1 = Vc @ Zo
    X2 = Vc @ orth_complement(Zo, Vc.shape[1])
    d1, d2 = X1.shape[1], X2.shape[1]

    d4 = No.shape[1] - d2
    if d4 < 0:
        raise NumericalFailure("controllable/unobservable split is inconsistent at this tolerance")
    if d4:
        U, _, _ = np.linalg.svd(No.T @ X2, full_matrices=True) if d2 else (np.eye(No.shape[1]), None, None)
        X4 = No @ U[:, d2:]
    else:
        X4 = np.zeros((n, 0))
    d3 = n - d1 - d2 - d4
    if d3 < 0:
        raise NumericalFailure("Kalman groups overlap at this tolerance")
    X3 = orth_complement(np.hstack([X1, X2, X4]), n)[:, :d3]

    Tinv = np.hstack([X1, X2, X3, X4])
    c = np.linalg.cond(Tinv)
    if not np.isfinite(c) or c > _MAX_COND:
        raise NumericalFailure(f"Kalman transformation is numerically singular (cond {c:.3g})")
    T = np.linalg.inv(Tinv)
    return KalmanDecomposition(
        T=T,
        Tinv=Tinv,
        block_dims=(d1, d2, d3, d4),
        Atilde=T @ A @ Tinv,
        Btilde=T @ B,
        Ctilde=C @ Tinv,
        D=P.D,
        time_domain=P.time_domain.value,
    )


def controllable_observable_part(dec: KalmanDecomposition) -> StateSpace:
    """Realization ``(A11, B1, C1, D)`` of the controllable and observable part."""
    return StateSpace(dec.a(1, 1), dec.b(1), dec.c(1), dec.D, dec.time_domain)


def centralized_fixed_modes(P: StateSpace, tol: float | None = None, eig_tol: float | None = None) -> Spectrum:
    """Fixed modes under an unconstrained static controller.

    These are exactly the modes in groups 2, 3 and 4.
    """
    dec = kalman_decompose(P, tol)
    eig_tol = default_eig_tol(P.A) if eig_tol is None else eig_tol
    return Spectrum.union([dec.block_spectrum(k, eig_tol) for k in (2, 3, 4)], eig_tol)
