"""State-space realizations, acceptable regions, spectra and LFT algebra.

Controllers and plants share one type.  A plant has ``n_u`` inputs and
``n_y`` outputs; a controller closed around it has ``n_y`` inputs and
``n_u`` outputs.  Feedback is positive, i.e. ``u = K y + r``, so that the
closed-loop dynamics matrix is ``A_P + B_P M D_K C_P`` for a static gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, IllPosedInterconnection, IndexOutOfRange, NumericalFailure

WELL_POSED_COND_LIMIT = 1e12


class TimeDomain(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class RegionKind(str, Enum):
    OPEN_LEFT_HALF_PLANE = "open_left_half_plane"
    OPEN_UNIT_DISK = "open_unit_disk"


def inf_norm(M: ArrayLike) -> float:
    """Max absolute row sum; 0 for empty matrices."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(M), axis=1)))


def _as_matrix(x: ArrayLike, rows: int | None = None, cols: int | None = None) -> NDArray[np.float64]:
    a = np.array(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if a.size == 0 and rows is not None and cols is not None:
            a = a.reshape(rows, cols)
        else:
            a = a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateSpace:
    """Dense realization ``(A, B, C, D)``.

    ``n = 0`` encodes a static gain; pass ``A``, ``B``, ``C`` as empty
    arrays or use :meth:`static`.
    """

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]
    D: NDArray[np.float64]
    time_domain: TimeDomain = TimeDomain.CONTINUOUS

    def __post_init__(self):
        D = _as_matrix(self.D)
        n_y, n_u = D.shape
        A = np.array(self.A, dtype=np.float64)
        n = A.shape[0] if A.ndim == 2 else int(np.sqrt(A.size))
        A = _as_matrix(A, n, n)
        B = _as_matrix(self.B, n, n_u)
        C = _as_matrix(self.C, n_y, n)
        if n == 0:
            B = _as_matrix(np.zeros((0, n_u)))
            C = _as_matrix(np.zeros((n_y, 0)))
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape != (n, n_u):
            raise DimensionMismatch(f"B has shape {B.shape}, expected {(n, n_u)}")
        if C.shape != (n_y, n):
            raise DimensionMismatch(f"C has shape {C.shape}, expected {(n_y, n)}")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "time_domain", TimeDomain(self.time_domain))

    @classmethod
    def static(cls, D: ArrayLike, time_domain: TimeDomain = TimeDomain.CONTINUOUS) -> "StateSpace":
        D = _as_matrix(D)
        n_y, n_u = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, n_u)), np.zeros((n_y, 0)), D, time_domain)

    @classmethod
    def zero(cls, n_out: int, n_in: int, time_domain: TimeDomain = TimeDomain.CONTINUOUS) -> "StateSpace":
        return cls.static(np.zeros((n_out, n_in)), time_domain)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.D.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.D.shape[0]

    @property
    def is_static(self) -> bool:
        return self.n == 0

    def freqresp(self, s: complex) -> NDArray[np.complex128]:
        """Transfer matrix ``C (sI - A)^{-1} B + D`` at one point."""
        if self.n == 0:
            return self.D.astype(complex)
        X = np.linalg.solve(s * np.eye(self.n) - self.A, self.B)
        return self.C @ X + self.D

    def similar(self, T: ArrayLike) -> "StateSpace":
        """Apply the state transformation ``x -> T x``."""
        T = np.asarray(T, dtype=float)
        Ti = np.linalg.inv(T)
        return StateSpace(T @ self.A @ Ti, T @ self.B, self.C @ Ti, self.D, self.time_domain)


@dataclass(frozen=True)
class Region:
    """Acceptable eigenvalue region with a boundary margin.

    Acceptable means ``Re(z) < -margin`` (half plane) or
    ``|z| < 1 - margin`` (unit disk).  The complement is closed, so the
    boundary itself counts as unacceptable.
    """

    kind: RegionKind = RegionKind.OPEN_LEFT_HALF_PLANE
    margin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegionKind(self.kind))
        if not np.isfinite(self.margin) or self.margin < 0:
            raise ValueError("margin must be finite and non-negative")
        if self.kind is RegionKind.OPEN_UNIT_DISK and self.margin >= 1:
            raise ValueError("unit-disk margin must be below 1")

    @classmethod
    def for_domain(cls, time_domain: TimeDomain, margin: float = 0.0) -> "Region":
        if TimeDomain(time_domain) is TimeDomain.DISCRETE:
            return cls(RegionKind.OPEN_UNIT_DISK, margin)
        return cls(RegionKind.OPEN_LEFT_HALF_PLANE, margin)

    @property
    def time_domain(self) -> TimeDomain:
        if self.kind is RegionKind.OPEN_UNIT_DISK:
            return TimeDomain.DISCRETE
        return TimeDomain.CONTINUOUS

    def check_domain(self, sys: StateSpace) -> None:
        if sys.time_domain is not self.time_domain:
            raise ValueError(
                f"region {self.kind.value} does not apply to a {sys.time_domain.value}-time system"
            )

    def stability_measure(self, z) -> NDArray[np.float64]:
        """Signed distance-like measure; negative means acceptable."""
        z = np.asarray(z, dtype=complex)
        if self.kind is RegionKind.OPEN_LEFT_HALF_PLANE:
            return z.real + self.margin
        return np.abs(z) - 1.0 + self.margin

    def contains(self, z) -> NDArray[np.bool_] | bool:
        out = self.stability_measure(z) < 0
        return bool(out) if np.ndim(out) == 0 else out

    def count_unacceptable(self, eigenvalues) -> int:
        eigenvalues = np.asarray(eigenvalues, dtype=complex)
        if eigenvalues.size == 0:
            return 0
        return int(np.sum(self.stability_measure(eigenvalues) >= 0))

    def abscissa(self, eigenvalues) -> float:
        """Largest stability measure over ``eigenvalues`` (-inf if empty)."""
        eigenvalues = np.asarray(eigenvalues, dtype=complex)
        if eigenvalues.size == 0:
            return -np.inf
        return float(np.max(self.stability_measure(eigenvalues)))


def default_eig_tol(M: ArrayLike) -> float:
    return 1e-6 * max(1.0, inf_norm(M))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with multiplicities obtained by clustering within ``tol``."""

    eigenvalues: NDArray[np.complex128]
    tol: float = 1e-6
    modes: tuple[tuple[complex, int], ...] = field(init=False)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=complex).ravel()
        ev = ev[np.lexsort((ev.imag, ev.real))]
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "modes", tuple(_cluster(ev, self.tol)))

    def __len__(self) -> int:
        return self.eigenvalues.size

    def __iter__(self):
        return iter(self.modes)

    @property
    def values(self) -> list[complex]:
        return [z for z, _ in self.modes]

    def multiplicity(self, z: complex, tol: float | None = None) -> int:
        tol = self.tol if tol is None else tol
        return sum(mu for w, mu in self.modes if abs(w - z) <= tol)

    def contains(self, z: complex, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return bool(self.eigenvalues.size) and bool(np.min(np.abs(self.eigenvalues - z)) <= tol)

    def is_conjugate_closed(self, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        if not len(self):
            return True
        return match_spectra(self.eigenvalues, self.eigenvalues.conj()) <= tol

    @classmethod
    def union(cls, parts: Iterable["Spectrum"], tol: float | None = None) -> "Spectrum":
        parts = list(parts)
        if tol is None:
            tol = max([p.tol for p in parts], default=1e-6)
        ev = np.concatenate([p.eigenvalues for p in parts]) if parts else np.zeros(0, complex)
        return cls(ev, tol)


def _cluster(ev: NDArray[np.complex128], tol: float) -> list[tuple[complex, int]]:
    # single-linkage grouping
    n = ev.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(ev[i] - ev[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    modes = []
    for idx in groups.values():
        z = complex(np.mean(ev[idx]))
        if abs(z.imag) <= tol:
            z = complex(z.real, 0.0)
        modes.append((z, len(idx)))
    modes.sort(key=lambda t: (t[0].real, t[0].imag))
    return modes


def spectrum(M: ArrayLike, tol: float | None = None) -> Spectrum:
    """Eigenvalues of a square matrix, clustered into modes."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"spectrum needs a square matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalFailure("matrix has non-finite entries")
    tol = default_eig_tol(M) if tol is None else tol
    if M.shape[0] == 0:
        return Spectrum(np.zeros(0, complex), tol)
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration did not converge: {exc}") from exc
    return Spectrum(ev, tol)


def match_spectra(a, b) -> float:
    """Largest distance in the optimal one-to-one pairing of two multisets.

    Returns ``inf`` when the sizes differ.
    """
    a = np.asarray(getattr(a, "eigenvalues", a), dtype=complex).ravel()
    b = np.asarray(getattr(b, "eigenvalues", b), dtype=complex).ravel()
    if a.size != b.size:
        return np.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    # optimal assignment on squared distances
    rows, cols = linear_sum_assignment(cost**2)
    return float(np.max(cost[rows, cols]))


def _loop_factors(P: StateSpace, K: StateSpace, cond_limit: float):
    if K.n_inputs != P.n_outputs or K.n_outputs != P.n_inputs:
        raise DimensionMismatch(
            f"controller is {K.n_outputs}x{K.n_inputs}, plant needs {P.n_inputs}x{P.n_outputs}"
        )
    if K.time_domain is not P.time_domain:
        raise DimensionMismatch("plant and controller live in different time domains")
    I_u = np.eye(P.n_inputs)
    I_y = np.eye(P.n_outputs)
    W = I_u - K.D @ P.D
    c = np.linalg.cond(W) if W.size else 1.0
    if not np.isfinite(c) or c > cond_limit:
        raise IllPosedInterconnection(f"cond(I - D_K D_P) = {c:.3g} exceeds {cond_limit:.3g}")
    M = np.linalg.inv(W)
    N = np.linalg.inv(I_y - P.D @ K.D)
    return M, N


def closed_loop_a(P: StateSpace, K: StateSpace, cond_limit: float = WELL_POSED_COND_LIMIT) -> NDArray[np.float64]:
    """Closed-loop dynamics matrix of the positive-feedback interconnection."""
    M, N = _loop_factors(P, K, cond_limit)
    top = np.hstack([P.A + P.B @ M @ K.D @ P.C, P.B @ M @ K.C])
    bottom = np.hstack([K.B @ N @ P.C, K.A + K.B @ P.D @ M @ K.C])
    return np.vstack([top, bottom])


def lft_close(P: StateSpace, K: StateSpace, cond_limit: float = WELL_POSED_COND_LIMIT) -> StateSpace:
    """Realization of the map ``r -> y`` when ``K`` is closed around ``P``.

    States are ordered plant first, controller second.
    """
    M, N = _loop_factors(P, K, cond_limit)
    A = np.vstack([
        np.hstack([P.A + P.B @ M @ K.D @ P.C, P.B @ M @ K.C]),
        np.hstack([K.B @ N @ P.C, K.A + K.B @ P.D @ M @ K.C]),
    ])
    B = np.vstack([P.B @ M, K.B @ P.D @ M])
    C = np.hstack([N @ P.C, P.D @ M @ K.C])
    return StateSpace(A, B, C, P.D @ M, P.time_domain)


def add_controllers(K1: StateSpace, K2: StateSpace) -> StateSpace:
    """Parallel connection ``K1 + K2``."""
    if K1.D.shape != K2.D.shape:
        raise DimensionMismatch(f"cannot add {K1.D.shape} and {K2.D.shape} systems")
    if K1.time_domain is not K2.time_domain:
        raise DimensionMismatch("controllers live in different time domains")
    n1, n2 = K1.n, K2.n
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = K1.A
    A[n1:, n1:] = K2.A
    return StateSpace(A, np.vstack([K1.B, K2.B]), np.hstack([K1.C, K2.C]), K1.D + K2.D, K1.time_domain)


def embed_siso(k: StateSpace, i: int, j: int, n_u: int, n_y: int) -> StateSpace:
    """Place a SISO controller at entry ``(i, j)`` (1-based) of an ``n_u x n_y`` controller."""
    if k.D.shape != (1, 1):
        raise DimensionMismatch("embed_siso needs a SISO system")
    if not (1 <= i <= n_u and 1 <= j <= n_y):
        raise IndexOutOfRange(f"index ({i}, {j}) outside 1..{n_u} x 1..{n_y}")
    B = np.zeros((k.n, n_y))
    B[:, j - 1] = k.B[:, 0]
    C = np.zeros((n_u, k.n))
    C[i - 1, :] = k.C[0, :]
    D = np.zeros((n_u, n_y))
    D[i - 1, j - 1] = k.D[0, 0]
    return StateSpace(k.A, B, C, D, k.time_domain)


def siso_channel(P: StateSpace, i: int, j: int) -> StateSpace:
    """The map from input ``i`` to output ``j`` (1-based), all states kept."""
    if not (1 <= i <= P.n_inputs and 1 <= j <= P.n_outputs):
        raise IndexOutOfRange(f"channel ({i}, {j}) outside the plant's I/O range")
    return StateSpace(P.A, P.B[:, [i - 1]], P.C[[j - 1], :], P.D[[j - 1]][:, [i - 1]], P.time_domain)
