"""Sparsity patterns and structured static gains.

Index pairs are 1-based ``(i, j)``: controller output ``i`` (plant input
``u_i``) may use measurement ``j`` (plant output ``y_j``).  The order in
which admissible pairs are listed is significant, since the gain
truncation below keeps a prefix of that list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatch, IndexOutOfRange, ValidationError
from .statespace import StateSpace, inf_norm

SPARSITY_TOL = 1e-8
_FREQ_POINTS = 8


@dataclass(frozen=True)
class SparsityPattern:
    n_u: int
    n_y: int
    admissible: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_u < 1 or self.n_y < 1:
            raise ValidationError("pattern needs n_u >= 1 and n_y >= 1")
        pairs = tuple((int(i), int(j)) for i, j in self.admissible)
        if len(set(pairs)) != len(pairs):
            raise ValidationError("admissible index pairs must be unique")
        for i, j in pairs:
            if not (1 <= i <= self.n_u and 1 <= j <= self.n_y):
                raise IndexOutOfRange(f"pair ({i}, {j}) outside 1..{self.n_u} x 1..{self.n_y}")
        object.__setattr__(self, "admissible", pairs)

    @classmethod
    def centralized(cls, n_u: int, n_y: int) -> "SparsityPattern":
        return cls(n_u, n_y, tuple((i, j) for i in range(1, n_u + 1) for j in range(1, n_y + 1)))

    @classmethod
    def diagonal(cls, n: int) -> "SparsityPattern":
        return cls(n, n, tuple((i, i) for i in range(1, n + 1)))

    @classmethod
    def from_mask(cls, mask: ArrayLike) -> "SparsityPattern":
        mask = np.asarray(mask, dtype=bool)
        pairs = [(i + 1, j + 1) for i, j in zip(*np.nonzero(mask))]
        return cls(mask.shape[0], mask.shape[1], tuple(pairs))

    @property
    def a(self) -> int:
        return len(self.admissible)

    def __len__(self) -> int:
        return self.a

    def __iter__(self):
        return iter(self.admissible)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in set(self.admissible)

    @property
    def mask(self) -> NDArray[np.bool_]:
        m = np.zeros((self.n_u, self.n_y), dtype=bool)
        for i, j in self.admissible:
            m[i - 1, j - 1] = True
        return m

    def pair(self, m: int) -> tuple[int, int]:
        """The ``m``-th admissible pair, ``1 <= m <= a``."""
        if not 1 <= m <= self.a:
            raise IndexOutOfRange(f"m={m} outside 1..{self.a}")
        return self.admissible[m - 1]


@dataclass(frozen=True)
class StructuredStaticGain:
    D: NDArray[np.float64]
    pattern: SparsityPattern

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        if D.shape != (self.pattern.n_u, self.pattern.n_y):
            raise DimensionMismatch(f"gain has shape {D.shape}, pattern is {self.pattern.n_u}x{self.pattern.n_y}")
        if np.any(D[~self.pattern.mask] != 0):
            raise ValidationError("gain has nonzero entries outside the admissible set")
        D.setflags(write=False)
        object.__setattr__(self, "D", D)

    def __add__(self, other: "StructuredStaticGain") -> "StructuredStaticGain":
        if other.pattern != self.pattern:
            raise ValidationError("cannot add gains with different patterns")
        return StructuredStaticGain(self.D + other.D, self.pattern)

    def scaled(self, factor: float) -> "StructuredStaticGain":
        return StructuredStaticGain(self.D * factor, self.pattern)

    def as_system(self, time_domain="continuous") -> StateSpace:
        return StateSpace.static(self.D, time_domain)

    @property
    def norm(self) -> float:
        return inf_norm(self.D)


def truncate_gain(gain: StructuredStaticGain, m: int) -> StructuredStaticGain:
    """Keep only the first ``m`` admissible entries of ``gain``."""
    pattern = gain.pattern
    if not 0 <= m <= pattern.a:
        raise IndexOutOfRange(f"m={m} outside 0..{pattern.a}")
    D = np.zeros_like(gain.D)
    for i, j in pattern.admissible[:m]:
        D[i - 1, j - 1] = gain.D[i - 1, j - 1]
    return StructuredStaticGain(D, pattern)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_structured_gain(pattern: SparsityPattern, scale: float, rng_seed=None) -> StructuredStaticGain:
    """Random direction on the admissible entries, scaled to ``||D||_inf = scale / 2``.

    ``rng_seed`` may be an int, ``SeedSequence`` or ``Generator``; a
    generator is advanced in place.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    rng = _rng(rng_seed)
    D = np.zeros((pattern.n_u, pattern.n_y))
    if pattern.a:
        mask = pattern.mask
        # draw in admissible order so the stream does not depend on the mask layout
        vals = rng.uniform(-1.0, 1.0, size=pattern.a)
        for (i, j), v in zip(pattern.admissible, vals):
            D[i - 1, j - 1] = v
        nrm = inf_norm(D)
        if nrm > 0:
            D *= 0.5 * scale / nrm
        D[~mask] = 0.0
    return StructuredStaticGain(D, pattern)


def _probe_points(time_domain) -> list[complex]:
    rng = np.random.default_rng(20240611)
    if str(getattr(time_domain, "value", time_domain)) == "discrete":
        r = rng.uniform(1.2, 2.0, _FREQ_POINTS)
        th = rng.uniform(0, np.pi, _FREQ_POINTS)
        return list(r * np.exp(1j * th))
    return list(rng.uniform(0.3, 2.0, _FREQ_POINTS) + 1j * rng.uniform(-5, 5, _FREQ_POINTS))


def sparsity_check(K: StateSpace, pattern: SparsityPattern, tol: float = SPARSITY_TOL) -> bool:
    """True iff every inadmissible entry of ``K`` has zero transfer function.

    Checked on the feedthrough and through the sampled response at a fixed
    set of points away from the controller's poles.
    """
    if K.D.shape != (pattern.n_u, pattern.n_y):
        raise DimensionMismatch(f"controller is {K.D.shape}, pattern is {pattern.n_u}x{pattern.n_y}")
    bad = ~pattern.mask
    if not bad.any():
        return True
    scale = max(1.0, float(np.max(np.abs(K.D))) if K.D.size else 1.0)
    if np.any(np.abs(K.D[bad]) > tol * scale):
        return False
    if K.n == 0:
        return True
    # entries with an all-zero C row or B column vanish structurally
    live = np.outer(np.any(K.C != 0, axis=1), np.any(K.B != 0, axis=0)) & bad
    if not live.any():
        return True
    for s in _resolvent_safe_points(K):
        H = K.freqresp(s)
        ref = max(1.0, float(np.max(np.abs(H))))
        if np.any(np.abs(H[live] - K.D[live]) > tol * ref):
            return False
    return True


def _resolvent_safe_points(K: StateSpace) -> Iterable[complex]:
    poles = np.linalg.eigvals(K.A)
    spread = 1.0 + float(np.max(np.abs(poles)))
    for s in _probe_points(K.time_domain):
        s = s * spread
        if np.min(np.abs(poles - s)) < 1e-6 * spread:
            s = s + 0.1j * spread
        yield s
