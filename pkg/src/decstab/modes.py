"""Fixed modes under a sparsity pattern and the partition of open-loop modes.

A mode is fixed when no admissible static gain moves it.  Detection is
randomized: a generic small structured gain moves every non-fixed mode,
so a candidate that survives several independent draws is declared
fixed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import IllPosedInterconnection
from .statespace import (
    Region,
    Spectrum,
    StateSpace,
    closed_loop_a,
    inf_norm,
    spectrum,
)
from .structure import SparsityPattern, StructuredStaticGain, random_structured_gain

log = logging.getLogger(__name__)

DEFAULT_TRIALS = 8
MAX_GAIN_HALVINGS = 60


def default_fix_tol(P: StateSpace) -> float:
    return 1e-6 * (1.0 + inf_norm(P.A))


def _seed_sequence(rng_seed) -> np.random.SeedSequence:
    if isinstance(rng_seed, np.random.SeedSequence):
        return rng_seed
    return np.random.SeedSequence(rng_seed)


def count_unstable(M, region: Region | None = None) -> int:
    """Number of eigenvalues (with multiplicity) outside the open acceptable region."""
    if isinstance(M, StateSpace):
        region = region or Region.for_domain(M.time_domain)
        M = M.A
    region = region or Region()
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    return region.count_unacceptable(np.linalg.eigvals(M))


def small_gain_mode_tracking(P: StateSpace, D, eps: float, modes=None) -> bool:
    """Check that closing ``D`` keeps exactly ``mu`` eigenvalues in each open ``eps``-ball.

    ``modes`` is an iterable of ``(value, multiplicity)``; by default all
    open-loop modes of ``P`` are tracked.
    """
    Dmat = D.D if isinstance(D, StructuredStaticGain) else np.asarray(D, dtype=float)
    if modes is None:
        modes = spectrum(P.A).modes
    try:
        ev = np.linalg.eigvals(closed_loop_a(P, StateSpace.static(Dmat, P.time_domain)))
    except IllPosedInterconnection:
        return False
    for z, mu in modes:
        if int(np.sum(np.abs(ev - z) < eps)) != mu:
            return False
    return True


def _min_gap(open_loop: Spectrum, P: StateSpace) -> float:
    vals = np.array(open_loop.values)
    if vals.size < 2:
        return 1.0 + inf_norm(P.A)
    d = np.abs(vals[:, None] - vals[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return max(float(np.min(d)), 1e-6)


def _trial_gain(P: StateSpace, pattern: SparsityPattern, open_loop: Spectrum, rng) -> StructuredStaticGain:
    eps = _min_gap(open_loop, P) / 3.0
    D = random_structured_gain(pattern, 0.5 / (1.0 + inf_norm(P.D)), rng)
    for _ in range(MAX_GAIN_HALVINGS):
        if small_gain_mode_tracking(P, D, eps, open_loop.modes):
            return D
        D = D.scaled(0.5)
    return D


@dataclass(frozen=True)
class _Survival:
    value: complex
    multiplicity: int
    persistent: int  # fewest closed-loop eigenvalues seen near the value


def _survival(P, pattern, trials, rng_seed, fix_tol, eig_tol) -> tuple[Spectrum, list[_Survival]]:
    open_loop = spectrum(P.A, eig_tol)
    if P.n == 0:
        return open_loop, []
    persistent = {k: mu for k, (_, mu) in enumerate(open_loop.modes)}
    children = _seed_sequence(rng_seed).spawn(trials)
    for child in children:
        rng = np.random.default_rng(child)
        D = _trial_gain(P, pattern, open_loop, rng)
        ev = np.linalg.eigvals(closed_loop_a(P, D.as_system(P.time_domain)))
        for k, (z, mu) in enumerate(open_loop.modes):
            near = int(np.sum(np.abs(ev - z) <= fix_tol))
            persistent[k] = min(persistent[k], near, mu)
    out = [_Survival(z, mu, persistent[k]) for k, (z, mu) in enumerate(open_loop.modes)]
    return open_loop, out


def fixed_modes(
    P: StateSpace,
    pattern: SparsityPattern,
    trials: int = DEFAULT_TRIALS,
    rng_seed=0,
    fix_tol: float | None = None,
    eig_tol: float | None = None,
) -> Spectrum:
    """Open-loop modes that no sampled structured static gain moves.

    A value counts as fixed if every trial leaves some closed-loop
    eigenvalue within ``fix_tol`` of it; it is then reported with its full
    open-loop multiplicity.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fix_tol = default_fix_tol(P) if fix_tol is None else fix_tol
    open_loop, surv = _survival(P, pattern, trials, rng_seed, fix_tol, eig_tol)
    ev = [s.value for s in surv for _ in range(s.multiplicity) if s.persistent > 0]
    return Spectrum(np.array(ev, dtype=complex), open_loop.tol)


@dataclass(frozen=True)
class ModeReport:
    open_loop: Spectrum
    fixed: Spectrum
    nonfixed_unstable: list[tuple[complex, int]]
    nonfixed_stable: list[tuple[complex, int]]
    nu: int
    region: Region
    collisions: list[tuple[complex, int, int]] = field(default_factory=list)

    @property
    def unstable_fixed(self) -> list[complex]:
        return [z for z, _ in self.fixed.modes if not self.region.contains(z)]

    def to_dict(self) -> dict:
        def pairs(items):
            return [{"value": [z.real, z.imag], "multiplicity": mu} for z, mu in items]

        return {
            "open_loop": pairs(self.open_loop.modes),
            "fixed": pairs(self.fixed.modes),
            "nonfixed_unstable": pairs(self.nonfixed_unstable),
            "nonfixed_stable": pairs(self.nonfixed_stable),
            "nu": self.nu,
            "region": {"kind": self.region.kind.value, "margin": self.region.margin},
            "unstable_fixed": [[z.real, z.imag] for z in self.unstable_fixed],
            "collisions": [
                {"value": [z.real, z.imag], "multiplicity": mu, "fixed_copies": f}
                for z, mu, f in self.collisions
            ],
        }


def partition_modes(
    P: StateSpace,
    pattern: SparsityPattern,
    region: Region | None = None,
    trials: int = DEFAULT_TRIALS,
    rng_seed=0,
    fix_tol: float | None = None,
    eig_tol: float | None = None,
) -> ModeReport:
    """Split the open-loop spectrum into fixed / non-fixed and stable / unstable parts.

    A value whose copies are only partly fixed is logged as a collision
    and treated as fixed in full.
    """
    region = region or Region.for_domain(P.time_domain)
    region.check_domain(P)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fix_tol = default_fix_tol(P) if fix_tol is None else fix_tol
    open_loop, surv = _survival(P, pattern, trials, rng_seed, fix_tol, eig_tol)
    fixed_ev, unstable, stable, collisions = [], [], [], []
    for s in surv:
        if s.persistent > 0:
            fixed_ev.extend([s.value] * s.multiplicity)
            if s.persistent < s.multiplicity:
                collisions.append((s.value, s.multiplicity, s.persistent))
                log.warning("mode %s has %d fixed and %d movable copies; treating all as fixed",
                            s.value, s.persistent, s.multiplicity - s.persistent)
        elif region.contains(s.value):
            stable.append((s.value, s.multiplicity))
        else:
            unstable.append((s.value, s.multiplicity))
    fixed = Spectrum(np.array(fixed_ev, dtype=complex), open_loop.tol)
    return ModeReport(
        open_loop=open_loop,
        fixed=fixed,
        nonfixed_unstable=unstable,
        nonfixed_stable=stable,
        nu=sum(mu for _, mu in unstable),
        region=region,
        collisions=collisions,
    )


__all__ = [
    "ModeReport",
    "count_unstable",
    "default_fix_tol",
    "fixed_modes",
    "partition_modes",
    "small_gain_mode_tracking",
]
