"""Post-hoc checks that do not rely on the synthesis internals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .modes import DEFAULT_TRIALS, default_fix_tol, fixed_modes
from .statespace import (
    Region,
    RegionKind,
    Spectrum,
    StateSpace,
    add_controllers,
    closed_loop_a,
    embed_siso,
    lft_close,
    match_spectra,
    spectrum,
)
from .structure import SparsityPattern, sparsity_check


@dataclass(frozen=True)
class VerificationReport:
    closed_loop_stable: bool
    abscissa: float
    sparsity_ok: bool
    spectrum: Spectrum
    region: Region
    fixed_mode_invariance: tuple[int, int] | None = None
    lft_additivity_residual: float | None = None

    @property
    def ok(self) -> bool:
        return self.closed_loop_stable and self.sparsity_ok

    def to_dict(self) -> dict:
        return {
            "closed_loop_stable": self.closed_loop_stable,
            "abscissa": self.abscissa,
            "sparsity_ok": self.sparsity_ok,
            "region": {"kind": self.region.kind.value, "margin": self.region.margin},
            "closed_loop_spectrum": [[z.real, z.imag] for z in self.spectrum.eigenvalues],
            "fixed_mode_invariance": list(self.fixed_mode_invariance) if self.fixed_mode_invariance else None,
            "lft_additivity_residual": self.lft_additivity_residual,
        }


def verify_closed_loop(
    P: StateSpace,
    K: StateSpace,
    pattern: SparsityPattern,
    region: Region | None = None,
) -> VerificationReport:
    """Recompute the closed-loop spectrum of ``(P, K)`` and check region and sparsity."""
    region = region or Region.for_domain(P.time_domain)
    region.check_domain(P)
    A = closed_loop_a(P, K)
    spec = spectrum(A)
    absc = region.abscissa(spec.eigenvalues)
    return VerificationReport(
        closed_loop_stable=region.count_unacceptable(spec.eigenvalues) == 0,
        abscissa=absc,
        sparsity_ok=sparsity_check(K, pattern),
        spectrum=spec,
        region=region,
    )


def random_stable_siso(order: int, region: Region, rng: np.random.Generator, time_domain=None) -> StateSpace:
    """Random SISO system whose poles lie well inside ``region``.

    Poles are real or conjugate pairs placed in real block-diagonal form,
    then mixed by a random orthogonal similarity.
    """
    td = time_domain or region.time_domain
    blocks, k = [], 0
    while k < order:
        pair = order - k >= 2 and rng.random() < 0.5
        if region.kind is RegionKind.OPEN_LEFT_HALF_PLANE:
            re = -region.margin - rng.uniform(0.2, 3.0)
            im = rng.uniform(0.2, 3.0)
        else:
            rad = (1.0 - region.margin) * rng.uniform(0.05, 0.9)
            th = rng.uniform(0.2, np.pi - 0.2)
            re, im = rad * np.cos(th), rad * np.sin(th)
            if not pair:
                re = rad * rng.choice([-1.0, 1.0])
        blocks.append(np.array([[re, im], [-im, re]]) if pair else np.array([[re]]))
        k += 2 if pair else 1
    A = np.zeros((order, order))
    o = 0
    for blk in blocks:
        s = blk.shape[0]
        A[o:o + s, o:o + s] = blk
        o += s
    Q, _ = np.linalg.qr(rng.standard_normal((order, order)))
    return StateSpace(Q @ A @ Q.T, rng.standard_normal((order, 1)), rng.standard_normal((1, order)),
                      rng.standard_normal((1, 1)), td)


def random_structured_controller(
    pattern: SparsityPattern,
    rng: np.random.Generator,
    order_range: tuple[int, int] = (1, 3),
    region: Region | None = None,
    gain: float = 1.0,
    time_domain=None,
) -> StateSpace:
    """Sum of random stable SISO pieces, one per admissible entry."""
    region = region or (Region.for_domain(time_domain) if time_domain else Region())
    td = time_domain or region.time_domain
    K = StateSpace.zero(pattern.n_u, pattern.n_y, td)
    lo, hi = order_range
    for i, j in pattern.admissible:
        k = random_stable_siso(int(rng.integers(lo, hi + 1)), region, rng, td)
        k = StateSpace(k.A, k.B, gain * k.C, gain * k.D, td)
        K = add_controllers(K, embed_siso(k, i, j, pattern.n_u, pattern.n_y))
    return K


@dataclass(frozen=True)
class InvarianceResult:
    passes: int
    trials: int
    fixed: Spectrum
    failures: list[StateSpace] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passes == self.trials


def sample_dynamic_fixed_mode_invariance(
    P: StateSpace,
    pattern: SparsityPattern,
    trials: int = 100,
    order_range: tuple[int, int] = (1, 3),
    rng_seed=0,
    fix_tol: float | None = None,
    fixed: Spectrum | None = None,
) -> InvarianceResult:
    """Check that static fixed modes survive random dynamic structured controllers.

    Failing trials keep their controller as a witness.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fix_tol = default_fix_tol(P) if fix_tol is None else fix_tol
    root = np.random.SeedSequence(rng_seed)
    fm_seed, trial_root = root.spawn(2)
    if fixed is None:
        fixed = fixed_modes(P, pattern, DEFAULT_TRIALS, fm_seed, fix_tol)
    region = Region.for_domain(P.time_domain)
    passes, failures = 0, []
    scale = 0.5 / (1.0 + float(np.max(np.abs(P.D)) if P.D.size else 0.0))
    for child in trial_root.spawn(trials):
        rng = np.random.default_rng(child)
        K = random_structured_controller(pattern, rng, order_range, region, gain=scale, time_domain=P.time_domain)
        ev = np.linalg.eigvals(closed_loop_a(P, K))
        ok = all(np.sum(np.abs(ev - z) <= fix_tol) >= 1 for z, _ in fixed.modes)
        if ok:
            passes += 1
        else:
            failures.append(K)
    return InvarianceResult(passes, trials, fixed, failures)


def lft_additivity_residual(P: StateSpace, K1: StateSpace, K2: StateSpace) -> float:
    """Spectral mismatch between closing ``K1`` then ``K2`` and closing ``K1 + K2`` at once."""
    nested = lft_close(lft_close(P, K1), K2)
    direct = closed_loop_a(P, add_controllers(K1, K2))
    return match_spectra(np.linalg.eigvals(nested.A), np.linalg.eigvals(direct))


__all__ = [
    "InvarianceResult",
    "VerificationReport",
    "lft_additivity_residual",
    "random_stable_siso",
    "random_structured_controller",
    "sample_dynamic_fixed_mode_invariance",
    "verify_closed_loop",
]
