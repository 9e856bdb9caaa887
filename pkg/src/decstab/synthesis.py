"""Step-by-step stabilization through one admissible channel at a time.

Each outer step closes a small structured static gain, picks one
admissible channel through which at least one unstable mode is both
controllable and observable, and stabilizes that channel with an
observer-based SISO controller.  Every step removes at least one unstable
mode, and the final controller is the parallel sum of the per-step ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import (
    HalvingExhausted,
    IllPosedInterconnection,
    NoIndexFound,
    PerturbationExhausted,
    RedrawLimit,
    StepStalled,
    UnstableFixedModes,
    ValidationError,
)
from .kalman import default_rank_tol, kalman_decompose
from .modes import DEFAULT_TRIALS, MAX_GAIN_HALVINGS, count_unstable, default_fix_tol, fixed_modes, partition_modes
from .placement import place_poles
from .statespace import (
    Region,
    RegionKind,
    Spectrum,
    StateSpace,
    add_controllers,
    closed_loop_a,
    default_eig_tol,
    embed_siso,
    inf_norm,
    lft_close,
    match_spectra,
    siso_channel,
    spectrum,
)
from .structure import SparsityPattern, StructuredStaticGain, random_structured_gain, sparsity_check, truncate_gain

log = logging.getLogger(__name__)

MAX_REDRAWS = 16
PROXIMITY_TOL = 1e-6


@dataclass(frozen=True)
class SynthesisConfig:
    """Knobs for :func:`synthesize`.

    ``region`` defaults to the stability region of the plant's time
    domain.  ``None`` tolerances fall back to values scaled by the plant.
    """

    region: Region | None = None
    desired_poles: tuple[complex, ...] | None = None
    max_halvings: int = MAX_GAIN_HALVINGS
    proximity_tol: float = PROXIMITY_TOL
    rng_seed: int = 0
    trials: int = DEFAULT_TRIALS
    rank_tol: float | None = None
    eig_tol: float | None = None
    fix_tol: float | None = None
    max_redraws: int = MAX_REDRAWS

    def __post_init__(self):
        if self.desired_poles is not None:
            p = tuple(complex(z) for z in self.desired_poles)
            arr = np.array(p, dtype=complex)
            if match_spectra(arr, arr.conj()) > 1e-9 * (1 + np.max(np.abs(arr), initial=0)):
                raise ValidationError("desired poles must be closed under conjugation")
            if self.region is not None and not np.all(self.region.contains(arr)):
                raise ValidationError("desired poles must lie strictly inside the region")
            object.__setattr__(self, "desired_poles", p)
        if self.max_halvings < 1 or self.max_redraws < 1 or self.trials < 1:
            raise ValueError("max_halvings, max_redraws and trials must be positive")
        if not self.proximity_tol > 0:
            raise ValueError("proximity_tol must be positive")


@dataclass(frozen=True)
class StepTrace:
    k: int
    m: int
    pair: tuple[int, int]
    siso_dims: tuple[int, int, int, int]
    D_step: NDArray[np.float64]
    F: NDArray[np.float64]
    L: NDArray[np.float64]
    perturbed: bool
    nu_before: int
    nu_after: int
    f_targets: tuple[complex, ...] = ()
    l_targets: tuple[complex, ...] = ()
    controller: StateSpace | None = None  # K_m of this step

    def to_dict(self) -> dict:
        cplx = lambda zs: [[z.real, z.imag] for z in zs]  # noqa: E731
        return {
            "k": self.k,
            "m": self.m,
            "pair": list(self.pair),
            "siso_dims": list(self.siso_dims),
            "D_step": np.asarray(self.D_step).tolist(),
            "F": np.asarray(self.F).tolist(),
            "L": np.asarray(self.L).tolist(),
            "perturbed": self.perturbed,
            "nu_before": self.nu_before,
            "nu_after": self.nu_after,
            "f_targets": cplx(self.f_targets),
            "l_targets": cplx(self.l_targets),
        }


@dataclass(frozen=True)
class SynthesisResult:
    controller: StateSpace
    steps: list[StepTrace]
    closed_loop_spectrum: Spectrum
    certificate: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.certificate.get("sparsity")) and bool(self.certificate.get("region"))


# ---------------------------------------------------------------- helpers


def _region_for(P: StateSpace, cfg: SynthesisConfig) -> Region:
    region = cfg.region or Region.for_domain(P.time_domain)
    region.check_domain(P)
    return region


def _unstable_values(M: NDArray, region: Region) -> NDArray[np.complex128]:
    if M.size == 0:
        return np.zeros(0, dtype=complex)
    ev = np.linalg.eigvals(M)
    return ev[~np.asarray(region.contains(ev), dtype=bool)]


def _retains(ev: NDArray, alphas: NDArray, tol: float) -> bool:
    """True if some closed-loop eigenvalue sits within ``tol`` of some alpha."""
    if alphas.size == 0 or ev.size == 0:
        return False
    return bool(np.min(np.abs(ev[:, None] - alphas[None, :])) <= tol)


def _prefix_ok(G: StateSpace, D: StructuredStaticGain, region: Region, nu: int) -> bool:
    for m in range(1, D.pattern.a + 1):
        try:
            A = closed_loop_a(G, truncate_gain(D, m).as_system(G.time_domain))
        except IllPosedInterconnection:
            return False
        if count_unstable(A, region) > nu:
            return False
    return True


# ---------------------------------------------------------------- operations


def pick_moving_gain(
    G: StateSpace,
    pattern: SparsityPattern,
    region: Region,
    cfg: SynthesisConfig,
    rng: np.random.Generator,
) -> StructuredStaticGain:
    """Random structured gain that moves every unstable mode of ``G``.

    The gain is halved until no prefix of it increases the number of
    unstable modes; a direction that leaves some unstable mode in place is
    discarded and redrawn.
    """
    nu = count_unstable(G.A, region)
    alphas = np.array([z for z, _ in spectrum(G.A, cfg.eig_tol).modes if not region.contains(z)], dtype=complex)
    fix_tol = default_fix_tol(G) if cfg.fix_tol is None else cfg.fix_tol
    scale = 0.5 / (1.0 + inf_norm(G.D))
    for _ in range(cfg.max_redraws):
        D = random_structured_gain(pattern, scale, rng)
        for _ in range(cfg.max_halvings):
            if _prefix_ok(G, D, region, nu):
                break
            D = D.scaled(0.5)
        else:
            raise HalvingExhausted(f"no admissible gain scale found after {cfg.max_halvings} halvings")
        ev = np.linalg.eigvals(closed_loop_a(G, D.as_system(G.time_domain)))
        if not _retains(ev, alphas, fix_tol):
            return D
    raise RedrawLimit(f"{cfg.max_redraws} random gains all left an unstable mode in place")


def find_movable_index(
    G: StateSpace,
    D: StructuredStaticGain,
    pattern: SparsityPattern,
    region: Region,
    fix_tol: float | None = None,
    eig_tol: float | None = None,
) -> int:
    """Largest ``m`` such that the first ``m - 1`` entries of ``D`` still leave an unstable mode."""
    fix_tol = default_fix_tol(G) if fix_tol is None else fix_tol
    alphas = np.array([z for z, _ in spectrum(G.A, eig_tol).modes if not region.contains(z)], dtype=complex)
    if alphas.size == 0:
        raise NoIndexFound("plant has no unstable modes to move")
    for m in range(pattern.a, 0, -1):
        A = closed_loop_a(G, truncate_gain(D, m - 1).as_system(G.time_domain))
        if _retains(np.linalg.eigvals(A) if A.size else np.zeros(0), alphas, fix_tol):
            return m
    raise NoIndexFound("the full gain leaves an unstable mode in place")


def extract_siso(G: StateSpace, D: StructuredStaticGain, m: int, pattern: SparsityPattern) -> StateSpace:
    """Channel ``pair(m)`` of ``G`` after closing the first ``m - 1`` entries of ``D``."""
    i, j = pattern.pair(m)
    closed = lft_close(G, truncate_gain(D, m - 1).as_system(G.time_domain))
    return siso_channel(closed, i, j)


def _units(values, tol: float) -> list[tuple[complex, ...]]:
    """Group values into real singletons and conjugate pairs."""
    rest = [complex(z) for z in values]
    out = []
    while rest:
        z = rest.pop(0)
        if abs(z.imag) <= tol:
            out.append((complex(z.real, 0.0),))
            continue
        k = int(np.argmin([abs(w - z.conjugate()) for w in rest]))
        w = rest.pop(k)
        hi = z if z.imag > 0 else w
        out.append((hi, hi.conjugate()))
    return out


def _take(units: list[tuple[complex, ...]], q: int) -> tuple[list[complex], list[tuple[complex, ...]]]:
    """Take units in order until ``q`` values are collected, skipping pairs that do not fit."""
    chosen, left = [], []
    for u in units:
        if len(chosen) + len(u) <= q:
            chosen.extend(u)
        else:
            left.append(u)
    return chosen, left


def _remove_matched(pool: list[complex], present, tol: float) -> list[complex]:
    pool = list(pool)
    for z in present:
        if not pool:
            break
        d = [abs(w - z) for w in pool]
        k = int(np.argmin(d))
        if d[k] <= tol:
            pool.pop(k)
    return pool


def _defaults(count: int, region: Region, avoid, tol: float, start: int = 0) -> list[complex]:
    out, t = [], start
    avoid = list(avoid)
    while len(out) < count:
        if region.kind is RegionKind.OPEN_LEFT_HALF_PLANE:
            z = complex(-region.margin - (1.0 + 0.5 * t))
        else:
            z = complex((1.0 - region.margin) * 0.5 * 0.9**t)
        t += 1
        if any(abs(z - w) <= tol for w in avoid):
            continue
        out.append(z)
        avoid.append(z)
    return out


def allocate_targets(
    q: int,
    persistent,
    desired,
    region: Region,
    tol: float,
    existing=(),
) -> tuple[list[complex], list[complex]]:
    """Split desired closed-loop poles into state-feedback and observer targets.

    Desired entries already matched by ``persistent`` (modes that will
    survive this step unchanged) are not handed out again.  State-feedback
    targets are the remaining entries nearest the region boundary, observer
    targets the ones furthest inside; shortfalls are filled by reusing
    entries and then by default locations away from ``existing``.
    """
    desired = list(desired or [])
    available = _remove_matched(desired, persistent, tol)
    by_boundary = sorted(_units(available, tol), key=lambda u: (-float(region.stability_measure(u[0])), u[0].real, u[0].imag))
    f, rest = _take(by_boundary, q)
    rest = sorted(rest, key=lambda u: (float(region.stability_measure(u[0])), u[0].real, u[0].imag))
    l, _ = _take(rest, q)
    if len(l) < q:
        reuse = _remove_matched(desired, f + l, tol)
        reuse = sorted(_units(reuse, tol), key=lambda u: (float(region.stability_measure(u[0])), u[0].real, u[0].imag))
        extra, _ = _take(reuse, q - len(l))
        l += extra
    avoid = list(existing) + f + l
    if len(f) < q:
        f += _defaults(q - len(f), region, avoid, tol)
        avoid += f
    if len(l) < q:
        l += _defaults(q - len(l), region, avoid, tol)
    return f, l


@dataclass(frozen=True)
class ObserverDesign:
    controller: StateSpace
    F: NDArray[np.float64]
    L: NDArray[np.float64]
    dims: tuple[int, int, int, int]
    perturbed: bool
    f_targets: tuple[complex, ...]
    l_targets: tuple[complex, ...]


def _observer_matrix(A11, b1, c1, d, F, L):
    return A11 - b1 @ F - L @ c1 + L * d @ F


def _disjoint(Kp: StateSpace, P_m: StateSpace, region: Region, tol: float) -> bool:
    ctrl = _unstable_values(Kp.A, region)
    if ctrl.size == 0:
        return True
    cl = _unstable_values(closed_loop_a(P_m, Kp), region)
    if cl.size == 0:
        return True
    return float(np.min(np.abs(ctrl[:, None] - cl[None, :]))) > tol


def observer_stabilize(
    P_m: StateSpace,
    cfg: SynthesisConfig,
    region: Region | None = None,
    rng: np.random.Generator | None = None,
    f_targets=None,
    l_targets=None,
) -> ObserverDesign:
    """Observer-based SISO controller stabilizing the controllable and observable part of ``P_m``.

    Targets default to :func:`allocate_targets` applied to
    ``cfg.desired_poles``.  If an unstable controller pole lands within
    ``cfg.proximity_tol`` of an unstable closed-loop pole, the observer
    gain is perturbed by a random, successively halved correction.
    """
    region = region or _region_for(P_m, cfg)
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    dec = kalman_decompose(P_m, cfg.rank_tol)
    q = dec.block_dims[0]
    eig_tol = default_eig_tol(P_m.A) if cfg.eig_tol is None else cfg.eig_tol
    if q == 0:
        zero = StateSpace.zero(1, 1, P_m.time_domain)
        return ObserverDesign(zero, np.zeros((1, 0)), np.zeros((0, 1)), dec.block_dims, False, (), ())
    A11, b1, c1 = dec.a(1, 1), dec.b(1), dec.c(1)
    d = float(P_m.D[0, 0])
    if f_targets is None or l_targets is None:
        persistent = np.concatenate([np.linalg.eigvals(dec.a(k, k)) for k in (2, 3, 4) if dec.block_dims[k - 1]] or [np.zeros(0)])
        f_alloc, l_alloc = allocate_targets(q, persistent, cfg.desired_poles, region, eig_tol,
                                            existing=np.linalg.eigvals(P_m.A))
        f_targets = f_alloc if f_targets is None else f_targets
        l_targets = l_alloc if l_targets is None else l_targets
    tol = cfg.rank_tol if cfg.rank_tol is not None else default_rank_tol(P_m)
    F = place_poles(A11, b1, f_targets, tol)
    L = place_poles(A11.T, c1.T, l_targets, tol).T

    def build(Lg):
        return StateSpace(_observer_matrix(A11, b1, c1, d, F, Lg), Lg, -F, np.zeros((1, 1)), P_m.time_domain)

    Kp = build(L)
    if _disjoint(Kp, P_m, region, cfg.proximity_tol):
        return ObserverDesign(Kp, F, L, dec.block_dims, False, tuple(f_targets), tuple(l_targets))

    log.info("controller pole near an unstable closed-loop pole; perturbing the observer gain")
    size = 0.1 * (1.0 + inf_norm(L))
    for _ in range(cfg.max_redraws):
        direction = rng.uniform(-1.0, 1.0, size=L.shape)
        eps = direction * (size / max(inf_norm(direction), np.finfo(float).tiny))
        for _ in range(cfg.max_halvings):
            Lp = L + eps
            observer_ok = count_unstable(A11 - Lp @ c1, region) == 0
            if observer_ok:
                cand = build(Lp)
                if _disjoint(cand, P_m, region, cfg.proximity_tol):
                    obs = np.linalg.eigvals(A11 - Lp @ c1)
                    return ObserverDesign(cand, F, Lp, dec.block_dims, True, tuple(f_targets), tuple(obs))
            eps = eps * 0.5
    raise PerturbationExhausted("could not separate controller and closed-loop unstable poles")


def lift_to_mimo(Kp: StateSpace, D_step: StructuredStaticGain, i: int, j: int) -> StateSpace:
    """``D_step`` plus the SISO controller ``Kp`` placed at entry ``(i, j)``."""
    n_u, n_y = D_step.pattern.n_u, D_step.pattern.n_y
    K = embed_siso(Kp, i, j, n_u, n_y)
    return StateSpace(K.A, K.B, K.C, K.D + D_step.D, K.time_domain)


def _check_fixed(G: StateSpace, pattern, region, cfg, seed, eig_tol) -> None:
    fm = fixed_modes(G, pattern, trials=cfg.trials, rng_seed=seed, fix_tol=cfg.fix_tol, eig_tol=eig_tol)
    bad = [z for z, _ in fm.modes if not region.contains(z)]
    if bad:
        raise UnstableFixedModes(bad)


def synthesize(P: StateSpace, pattern: SparsityPattern, cfg: SynthesisConfig | None = None) -> SynthesisResult:
    """Structured dynamic controller placing every closed-loop pole inside the region.

    Raises
    ------
    UnstableFixedModes
        If the plant, or an intermediate closed loop, has a fixed mode
        outside the region.
    StepStalled
        If a step fails to reduce the number of unstable modes.
    """
    cfg = cfg or SynthesisConfig()
    region = _region_for(P, cfg)
    if cfg.desired_poles is not None and not np.all(region.contains(np.array(cfg.desired_poles))):
        raise ValidationError("desired poles must lie strictly inside the region")
    if (pattern.n_u, pattern.n_y) != (P.n_inputs, P.n_outputs):
        raise ValidationError("pattern dimensions do not match the plant")

    root = np.random.SeedSequence(cfg.rng_seed)
    check_seed, loop_seed = root.spawn(2)
    report = partition_modes(P, pattern, region, cfg.trials, check_seed, cfg.fix_tol, cfg.eig_tol)
    if report.unstable_fixed:
        raise UnstableFixedModes(report.unstable_fixed)

    G = P
    K = StateSpace.zero(P.n_inputs, P.n_outputs, P.time_domain)
    nu = count_unstable(G.A, region)
    budget = nu
    steps: list[StepTrace] = []
    while nu > 0:
        if len(steps) >= budget:
            raise StepStalled(f"still {nu} unstable modes after {budget} steps")
        step_seed, fm_seed = loop_seed.spawn(1)[0].spawn(2)
        rng = np.random.default_rng(step_seed)
        D = pick_moving_gain(G, pattern, region, cfg, rng)
        m = find_movable_index(G, D, pattern, region, cfg.fix_tol, cfg.eig_tol)
        i, j = pattern.pair(m)
        D_step = truncate_gain(D, m - 1)
        P_m = extract_siso(G, D, m, pattern)
        design = observer_stabilize(P_m, cfg, region, rng)
        K_m = lift_to_mimo(design.controller, D_step, i, j)
        G_next = lft_close(G, K_m)
        nu_next = count_unstable(G_next.A, region)
        log.info("step %d: pair (%d, %d), unstable modes %d -> %d", len(steps) + 1, i, j, nu, nu_next)
        if nu_next >= nu:
            raise StepStalled(f"step {len(steps) + 1} left {nu_next} of {nu} unstable modes")
        _check_fixed(G_next, pattern, region, cfg, fm_seed, cfg.eig_tol)
        steps.append(StepTrace(
            k=len(steps) + 1, m=m, pair=(i, j), siso_dims=design.dims, D_step=D_step.D,
            F=design.F, L=design.L, perturbed=design.perturbed, nu_before=nu, nu_after=nu_next,
            f_targets=design.f_targets, l_targets=design.l_targets, controller=K_m,
        ))
        G, K, nu = G_next, add_controllers(K, K_m), nu_next

    A_cl = closed_loop_a(P, K)
    spec = spectrum(A_cl, cfg.eig_tol)
    certificate = {
        "sparsity": sparsity_check(K, pattern),
        "region": region.count_unacceptable(spec.eigenvalues) == 0,
        "abscissa": region.abscissa(spec.eigenvalues),
    }
    return SynthesisResult(K, steps, spec, certificate)


__all__ = [
    "ObserverDesign",
    "StepTrace",
    "SynthesisConfig",
    "SynthesisResult",
    "allocate_targets",
    "extract_siso",
    "find_movable_index",
    "lift_to_mimo",
    "observer_stabilize",
    "pick_moving_gain",
    "place_poles",
    "synthesize",
]
