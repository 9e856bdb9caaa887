"""Command-line front end.

Exit codes: 0 ok, 1 input error, 2 unstable fixed modes, 3 numerical
failure, 4 closed loop not stable, 5 controller violates the pattern.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from .errors import (
    DecstabError,
    DimensionMismatch,
    IllPosedInterconnection,
    NumericalFailure,
    UnstableFixedModes,
    _fmt,
)
from .io import Problem, check_conjugate_closed, load_controller, load_problem, parse_poles, parse_region, save_controller
from .modes import DEFAULT_TRIALS, MAX_GAIN_HALVINGS, partition_modes
from .synthesis import SynthesisConfig, synthesize
from .verify import verify_closed_loop

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSTABLE_FIXED = 2
EXIT_NUMERICAL = 3
EXIT_UNSTABLE = 4
EXIT_SPARSITY = 5

def _modes_line(items) -> str:
    if not items:
        return "(none)"
    return ", ".join(_fmt(z) if mu == 1 else f"{_fmt(z)} (x{mu})" for z, mu in items)


def _apply_overrides(pb: Problem, args) -> Problem:
    if getattr(args, "region", None) is not None or getattr(args, "margin", None) is not None:
        base = pb.resolved_region()
        kind = args.region if args.region is not None else base.kind.value
        margin = args.margin if args.margin is not None else base.margin
        pb.region = parse_region(kind, margin)
        if pb.region.time_domain is not pb.plant.time_domain:
            raise DimensionMismatch(
                f"region {pb.region.kind.value} does not match a {pb.plant.time_domain.value}-time plant"
            )
    if getattr(args, "desired_poles", None) is not None:
        poles = parse_poles(args.desired_poles)
        check_conjugate_closed(poles, "--desired-poles")
        pb.desired_poles = poles
    if getattr(args, "seed", None) is not None:
        pb.seed = args.seed
    return pb


def _seed(pb: Problem) -> int:
    return 0 if pb.seed is None else pb.seed


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(text)


def cmd_analyze(args) -> int:
    pb = _apply_overrides(load_problem(args.problem), args)
    t0 = time.perf_counter()
    report = partition_modes(
        pb.plant, pb.pattern, pb.resolved_region(), args.trials, _seed(pb),
        pb.tolerances.get("fix_tol"), pb.tolerances.get("eig_tol"),
    )
    elapsed = time.perf_counter() - t0
    doc = report.to_dict()
    doc["elapsed_s"] = elapsed
    text = "\n".join([
        f"states: {pb.plant.n}, inputs: {pb.plant.n_inputs}, outputs: {pb.plant.n_outputs}, "
        f"admissible entries: {pb.pattern.a}",
        f"open-loop modes:   {_modes_line(report.open_loop.modes)}",
        f"fixed modes:       {_modes_line(report.fixed.modes)}",
        f"unstable movable:  {_modes_line(report.nonfixed_unstable)}",
        f"stable movable:    {_modes_line(report.nonfixed_stable)}",
        f"nu:                {report.nu}",
        ("unstable fixed modes: " + ", ".join(_fmt(z) for z in report.unstable_fixed)
         if report.unstable_fixed else "all fixed modes acceptable"),
    ])
    _emit(args, doc, text)
    return EXIT_UNSTABLE_FIXED if report.unstable_fixed else EXIT_OK


def cmd_synthesize(args) -> int:
    pb = _apply_overrides(load_problem(args.problem), args)
    cfg = SynthesisConfig(
        region=pb.resolved_region(),
        desired_poles=pb.desired_poles,
        max_halvings=args.max_halvings,
        proximity_tol=pb.tolerances.get("proximity_tol", 1e-6),
        rng_seed=_seed(pb),
        trials=args.trials,
        rank_tol=pb.tolerances.get("rank_tol"),
        eig_tol=pb.tolerances.get("eig_tol"),
        fix_tol=pb.tolerances.get("fix_tol"),
    )
    t0 = time.perf_counter()
    res = synthesize(pb.plant, pb.pattern, cfg)
    elapsed = time.perf_counter() - t0
    extra = {
        "steps": [s.to_dict() for s in res.steps],
        "closed_loop_spectrum": [[z.real, z.imag] for z in res.closed_loop_spectrum.eigenvalues],
        "certificate": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in res.certificate.items()},
        "seed": cfg.rng_seed,
    }
    save_controller(res.controller, args.output, extra)
    doc = {"output": str(args.output), "order": res.controller.n, "elapsed_s": elapsed, **extra}
    text = "\n".join([
        f"controller order: {res.controller.n}",
        f"steps: {len(res.steps)}"
        + "".join(f"\n  step {s.k}: pair {s.pair}, co dim {s.siso_dims[0]}, nu {s.nu_before} -> {s.nu_after}"
                  + (" (observer perturbed)" if s.perturbed else "") for s in res.steps),
        "closed-loop spectrum: " + ", ".join(_fmt(z) for z in res.closed_loop_spectrum.eigenvalues),
        f"abscissa: {res.certificate['abscissa']:.6g}",
        f"sparsity: {'ok' if res.certificate['sparsity'] else 'VIOLATED'}, "
        f"region: {'ok' if res.certificate['region'] else 'VIOLATED'}",
        f"written to {args.output}",
    ])
    _emit(args, doc, text)
    if not res.certificate["sparsity"]:
        return EXIT_SPARSITY
    if not res.certificate["region"]:
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_verify(args) -> int:
    pb = _apply_overrides(load_problem(args.problem), args)
    K = load_controller(args.controller)
    if (K.n_outputs, K.n_inputs) != (pb.plant.n_inputs, pb.plant.n_outputs):
        raise DimensionMismatch(
            f"controller is {K.n_outputs}x{K.n_inputs}, plant needs {pb.plant.n_inputs}x{pb.plant.n_outputs}"
        )
    if K.time_domain is not pb.plant.time_domain:
        raise DimensionMismatch("controller and plant time domains differ")
    rep = verify_closed_loop(pb.plant, K, pb.pattern, pb.resolved_region())
    text = "\n".join([
        f"closed loop: {'stable' if rep.closed_loop_stable else 'NOT stable'} (abscissa {rep.abscissa:.6g})",
        f"sparsity: {'ok' if rep.sparsity_ok else 'VIOLATED'}",
        "closed-loop spectrum: " + ", ".join(_fmt(z) for z in rep.spectrum.eigenvalues),
    ])
    _emit(args, rep.to_dict(), text)
    if not rep.sparsity_ok:
        return EXIT_SPARSITY
    if not rep.closed_loop_stable:
        return EXIT_UNSTABLE
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is taken by unstable fixed modes
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="decstab", description="Decentralized stabilization of LTI plants.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem file (JSON)")
        p.add_argument("--seed", type=int, default=None, help="overrides the file's seed")
        p.add_argument("--region", choices=["lhp", "disk", "open_left_half_plane", "open_unit_disk"])
        p.add_argument("--margin", type=float, default=None)
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("analyze", help="fixed modes and unstable-mode count")
    common(p)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="compute a structured stabilizing controller")
    common(p)
    p.add_argument("-o", "--output", required=True, help="controller file to write")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--max-halvings", type=int, default=MAX_GAIN_HALVINGS)
    p.add_argument("--desired-poles", default=None, help="comma-separated, e.g. '-1,-2+1j,-2-1j'")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="check a controller against a problem")
    common(p)
    p.add_argument("controller", help="controller file (JSON)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UnstableFixedModes as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE_FIXED
    except (NumericalFailure, IllPosedInterconnection) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DecstabError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
