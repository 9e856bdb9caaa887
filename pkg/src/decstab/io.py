"""JSON problem and controller files.

A problem file looks like::

    {
      "time_domain": "continuous",
      "plant": {"n": 2, "n_u": 1, "n_y": 1,
                "A": [[...], [...]], "B": [[...], [...]],
                "C": [[...]], "D": [[...]]},
      "pattern": [[1, 1]],
      "region": {"kind": "open_left_half_plane", "margin": 0.0},
      "desired_poles": [[-1.0, 0.0], [-2.0, 0.0]],
      "tolerances": {"rank_tol": null, "eig_tol": null, "fix_tol": null, "proximity_tol": 1e-6},
      "seed": 0
    }

Only ``plant`` and ``pattern`` are required.  Controller files hold the
same matrix layout under ``"controller"``, where ``n_u`` and ``n_y`` still
refer to the plant (so the controller maps ``n_y`` measurements to ``n_u``
inputs).  Floats are written with ``repr`` and therefore round-trip
exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .statespace import Region, StateSpace, TimeDomain, match_spectra
from .structure import SparsityPattern

_TOL_KEYS = ("rank_tol", "eig_tol", "fix_tol", "proximity_tol")
_REGION_ALIASES = {
    "lhp": "open_left_half_plane",
    "continuous": "open_left_half_plane",
    "open_left_half_plane": "open_left_half_plane",
    "disk": "open_unit_disk",
    "discrete": "open_unit_disk",
    "open_unit_disk": "open_unit_disk",
}


@dataclass
class Problem:
    plant: StateSpace
    pattern: SparsityPattern
    region: Region | None = None
    desired_poles: tuple[complex, ...] | None = None
    tolerances: dict = field(default_factory=dict)
    seed: int | None = None

    def resolved_region(self) -> Region:
        return self.region or Region.for_domain(self.plant.time_domain)


def parse_region(kind: str, margin: float = 0.0) -> Region:
    try:
        return Region(_REGION_ALIASES[str(kind).lower()], float(margin))
    except KeyError:
        raise ValidationError(f"region.kind: unknown region {kind!r}") from None


def parse_poles(text: str) -> tuple[complex, ...]:
    """Comma-separated complex literals such as ``-1,-2+1j,-2-1j``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "")
        if not tok:
            continue
        try:
            out.append(complex(tok))
        except ValueError:
            raise ValidationError(f"desired poles: cannot parse {tok!r}") from None
    return tuple(out)


def check_conjugate_closed(poles, where: str = "desired_poles") -> None:
    arr = np.array(poles, dtype=complex)
    if arr.size and match_spectra(arr, arr.conj()) > 1e-9 * (1 + np.max(np.abs(arr))):
        raise ValidationError(f"{where}: poles must be closed under conjugation")


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be an object")
    return doc


def _int_field(d: dict, key: str, where: str) -> int:
    if key not in d:
        raise ValidationError(f"{where}.{key}: missing")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValidationError(f"{where}.{key}: expected a non-negative integer, got {v!r}")
    return v


def _matrix(d: dict, key: str, rows: int, cols: int, where: str) -> np.ndarray:
    name = f"{where}.{key}"
    if key not in d:
        raise ValidationError(f"{name}: missing")
    raw = d[key]
    if not isinstance(raw, list):
        raise ValidationError(f"{name}: expected a list of rows")
    if rows == 0 or cols == 0:
        if not (raw == [] or (len(raw) == rows and all(r == [] for r in raw))):
            raise ValidationError(f"{name}: expected an empty {rows}x{cols} matrix")
        return np.zeros((rows, cols))
    if len(raw) != rows:
        raise ValidationError(f"{name}: expected {rows} rows, got {len(raw)}")
    for k, r in enumerate(raw):
        if not isinstance(r, list) or len(r) != cols:
            got = len(r) if isinstance(r, list) else type(r).__name__
            raise ValidationError(f"{name}[{k}]: expected {cols} entries, got {got}")
        for v in r:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValidationError(f"{name}[{k}]: non-numeric entry {v!r}")
    M = np.array(raw, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name}: entries must be finite")
    return M


def _time_domain(doc: dict) -> TimeDomain:
    try:
        return TimeDomain(doc.get("time_domain", "continuous"))
    except ValueError:
        raise ValidationError(f"time_domain: expected 'continuous' or 'discrete', got {doc.get('time_domain')!r}") from None


def _system(d, where: str, td: TimeDomain, swap: bool = False) -> StateSpace:
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    n = _int_field(d, "n", where)
    n_u = _int_field(d, "n_u", where)
    n_y = _int_field(d, "n_y", where)
    n_in, n_out = (n_y, n_u) if swap else (n_u, n_y)
    A = _matrix(d, "A", n, n, where)
    B = _matrix(d, "B", n, n_in, where)
    C = _matrix(d, "C", n_out, n, where)
    D = _matrix(d, "D", n_out, n_in, where)
    return StateSpace(A, B, C, D, td)


def _poles(raw, where: str) -> tuple[complex, ...]:
    if not isinstance(raw, list):
        raise ValidationError(f"{where}: expected a list of [re, im] pairs")
    out = []
    for k, z in enumerate(raw):
        if isinstance(z, (int, float)) and not isinstance(z, bool):
            out.append(complex(z))
        elif isinstance(z, list) and len(z) == 2 and all(isinstance(v, (int, float)) for v in z):
            out.append(complex(z[0], z[1]))
        else:
            raise ValidationError(f"{where}[{k}]: expected [re, im], got {z!r}")
    check_conjugate_closed(out, where)
    return tuple(out)


def problem_from_dict(doc: dict) -> Problem:
    td = _time_domain(doc)
    if "plant" not in doc:
        raise ValidationError("plant: missing")
    P = _system(doc["plant"], "plant", td)
    raw = doc.get("pattern")
    if not isinstance(raw, list):
        raise ValidationError("pattern: expected a list of [i, j] pairs")
    pairs = []
    for k, pr in enumerate(raw):
        if not (isinstance(pr, list) and len(pr) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in pr)):
            raise ValidationError(f"pattern[{k}]: expected [i, j] integers, got {pr!r}")
        i, j = pr
        if not (1 <= i <= P.n_inputs and 1 <= j <= P.n_outputs):
            raise ValidationError(f"pattern[{k}]: ({i}, {j}) outside 1..{P.n_inputs} x 1..{P.n_outputs}")
        pairs.append((i, j))
    if len(set(pairs)) != len(pairs):
        raise ValidationError("pattern: duplicate index pairs")
    pattern = SparsityPattern(P.n_inputs, P.n_outputs, tuple(pairs))

    region = None
    if doc.get("region") is not None:
        r = doc["region"]
        if not isinstance(r, dict):
            raise ValidationError("region: expected an object")
        try:
            region = parse_region(r.get("kind", "open_left_half_plane"), r.get("margin", 0.0))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"region: {exc}") from None
        if region.time_domain is not td:
            raise ValidationError(f"region.kind: {region.kind.value} does not match time_domain {td.value}")

    desired = None
    if doc.get("desired_poles") is not None:
        desired = _poles(doc["desired_poles"], "desired_poles")

    tols = {}
    raw_t = doc.get("tolerances") or {}
    if not isinstance(raw_t, dict):
        raise ValidationError("tolerances: expected an object")
    for key, v in raw_t.items():
        if key not in _TOL_KEYS:
            raise ValidationError(f"tolerances.{key}: unknown tolerance")
        if v is None:
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ValidationError(f"tolerances.{key}: expected a positive number, got {v!r}")
        tols[key] = float(v)

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ValidationError(f"seed: expected a non-negative integer, got {seed!r}")
    return Problem(P, pattern, region, desired, tols, seed)


def load_problem(path) -> Problem:
    return problem_from_dict(_load_json(path))


def _system_dict(S: StateSpace, n_u: int, n_y: int) -> dict:
    rows = lambda M: [[float(v) for v in r] for r in np.asarray(M)]  # noqa: E731
    return {"n": S.n, "n_u": n_u, "n_y": n_y, "A": rows(S.A), "B": rows(S.B), "C": rows(S.C), "D": rows(S.D)}


def problem_to_dict(pb: Problem) -> dict:
    P = pb.plant
    doc = {
        "time_domain": P.time_domain.value,
        "plant": _system_dict(P, P.n_inputs, P.n_outputs),
        "pattern": [list(p) for p in pb.pattern.admissible],
    }
    if pb.region is not None:
        doc["region"] = {"kind": pb.region.kind.value, "margin": pb.region.margin}
    if pb.desired_poles is not None:
        doc["desired_poles"] = [[z.real, z.imag] for z in pb.desired_poles]
    if pb.tolerances:
        doc["tolerances"] = dict(pb.tolerances)
    if pb.seed is not None:
        doc["seed"] = pb.seed
    return doc


def _dump(doc: dict, path) -> None:
    # json uses float.__repr__, the shortest string that round-trips
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def save_problem(pb: Problem, path) -> None:
    _dump(problem_to_dict(pb), path)


def controller_to_dict(K: StateSpace, extra: dict | None = None) -> dict:
    doc = {"time_domain": K.time_domain.value, "controller": _system_dict(K, K.n_outputs, K.n_inputs)}
    doc.update(extra or {})
    return doc


def save_controller(K: StateSpace, path, extra: dict | None = None) -> None:
    _dump(controller_to_dict(K, extra), path)


def controller_from_dict(doc: dict) -> StateSpace:
    if "controller" not in doc:
        raise ValidationError("controller: missing")
    return _system(doc["controller"], "controller", _time_domain(doc), swap=True)


def load_controller(path) -> StateSpace:
    return controller_from_dict(_load_json(path))


__all__ = [
    "Problem",
    "check_conjugate_closed",
    "controller_from_dict",
    "controller_to_dict",
    "load_controller",
    "load_problem",
    "parse_poles",
    "parse_region",
    "problem_from_dict",
    "problem_to_dict",
    "save_controller",
    "save_problem",
]
