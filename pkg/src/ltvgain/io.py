"""JSON system specs and reports, CSV signals and gain profiles."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .errors import ValidationError
from .model import LtvSystem, TvMatrixFn, validate
from .ode import DEFAULT_DIVERGENCE_THRESHOLD
from .signal import Signal

__all__ = [
    "SolverOptions",
    "parse_spec",
    "load_spec",
    "spec_to_dict",
    "save_spec",
    "report_dict",
    "write_report",
    "write_signal_csv",
    "read_signal_csv",
    "write_profile_csv",
]

MATRIX_NAMES = ("A", "B", "C_I", "D_I", "C_E")
PathLike = Union[str, Path]


@dataclass(frozen=True)
class SolverOptions:
    steps: Optional[int] = None
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD
    seed: int = 0


def _number(value, path, problems, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{path}: expected a number, got {type(value).__name__}")
        return None
    if integer and not float(value).is_integer():
        problems.append(f"{path}: expected an integer, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _array(value, path, ndim, problems):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        problems.append(f"{path}: not a rectangular numeric array")
        return None
    if arr.ndim != ndim:
        problems.append(f"{path}: expected a {ndim}-D array, got {arr.ndim}-D")
        return None
    return arr


def _matrix_source(entry, path, problems) -> Optional[TvMatrixFn]:
    if not isinstance(entry, dict) or len(entry) != 1 or next(iter(entry)) not in ("constant", "gridded"):
        problems.append(f"{path}: expected {{\"constant\": ...}} or {{\"gridded\": ...}}")
        return None
    kind, body = next(iter(entry.items()))
    if kind == "constant":
        M = _array(body, f"{path}.constant", 2, problems)
        return None if M is None else TvMatrixFn.constant(M)
    if not isinstance(body, dict) or set(body) != {"times", "samples"}:
        problems.append(f"{path}.gridded: expected keys 'times' and 'samples'")
        return None
    times = _array(body["times"], f"{path}.gridded.times", 1, problems)
    samples = _array(body["samples"], f"{path}.gridded.samples", 3, problems)
    if times is None or samples is None:
        return None
    if len(times) != len(samples):
        problems.append(f"{path}.gridded: {len(times)} times but {len(samples)} samples")
        return None
    return TvMatrixFn.gridded(times, samples)


def parse_spec(doc: Any) -> tuple[LtvSystem, SolverOptions]:
    """Build a system from a decoded spec document.

    Raises:
        ValidationError: with one path-qualified message per problem.
    """
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ValidationError(["<root>: expected a JSON object"])
    horizon = _number(doc.get("horizon"), "horizon", problems) if "horizon" in doc else None
    if "horizon" not in doc:
        problems.append("horizon: missing")

    dims_doc = doc.get("dims", {})
    dims = {}
    if not isinstance(dims_doc, dict):
        problems.append("dims: expected an object")
        dims_doc = {}
    for key in ("n_x", "n_d", "n_I", "n_E"):
        if key in dims_doc:
            value = _number(dims_doc[key], f"dims.{key}", problems, integer=True)
            if value is not None:
                dims[key] = value
        elif key in ("n_x", "n_d"):
            problems.append(f"dims.{key}: missing")
        else:
            dims[key] = 0  # absent channel

    mats_doc = doc.get("matrices")
    if not isinstance(mats_doc, dict):
        problems.append("matrices: missing or not an object")
        mats_doc = {}
    for key in mats_doc:
        if key not in MATRIX_NAMES:
            problems.append(f"matrices.{key}: unknown matrix")
    sources = {}
    for name in MATRIX_NAMES:
        if name in mats_doc:
            sources[name] = _matrix_source(mats_doc[name], f"matrices.{name}", problems)
        elif name in ("A", "B"):
            problems.append(f"matrices.{name}: missing")
    solver_doc = doc.get("solver", {})
    options = {}
    if not isinstance(solver_doc, dict):
        problems.append("solver: expected an object")
        solver_doc = {}
    if "steps" in solver_doc:
        steps = _number(solver_doc["steps"], "solver.steps", problems, integer=True)
        if steps is not None and steps < 1:
            problems.append(f"solver.steps: must be positive, got {steps}")
        options["steps"] = steps
    if "divergence_threshold" in solver_doc:
        thr = _number(solver_doc["divergence_threshold"], "solver.divergence_threshold", problems)
        if thr is not None and not thr > 0:
            problems.append("solver.divergence_threshold: must be positive")
        options["divergence_threshold"] = thr
    if "seed" in doc:
        options["seed"] = _number(doc["seed"], "seed", problems, integer=True)
    if problems:
        raise ValidationError(problems)

    n_x, n_d, n_I, n_E = dims["n_x"], dims["n_d"], dims["n_I"], dims["n_E"]
    shapes = {"C_I": (n_I, n_x), "D_I": (n_I, n_d), "C_E": (n_E, n_x)}
    for name, shape in shapes.items():
        if name not in sources:
            sources[name] = TvMatrixFn(np.zeros((max(shape[0], 0), max(shape[1], 0))))
    sys = LtvSystem(
        A=sources["A"],
        B=sources["B"],
        C_I=sources["C_I"],
        D_I=sources["D_I"],
        C_E=sources["C_E"],
        horizon=horizon,
        dims=dims,
    )
    found = [f"matrices.{p}" if p.split(":")[0].split(".")[0] in MATRIX_NAMES else p for p in validate(sys)]
    if found:
        raise ValidationError(found)
    return sys, SolverOptions(**options)


def load_spec(path: PathLike) -> tuple[LtvSystem, SolverOptions]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError([f"<root>: invalid JSON ({exc.msg} at line {exc.lineno})"]) from exc
    return parse_spec(doc)


def _source_doc(src: TvMatrixFn):
    if src.is_constant:
        return {"constant": src.samples.tolist()}
    return {"gridded": {"times": src.times.tolist(), "samples": src.samples.tolist()}}


def spec_to_dict(sys: LtvSystem, options: Optional[SolverOptions] = None) -> dict:
    doc = {
        "horizon": sys.horizon,
        "dims": {"n_x": sys.n_x, "n_d": sys.n_d, "n_I": sys.n_I, "n_E": sys.n_E},
        "matrices": {},
    }
    for name, src in sys.sources().items():
        if src.rows == 0:
            continue  # absent channel
        doc["matrices"][name] = _source_doc(src)
    if options is not None:
        solver = {"divergence_threshold": options.divergence_threshold}
        if options.steps is not None:
            solver["steps"] = options.steps
        doc["solver"] = solver
        doc["seed"] = options.seed
    return doc


def save_spec(path: PathLike, sys: LtvSystem, options: Optional[SolverOptions] = None) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(sys, options), indent=1) + "\n")


def report_dict(result, *, disturbance_csv: Optional[PathLike] = None) -> dict:
    """Analysis report; fields that do not apply are left out instead of set to null."""
    doc = {"algorithm": result.algorithm}
    if result.gamma_lb is not None and math.isfinite(result.gamma_lb):
        doc["gamma_lb"] = result.gamma_lb
    if result.gamma_ub is not None and math.isfinite(result.gamma_ub):
        doc["gamma_ub"] = result.gamma_ub
    doc["iterations"] = result.iterations
    doc["rde_solves"] = result.rde_solves
    doc["power_iterations"] = result.power_iterations
    doc["wall_time_s"] = result.wall_time
    doc["termination"] = result.termination
    doc["tolerance"] = result.tolerance
    if disturbance_csv is not None:
        doc["disturbance_csv"] = str(disturbance_csv)
    return doc


def write_report(path: PathLike, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def write_signal_csv(path: PathLike, sig: Signal) -> None:
    """Columns ``t, d1, ..., dn``; values written with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"d{i + 1}" for i in range(sig.dim)])
        for t, row in zip(sig.times, sig.samples):
            writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


def read_signal_csv(path: PathLike) -> Signal:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise ValueError(f"{path}: expected a header starting with 't'")
    data = np.array([[float(v) for v in row] for row in rows[1:] if row])
    if data.ndim != 2 or data.shape[1] != len(rows[0]):
        raise ValueError(f"{path}: ragged or empty signal table")
    return Signal(data[:, 0], data[:, 1:])


def write_profile_csv(path: PathLike, taus, gains, directions) -> None:
    """Gain profile rows ``tau, gain, v1_1, ..., v1_m``."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "gain"] + [f"v{i + 1}" for i in range(directions.shape[1])])
        for tau, g, v in zip(taus, gains, directions):
            writer.writerow([f"{tau:.17g}", f"{g:.17g}"] + [f"{x:.17g}" for x in v])
