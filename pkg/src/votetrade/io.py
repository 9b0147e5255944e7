"""File formats: distribution specs, survey CSVs, solution JSON and lattice grids."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .distributions import (
    FAMILIES,
    DistributionError,
    SurveyRecord,
    kde_from_survey,
    make_builtin,
)
from .equilibrium import EquilibriumSolution

__all__ = [
    "SurveyFormatError",
    "load_dist_spec",
    "dist_from_spec",
    "read_survey_csv",
    "solution_to_dict",
    "load_solution_theta",
    "write_json",
    "write_grid_csv",
    "read_grid_csv",
]


class SurveyFormatError(ValueError):
    """Malformed survey rows; ``lines`` holds the 1-based line numbers."""

    def __init__(self, message, lines=()):
        super().__init__(message)
        self.lines = list(lines)


def dist_from_spec(spec: dict, base_dir: Path | str = "."):
    """Build a distribution from a parsed spec ``{"family": ..., "params": {...}}``.

    For ``kde`` the params may point at a survey CSV (``csv``, with optional
    ``scale`` and ``bandwidth``) or list kernel centres directly.
    """
    if not isinstance(spec, dict):
        raise DistributionError("spec", "expected a JSON object")
    family = spec.get("family")
    if family not in FAMILIES:
        raise DistributionError("family", f"expected one of {FAMILIES}, got {family!r}")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise DistributionError("params", "expected a JSON object")
    if family == "kde" and "csv" in params:
        extra = set(params) - {"csv", "scale", "bandwidth"}
        if extra:
            raise DistributionError(sorted(extra)[0], "unexpected parameter")
        scale = tuple(params.get("scale", (1, 7)))
        if len(scale) != 2:
            raise DistributionError("scale", "expected [lo, hi]")
        path = Path(base_dir) / params["csv"]
        records = read_survey_csv(path, scale)
        return kde_from_survey(records, params.get("bandwidth"), scale)
    try:
        return make_builtin(family, **params)
    except TypeError as exc:
        raise DistributionError("params", str(exc)) from exc


def load_dist_spec(path):
    """Read a distribution spec file; relative CSV paths resolve against its directory."""
    path = Path(path)
    text = path.read_text()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DistributionError("spec", f"invalid JSON: {exc}") from exc
    return dist_from_spec(spec, path.parent)


def read_survey_csv(path, scale=(1, 7)):
    """Parse a two-column integer survey CSV with a header row."""
    lo, hi = scale
    records = []
    bad = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SurveyFormatError(f"{path}: empty file")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != 2:
                    raise ValueError
                a, b = (int(c.strip()) for c in row)
            except ValueError:
                bad.append(line)
                continue
            if not (lo <= a <= hi and lo <= b <= hi):
                bad.append(line)
                continue
            records.append(SurveyRecord(a, b))
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise SurveyFormatError(f"{path}: malformed or out-of-scale rows at lines {shown}", bad)
    if not records:
        raise SurveyFormatError(f"{path}: no data rows")
    return records


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, payload):
    Path(path).write_text(json.dumps(_clean(payload), indent=2) + "\n")


def solution_to_dict(sol: EquilibriumSolution, dist=None):
    out = {
        "theta_star": sol.theta_star.tolist(),
        "slopes": np.tan(sol.theta_star).tolist(),
        "residual": sol.residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "mode": sol.mode,
        "n": sol.n,
        "undefined": np.asarray(sol.undefined).tolist(),
    }
    if sol.table is not None:
        out["mass_table"] = sol.table.to_dict()
    if dist is not None:
        out["distribution"] = dist.to_spec()
    return out


def load_solution_theta(path):
    """Return ``(theta, n, mode)`` from a solution file."""
    data = json.loads(Path(path).read_text())
    try:
        theta = np.array(data["theta_star"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DistributionError("theta_star", "missing or malformed in solution file") from exc
    if theta.shape != (8,):
        raise DistributionError("theta_star", "expected eight angles")
    return theta, data.get("n"), data.get("mode")


def write_grid_csv(path, rows, resolution: int, label: str = "value", integer: bool = False):
    """Write ``(x, y, value)`` lattice rows as produced by the geometry grid helpers.

    Two ``#`` comment lines carry the resolution, bounds and the meaning of
    the value column; the column header is always ``x,y,value``.
    """
    rows = np.asarray(rows)
    if rows.shape != (resolution * resolution, 3):
        raise ValueError("grid must have resolution**2 rows of (x, y, value)")
    with open(path, "w", newline="") as fh:
        fh.write(f"# resolution={resolution} bounds=-1,1,-1,1 cell_centers=true\n")
        fh.write(f"# value={label}\n")
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for x, y, v in rows:
            w.writerow([repr(float(x)), repr(float(y)), int(v) if integer else repr(float(v))])


def read_grid_csv(path):
    """Inverse of :func:`write_grid_csv`; returns ``(xs, ys, values)`` flat arrays."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines or lines[0].strip() != "x,y,value":
        raise ValueError("grid header must be x,y,value")
    arr = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return arr[:, 0], arr[:, 1], arr[:, 2]
