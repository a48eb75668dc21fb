"""Readers for the documented CSV/JSON artifact schemas.

Every reader validates the header and shape before touching the payload
and raises SchemaError on any mismatch, so figure code downstream can
assume well-formed arrays. The schemas are the published contract of the
simulation CLI; nothing here imports it.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input exists but does not match the documented artifact schema."""


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"empty CSV: {path}")
    header, body = rows[0], rows[1:]
    if not body:
        raise SchemaError(f"CSV has a header but no data rows: {path}")
    return header, body


def read_trajectory(path):
    """Trajectory CSV: t, j, re/im per axis; mean rows have j = -1.

    Returns (times, points, mean) with points shaped (T, J, dim).
    """
    header, body = _read_rows(path)
    if header[:2] != ["t", "j"] or len(header) not in (4, 6) or len(header) % 2:
        raise SchemaError(f"not a trajectory CSV (header {header}): {path}")
    dim = (len(header) - 2) // 2
    try:
        rows = [(float(r[0]), int(r[1]), [float(v) for v in r[2:]]) for r in body]
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"malformed trajectory row in {path}: {exc}")
    times = sorted({r[0] for r in rows})
    t_index = {t: n for n, t in enumerate(times)}
    n_points = max(r[1] for r in rows) + 1
    if n_points < 1:
        raise SchemaError(f"trajectory has only mean rows: {path}")
    points = np.zeros((len(times), n_points, dim), dtype=complex)
    mean = np.zeros((len(times), dim), dtype=complex)
    for t, j, vals in rows:
        if len(vals) != 2 * dim:
            raise SchemaError(f"row width does not match header in {path}")
        z = np.array([complex(vals[2 * k], vals[2 * k + 1]) for k in range(dim)])
        if j < 0:
            mean[t_index[t]] = z
        else:
            points[t_index[t], j] = z
    return np.asarray(times), points, mean


def read_convergence(path):
    """Sweep CSV: epsilon plus one error/deviation column, 3+ rows."""
    header, body = _read_rows(path)
    if len(header) != 2 or header[0] != "epsilon":
        raise SchemaError(f"not a convergence CSV (header {header}): {path}")
    try:
        eps = np.array([float(r[0]) for r in body])
        err = np.array([float(r[1]) for r in body])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"malformed convergence row in {path}: {exc}")
    if eps.size < 2:
        raise SchemaError(f"convergence CSV needs at least two points: {path}")
    if not (np.diff(eps) < 0).all():
        raise SchemaError(f"epsilon column must be strictly decreasing: {path}")
    return eps, err


def read_field(path):
    """Field CSV: x[, y], re, im, rho, S per node.

    Returns a dict with coordinate arrays, rho and S; 2D grids are
    reshaped back to (nx, ny) from the row-major dump.
    """
    header, body = _read_rows(path)
    if header[-4:] != ["re", "im", "rho", "S"] or header[0] != "x":
        raise SchemaError(f"not a field CSV (header {header}): {path}")
    dim = len(header) - 4
    if dim not in (1, 2):
        raise SchemaError(f"field CSV must have one or two coordinates: {path}")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise SchemaError(f"malformed field row in {path}: {exc}")
    if data.shape[1] != len(header):
        raise SchemaError(f"row width does not match header in {path}")
    out = {"dim": dim}
    if dim == 1:
        out["x"] = data[:, 0]
        out["rho"] = data[:, 3]
        out["S"] = data[:, 4]
    else:
        x = np.unique(data[:, 0])
        y = np.unique(data[:, 1])
        if x.size * y.size != data.shape[0]:
            raise SchemaError(f"2D field rows do not form a full grid: {path}")
        out["x"] = x
        out["y"] = y
        out["rho"] = data[:, 4].reshape(x.size, y.size)
        out["S"] = data[:, 5].reshape(x.size, y.size)
    return out


def read_path(path):
    """Path CSV: t, x[, y][, deviation]. Returns (t, positions, deviation)."""
    header, body = _read_rows(path)
    names = list(header)
    if not names or names[0] != "t":
        raise SchemaError(f"not a path CSV (header {header}): {path}")
    has_dev = names[-1] == "deviation"
    coords = names[1:-1] if has_dev else names[1:]
    if coords not in (["x"], ["x", "y"]):
        raise SchemaError(f"not a path CSV (header {header}): {path}")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise SchemaError(f"malformed path row in {path}: {exc}")
    if data.shape[1] != len(names):
        raise SchemaError(f"row width does not match header in {path}")
    t = data[:, 0]
    pos = data[:, 1:1 + len(coords)]
    dev = data[:, -1] if has_dev else None
    return t, pos, dev


def read_report(path):
    """RunReport JSON: scenario, passed, checks[] with the frozen keys."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {path}: {exc}")
    if not isinstance(data, dict) or {"scenario", "passed", "checks"} - set(data):
        raise SchemaError(f"not a run report (missing keys): {path}")
    needed = {"id", "measured", "expected", "tolerance", "passed"}
    for check in data["checks"]:
        if needed - set(check):
            raise SchemaError(f"check entry missing keys {needed - set(check)}: {path}")
    return data
