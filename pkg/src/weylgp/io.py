"""File formats: presentations, operator matrices, data and grid CSV."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from . import expr as ex
from .diffalg import DiffAlgebraPresentation, presentation_from_dict
from .gp import DataSet, GridResult
from .ore import OperatorMatrix, OreAlgebra

__all__ = [
    "load_presentation_ref", "matrix_from_json", "matrix_to_json", "read_matrix", "write_json",
    "read_data_csv", "write_data_csv", "write_grid_csv", "read_grid_csv", "eval_number",
]


def load_presentation_ref(ref, base: Path | None = None) -> DiffAlgebraPresentation:
    """A presentation given inline, as ``preset:<name>``, or as a path to a JSON document."""
    from .presets import PRESENTATIONS
    if isinstance(ref, dict):
        return presentation_from_dict(ref)
    if isinstance(ref, str) and ref.startswith("preset:"):
        name = ref.split(":", 1)[1]
        if name not in PRESENTATIONS:
            raise ValueError(f"unknown preset presentation {name!r}; choose from {sorted(PRESENTATIONS)}")
        return PRESENTATIONS[name]()
    path = _resolve(ref, base)
    with open(path, encoding="utf-8") as fh:
        return presentation_from_dict(json.load(fh))


def _resolve(ref, base: Path | None) -> Path:
    p = Path(ref)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


def matrix_from_json(data, ring: OreAlgebra) -> OperatorMatrix:
    """Nested arrays of operator strings; a flat array is read as a single row."""
    if isinstance(data, dict):
        for key in ("matrix", "P", "B"):
            if key in data:
                shape = data.get(f"{key}_shape") or data.get("shape")
                return _matrix(data[key], ring, shape)
        raise ValueError("matrix document needs a 'matrix' field")
    return _matrix(data, ring, None)


def _matrix(rows, ring, shape) -> OperatorMatrix:
    if rows and not isinstance(rows[0], list):
        rows = [rows]
    if not rows:
        ncols = shape[1] if shape else 0
        return OperatorMatrix(ring, [], ncols)
    return OperatorMatrix.parse(ring, rows, None if rows[0] else (shape[1] if shape else 0))


def matrix_to_json(M: OperatorMatrix) -> dict:
    return {"shape": list(M.shape), "matrix": M.to_strings()}


def read_matrix(ref, ring: OreAlgebra, base: Path | None = None) -> OperatorMatrix:
    if isinstance(ref, (list, dict)):
        return matrix_from_json(ref, ring)
    with open(_resolve(ref, base), encoding="utf-8") as fh:
        return matrix_from_json(json.load(fh), ring)


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=False)
        fh.write("\n")


def eval_number(value) -> float:
    """A float from a number or a constant expression such as ``"pi/2"``."""
    if isinstance(value, (int, float)):
        return float(value)
    e = ex.parse_expr(str(value), ())
    return float(ex.evaluate(e, {}))


def read_data_csv(path, d: int) -> DataSet:
    """Header ``x1..xd,component,value,noise_var``; components are 1-based."""
    points, comps, vals, noise = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = [f"x{i + 1}" for i in range(d)] + ["component", "value", "noise_var"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(f"data header must be {','.join(expected)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                points.append([eval_number(row[f"x{i + 1}"]) for i in range(d)])
                c = int(row["component"])
                if c < 1:
                    raise ValueError("component indices start at 1")
                comps.append(c - 1)
                vals.append(eval_number(row["value"]))
                noise.append(eval_number(row["noise_var"]))
            except (ValueError, KeyError) as err:
                raise ValueError(f"{path}: line {lineno}: {err}") from None
    if not vals:
        return DataSet.empty(d)
    return DataSet(np.array(points), np.array(comps), np.array(vals), np.array(noise))


def write_data_csv(path, data: DataSet) -> None:
    d = data.points.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(d)] + ["component", "value", "noise_var"])
        for p, c, v, n in zip(data.points, data.components, data.values, data.noise):
            w.writerow([repr(float(x)) for x in p] + [int(c) + 1, repr(float(v)), repr(float(n))])


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def write_grid_csv(path, grid: GridResult) -> None:
    """Header ``x1..xd,mean_1..mean_l,sd_1..sd_l``; absent points carry ``nan``."""
    d = grid.points.shape[1]
    l = grid.mean.shape[1]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(d)] + [f"mean_{i + 1}" for i in range(l)]
                   + [f"sd_{i + 1}" for i in range(l)])
        for p, m, s in zip(grid.points, grid.mean, grid.sd):
            w.writerow([_fmt(x) for x in p] + [_fmt(x) for x in m] + [_fmt(x) for x in s])


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, means and standard deviations from a grid CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in r] for r in reader], dtype=float)
    d = sum(1 for h in header if h.startswith("x"))
    l = sum(1 for h in header if h.startswith("mean_"))
    if rows.size == 0:
        rows = rows.reshape(0, d + 2 * l)
    return rows[:, :d], rows[:, d:d + l], rows[:, d + l:d + 2 * l]


def region_predicate(conditions: Sequence[str], coords: Sequence[str]):
    """Inside iff every expression is ``<= 0``."""
    exprs = [ex.parse_expr(c, coords) for c in conditions]
    fn = ex.compile_expr(exprs, coords)

    def inside(points):
        vals = fn(*np.asarray(points, dtype=float).T)
        return np.all(np.stack([np.asarray(v) <= 0 for v in vals]), axis=0)

    return inside
