"""File formats: panels and labelled matrices as CSV, everything else as JSON.

Floats are written with 17 significant digits so that a write/read cycle
reproduces the original doubles exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .sim import TimeSeriesPanel


def fmt(x: float) -> str:
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if math.isinf(x) or math.isnan(x) else x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> Path:
    """Deterministic JSON (sorted keys, fixed indentation, inf/nan as null)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=1, sort_keys=True, allow_nan=False) + "\n")
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from None


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_panel_csv(panel: TimeSeriesPanel, path, sidecar: dict | None = None) -> Path:
    """One column per channel, one row per sample; optional JSON sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(panel.channel_labels)
        for row in panel.values.T:
            w.writerow([fmt(x) for x in row])
    if sidecar is not None:
        write_json(dict(sidecar, SR=panel.SR), path.with_suffix(".json"))
    return path


def read_panel_csv(path, SR: float | None = None) -> TimeSeriesPanel:
    """Read a panel written by :func:`write_panel_csv` (or any labelled numeric CSV).

    ``SR`` defaults to the value in a ``.json`` sidecar, else 1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if len(body) < 2:
        raise DataError(f"{path}: need at least 2 data rows, found {len(body)}")
    P = len(header)
    values = np.empty((len(body), P))
    for i, r in enumerate(body, start=2):
        if len(r) != P:
            raise DataError(f"{path}: row {i} has {len(r)} fields, header has {P}")
        for j, cell in enumerate(r):
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {i}, column {j + 1} ({header[j]!r}): non-numeric value {cell!r}") from None
            if not math.isfinite(x):
                raise DataError(f"{path}: row {i}, column {j + 1} ({header[j]!r}): non-finite value {cell!r}")
            values[i - 2, j] = x
    if SR is None:
        side = path.with_suffix(".json")
        SR = float(read_json(side).get("SR", 1.0)) if side.exists() else 1.0
    return TimeSeriesPanel(values.T, SR=SR, channel_labels=header)


def write_matrix_csv(values: np.ndarray, labels, path) -> Path:
    """Labelled square matrix: header row of labels, each row prefixed by its label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(labels))
        for lab, row in zip(labels, values):
            w.writerow([lab] + [fmt(x) for x in row])
    return path


def read_matrix_csv(path) -> tuple[np.ndarray, list[str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    labels = rows[0][1:]
    P = len(labels)
    if len(rows) - 1 != P:
        raise DataError(f"{path}: {len(rows) - 1} rows for {P} labels")
    M = np.empty((P, P))
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != P + 1:
            raise DataError(f"{path}: row {i} has {len(r)} fields, expected {P + 1}")
        try:
            M[i - 2] = [float(x) for x in r[1:]]
        except ValueError:
            raise DataError(f"{path}: row {i} has a non-numeric entry") from None
    if not np.all(np.isfinite(M)):
        raise DataError(f"{path}: non-finite entries")
    return M, labels


def write_rows_csv(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    return path
