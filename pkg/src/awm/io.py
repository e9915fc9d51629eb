"""CSV and JSON serialization of Lorenz curves and densities."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import CanonicalDensity, LorenzCurve
from .errors import ParseError

_FMT = "%.17g"


def _write_columns(path, header, a, b):
    with open(path, "w", newline="") as fh:
        fh.write(f"{header[0]},{header[1]}\n")
        for x, y in zip(a, b):
            fh.write(f"{_FMT % x},{_FMT % y}\n")


def _read_columns(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if [c.strip().lower() for c in first] != list(header):
            raise ParseError(f"expected header {','.join(header)!r}, got {','.join(first)!r}", 1)
        a, b = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
            try:
                a.append(float(row[0]))
                b.append(float(row[1]))
            except ValueError:
                raise ParseError(f"non-numeric value in {row!r}", lineno) from None
    if not a:
        raise ParseError("no data rows", 2)
    return np.array(a), np.array(b)


def write_curve_csv(curve: LorenzCurve, path) -> None:
    _write_columns(path, ("f", "l"), curve.f, curve.l)


def read_curve_csv(path, terminal: float | None = None) -> LorenzCurve:
    """Load an ``f,l`` file.  The curve is supercritical if its last value is below 1."""
    f, l = _read_columns(path, ("f", "l"))
    if terminal is None:
        terminal = float(l[-1])
    return LorenzCurve(f, l, terminal, terminal < 1.0)


def write_density_csv(p: CanonicalDensity, path) -> None:
    _write_columns(path, ("w", "p"), p.grid, p.density)


def read_density_csv(path) -> CanonicalDensity:
    w, p = _read_columns(path, ("w", "p"))
    return CanonicalDensity(w, p, float(np.trapezoid(p, w)), float(np.trapezoid(p * w, w)))


def curve_to_dict(curve: LorenzCurve) -> dict:
    return {
        "kind": "lorenz",
        "grid": curve.f.tolist(),
        "values": curve.l.tolist(),
        "terminal": curve.terminal,
        "is_supercritical": curve.is_supercritical,
        "params": dict(curve.params),
    }


def curve_from_dict(d: dict) -> LorenzCurve:
    terminal = float(d.get("terminal", d["values"][-1]))
    return LorenzCurve(np.array(d["grid"], dtype=float), np.array(d["values"], dtype=float),
                       terminal, bool(d.get("is_supercritical", terminal < 1.0)),
                       dict(d.get("params", {})))


def density_to_dict(p: CanonicalDensity, params: dict | None = None) -> dict:
    return {
        "kind": "density",
        "grid": p.grid.tolist(),
        "values": p.density.tolist(),
        "terminal": None,
        "support_lo": p.support_lo,
        "n_total": p.n_total,
        "w_total": p.w_total,
        "params": dict(params or {}),
    }


def density_from_dict(d: dict) -> CanonicalDensity:
    return CanonicalDensity(np.array(d["grid"], dtype=float), np.array(d["values"], dtype=float),
                            float(d.get("n_total", 1.0)), float(d.get("w_total", 1.0)),
                            d.get("support_lo"))


def write_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None


def load_curve(path) -> LorenzCurve:
    """Read a curve from ``.json`` or ``f,l`` CSV, picking the format by suffix."""
    if str(path).lower().endswith(".json"):
        return curve_from_dict(read_json(path))
    return read_curve_csv(path)
