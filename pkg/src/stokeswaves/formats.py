"""Output formats: JSON and CSV with 17 significant digits."""

from __future__ import annotations

import csv
import json
import math

import numpy as np


def fmt(x) -> str:
    """Float formatting used in every output file: 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 digits; non-finite floats become strings.

    Dict keys keep insertion order, so equal inputs give equal bytes.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else '"' + fmt(x) + '"'
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + _quote(str(k)) + ": " + to_json(v, indent, _level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quote(s: str) -> str:
    return json.dumps(s)


def branch_columns(n_harmonics: int) -> list:
    return ["c", "epsilon_or_a", "momentum", "residual"] + [
        f"eta_fourier_{k}" for k in range(1, n_harmonics + 1)
    ]


def write_branch_csv(points, stream, n_harmonics: int = 4, extra=None) -> None:
    """One row per BranchPoint; ``extra`` maps column name to per-row values."""
    extra = extra or {}
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(extra) + branch_columns(n_harmonics))
    for i, p in enumerate(points):
        row = [v[i] if isinstance(v[i], str) else fmt(v[i]) for v in extra.values()]
        row += [fmt(p.c), fmt(p.amplitude), fmt(p.momentum), fmt(p.residual_norm)]
        row += [fmt(h) for h in p.harmonics(n_harmonics)]
        writer.writerow(row)
