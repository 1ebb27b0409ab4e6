"""Reading and writing samples, curves and reports.

Floats are written with 17 significant digits so every 64-bit value
survives a round trip.  JSON output writes non-finite floats as ``null``.
CSV files use a comma separator, ``.`` decimals and LF line endings.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError
from .transform import CurrentStatusSample

__all__ = [
    "fmt_float",
    "dumps_json",
    "write_json",
    "write_sample_csv",
    "read_sample_csv",
    "write_curves_csv",
]


def fmt_float(x: float) -> str:
    return "%.17g" % x


def _encode(obj, indent: int, level: int, out: list):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _encode(v, indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if len(seq) == 0:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(seq):
            out.append(("," if i else "") + pad)
            _encode(v, indent, level + 1, out)
        out.append(end + "]")
    elif obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt_float(float(obj)) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """Deterministic JSON text with 17-digit floats and a trailing newline."""
    out: list = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8", newline="\n")


def write_sample_csv(path, sample: CurrentStatusSample, truth=None) -> None:
    """Write ``t,delta`` rows (plus ``x`` when ``truth`` is given)."""
    t = np.asarray(sample.times)
    d = np.asarray(sample.statuses)
    lines = ["t,delta,x" if truth is not None else "t,delta"]
    if truth is None:
        lines += [f"{fmt_float(a)},{int(b)}" for a, b in zip(t, d)]
    else:
        lines += [f"{fmt_float(a)},{int(b)},{fmt_float(c)}"
                  for a, b, c in zip(t, d, np.asarray(truth))]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_sample_csv(path, support=(0.0, 1.0)) -> CurrentStatusSample:
    """Parse a ``t,delta[,x]`` file; the ``x`` column is ignored.

    Raises
    ------
    DataError
        On a missing header, an empty file, or rows that do not parse, with
        the offending line numbers (1-based, header is line 1).
    """
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if header[:2] != ["t", "delta"]:
        raise DataError(f"{path}: header must start with 't,delta', got {','.join(header)!r}")
    a, b = support
    times, status, bad = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t = float(row[0])
            d = row[1].strip()
            if d not in ("0", "1"):
                raise ValueError(f"delta {d!r} not in {{0, 1}}")
            if not (math.isfinite(t) and a <= t <= b):
                raise ValueError(f"t={t!r} outside [{a}, {b}]")
        except (ValueError, IndexError) as exc:
            bad.append(f"line {lineno}: {exc}")
            continue
        times.append(t)
        status.append(int(d))
    if bad:
        more = f" (+{len(bad) - 10} more)" if len(bad) > 10 else ""
        raise DataError(f"{path}: malformed rows: " + "; ".join(bad[:10]) + more)
    if not times:
        raise DataError(f"{path}: no observations")
    return CurrentStatusSample(np.array(times), np.array(status, dtype=np.int8), support)


def write_curves_csv(path, columns: dict, order: Optional[list] = None) -> None:
    """Write equal-length columns, one row per grid point."""
    names = order or list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    lines = [",".join(names)]
    for i in range(cols[0].size):
        lines.append(",".join(fmt_float(c[i]) if math.isfinite(c[i]) else "nan" for c in cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
