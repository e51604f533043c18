"""File formats: trace CSVs, JSON reports, grid results.  All writes are atomic."""
import json
import os
import tempfile
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    pass


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def fmt(x) -> str:
    return format(float(x), ".17g")


def trace_csv_text(trace) -> str:
    lines = ["iteration,tau,sigma2"]
    for i, (t, s) in enumerate(zip(trace.tau, trace.sigma2), start=1):
        lines.append(f"{i},{fmt(t)},{fmt(s)}")
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace) -> None:
    atomic_write_text(path, trace_csv_text(trace))


def read_trace_column(path, column="tau") -> np.ndarray:
    """Read one numeric column from a trace CSV.

    A file whose first line is numeric is treated as a headerless single
    column of values.
    """
    values = []
    idx = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            toks = [t.strip() for t in line.split(",")]
            if idx is None:
                try:
                    float(toks[0])
                except ValueError:
                    if column not in toks:
                        raise ParseError(
                            f"{path}: line {lineno}: no column {column!r} in header {toks}"
                        ) from None
                    idx = toks.index(column)
                    ncol = len(toks)
                    continue
                idx = 0
                ncol = len(toks)
            if len(toks) != ncol:
                raise ParseError(f"{path}: line {lineno}: expected {ncol} fields, got {len(toks)}")
            try:
                values.append(float(toks[idx]))
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: non-numeric value {toks[idx]!r}") from None
    if not values:
        raise ParseError(f"{path}: no data rows")
    out = np.array(values)
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{path}: non-finite values")
    return out


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def grid_csv_text(result) -> str:
    lines = ["n,tau,dataset_index,te_px,te_nonpx,re"]
    for row in result.rows:
        lines.append(
            f"{row.n},{fmt(row.tau)},{row.dataset_index},"
            f"{fmt(row.te_px)},{fmt(row.te_nonpx)},{fmt(row.re)}"
        )
    return "\n".join(lines) + "\n"


def write_grid_csv(path, result) -> None:
    atomic_write_text(path, grid_csv_text(result))
