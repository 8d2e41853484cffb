"""Text serialization of distributions, tomograms and run reports.

Every file starts with one header line ``# optotomo <kind> v1 {json}``.  Run
outputs are staged in a sibling directory and renamed into place, so a
failed run never leaves a partial bundle behind.
"""

import json
import math
import os
from pathlib import Path
import shutil
import tempfile

import numpy as np

from .phase_space import PhaseSpaceGrid, QuasiDistribution, Tomogram

__all__ = [
    "FORMAT_VERSION",
    "to_jsonable",
    "write_distribution",
    "read_distribution",
    "write_tomogram",
    "read_tomogram",
    "write_report",
    "read_report",
    "OutputBundle",
    "write_table",
    "read_table",
]

FORMAT_VERSION = 1
_NUMBER = "%.17g"


def to_jsonable(obj):
    """Plain-JSON view of nested metadata; NaN and infinities become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def _header(kind, fields):
    return f"# optotomo {kind} v{FORMAT_VERSION} " + json.dumps(to_jsonable(fields), sort_keys=True)


def _parse_header(line, kind):
    parts = line.rstrip("\n").split(" ", 4)
    if len(parts) < 5 or parts[:2] != ["#", "optotomo"] or parts[2] != kind:
        raise ValueError(f"not an optotomo {kind} file")
    if parts[3] != f"v{FORMAT_VERSION}":
        raise ValueError(f"unsupported format version {parts[3]}")
    return json.loads(parts[4])


def _write_text(path, header, table):
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, fmt=_NUMBER, delimiter=",")


def write_distribution(path, w):
    g = w.grid
    fields = {
        "grid": {"q_min": g.q_min, "q_max": g.q_max, "p_min": g.p_min, "p_max": g.p_max, "n_q": g.n_q, "n_p": g.n_p},
        "s": w.s,
        "layout": "rows follow q, columns follow p",
        "provenance": w.meta,
    }
    _write_text(path, _header("distribution", fields), np.asarray(w.values))


def read_distribution(path):
    with open(path) as fh:
        fields = _parse_header(fh.readline(), "distribution")
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    g = fields["grid"]
    grid = PhaseSpaceGrid(g["q_min"], g["q_max"], g["p_min"], g["p_max"], g["n_q"], g["n_p"])
    return QuasiDistribution(grid, values, fields["s"], fields.get("provenance", {}))


def write_tomogram(path, t):
    fields = {"phi": t.phi, "s": t.s, "columns": ["x", "w"], "provenance": t.meta}
    _write_text(path, _header("tomogram", fields), np.column_stack([t.x_values, t.w_values]))


def read_tomogram(path):
    with open(path) as fh:
        fields = _parse_header(fh.readline(), "tomogram")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Tomogram(table[:, 0], table[:, 1], fields["phi"], fields["s"], fields.get("provenance", {}))


def write_report(path, report):
    with open(path, "w") as fh:
        fh.write(_header("report", {}) + "\n")
        json.dump(to_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path):
    with open(path) as fh:
        _parse_header(fh.readline(), "report")
        return json.load(fh)


class OutputBundle:
    """Directory of run outputs written all-or-nothing.

    Use as a context manager; files go to ``self.path(name)`` inside a
    staging directory that replaces ``out_dir`` only on a clean exit.
    """

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir).resolve()
        self._stage = None

    def __enter__(self):
        self.out_dir.parent.mkdir(parents=True, exist_ok=True)
        self._stage = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}.tmp-", dir=self.out_dir.parent))
        return self

    def path(self, name):
        return self._stage / name

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self._stage, ignore_errors=True)
            return False
        old = None
        if self.out_dir.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}.old-", dir=self.out_dir.parent))
            os.rmdir(old)
            os.rename(self.out_dir, old)
        os.rename(self._stage, self.out_dir)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)
        return False


def write_table(path, columns, rows):
    """Delimited text table with the versioned header; ``rows`` are sequences."""
    with open(path, "w") as fh:
        fh.write(_header("table", {"columns": list(columns)}) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return _NUMBER % value
    return str(value).replace(",", ";")


def read_table(path):
    with open(path) as fh:
        _parse_header(fh.readline(), "table")
        columns = fh.readline().rstrip("\n").split(",")
        return [dict(zip(columns, line.rstrip("\n").split(","))) for line in fh if line.strip()]
