"""CSV and JSON exporters.

Floats are written with ``repr`` so files round-trip exactly and identical
inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .front import ClosedCurve
from .geometry import LegendrianLoop
from .hyperbolicity import report_to_dict

BOXSET_HEADER = ["ix", "iy", "cx", "cy", "h"]
LOOP_HEADER = ["i", "x", "y", "nx", "ny"]
CURVE_HEADER = ["i", "x", "y"]
PERSISTENCE_HEADER = ["delta", "hausdorff_c0", "normal_dev_c1", "verdict", "margin", "converged"]


def _num(v):
    return "" if v is None else repr(float(v))


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_boxset_csv(path, S):
    idx = S.indices
    c = S.grid.centers(idx)
    h = _num(S.grid.h)
    rows = ([int(i), int(j), _num(x), _num(y), h] for (i, j), (x, y) in zip(idx, c))
    return _write_rows(path, BOXSET_HEADER, rows)


def write_loop_csv(path, l):
    rows = (
        [i, _num(x[0]), _num(x[1]), _num(n[0]), _num(n[1])]
        for i, (x, n) in enumerate(zip(np.asarray(l.x), np.asarray(l.n)))
    )
    return _write_rows(path, LOOP_HEADER, rows)


def write_curve_csv(path, c):
    v = c.vertices if isinstance(c, ClosedCurve) else np.asarray(c)
    rows = ([i, _num(p[0]), _num(p[1])] for i, p in enumerate(v))
    return _write_rows(path, CURVE_HEADER, rows)


def write_spectrum_json(path, report, classification):
    return write_json(path, report_to_dict(report, classification))


def write_certificate_json(path, cert):
    return write_json(path, cert.to_dict())


def write_persistence_csv(path, table):
    rows = []
    for r in table.rows:
        rows.append([
            _num(r.delta),
            _num(r.hausdorff_c0),
            _num(r.normal_deviation_c1),
            r.verdict.verdict if r.verdict is not None else "",
            _num(r.verdict.margin) if r.verdict is not None else "",
            "true" if r.converged else "false",
        ])
    return _write_rows(path, PERSISTENCE_HEADER, rows)


def _read_table(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != header:
            raise ValueError(f"{path}: expected header {','.join(header)}, got {got}")
        rows = [list(map(float, r)) for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no rows")
    return np.array(rows)


def read_curve_csv(path):
    a = _read_table(path, CURVE_HEADER)
    return ClosedCurve(a[np.argsort(a[:, 0], kind="stable"), 1:3])


def read_loop_csv(path, h_front):
    a = _read_table(path, LOOP_HEADER)
    a = a[np.argsort(a[:, 0], kind="stable")]
    return LegendrianLoop(a[:, 1:3], a[:, 3:5], h_front)
