import csv
import json

import numpy as np
import pytest

from setfront import io
from setfront.front import circle_curve, lift_circle
from setfront.hyperbolicity import Classification, SpectrumReport
from setfront.persistence import PersistenceRow, PersistenceTable
from setfront.setvalued import BoxSet, Grid, minimal_invariant_set
from setfront.systems import catalog


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_headers(tmp_path):
    l = lift_circle((0.0, 0.0), 0.3, 0.05)
    io.write_loop_csv(tmp_path / "l.csv", l)
    io.write_curve_csv(tmp_path / "c.csv", circle_curve((0, 0), 1.0, 16))
    assert ",".join(header(tmp_path / "l.csv")) == "i,x,y,nx,ny"
    assert ",".join(header(tmp_path / "c.csv")) == "i,x,y"
    assert ",".join(io.BOXSET_HEADER) == "ix,iy,cx,cy,h"
    assert ",".join(io.PERSISTENCE_HEADER) == "delta,hausdorff_c0,normal_dev_c1,verdict,margin,converged"


def test_loop_round_trip_exact(tmp_path):
    l = lift_circle((0.1, -0.2), 0.37, 0.01)
    p = io.write_loop_csv(tmp_path / "loop.csv", l)
    back = io.read_loop_csv(p, 0.01)
    assert np.array_equal(back.x, l.x) and np.array_equal(back.n, l.n)


def test_curve_round_trip_exact(tmp_path, rng):
    v = rng.normal(size=(40, 2))
    p = io.write_curve_csv(tmp_path / "c.csv", v)
    assert np.array_equal(io.read_curve_csv(p).vertices, v)


def test_reader_rejects_wrong_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        io.read_curve_csv(p)
    p.write_text("i,x,y\n")
    with pytest.raises(ValueError):
        io.read_curve_csv(p)


def test_boxset_csv_rows(tmp_path):
    s = catalog()["affine"]
    g = Grid.for_scenario(s, 0.05)
    M, cert = minimal_invariant_set(s, g, n_seeds=5)
    p = io.write_boxset_csv(tmp_path / "b.csv", M)
    a = np.loadtxt(p, delimiter=",", skiprows=1)
    assert len(a) == len(M.indices)
    assert np.allclose(a[:, 2:4], g.centers(a[:, :2].astype(int)))
    assert np.all(a[:, 4] == 0.05)
    doc = json.loads(io.write_certificate_json(tmp_path / "c.json", cert).read_text())
    assert doc["verdict"] == "pass" and len(doc["seeds"]) == len(doc["defects"])


def test_persistence_csv(tmp_path):
    rows = [
        PersistenceRow(0.1, 0.2, 0.01, Classification("NormallyAttracting", 0.6), True),
        PersistenceRow(0.05, None, None, None, False),
    ]
    p = io.write_persistence_csv(tmp_path / "p.csv", PersistenceTable(rows, rows[0].verdict))
    lines = p.read_text().splitlines()
    assert lines[1] == "0.1,0.2,0.01,NormallyAttracting,0.6,true"
    assert lines[2] == "0.05,,,,,false"


def test_spectrum_json(tmp_path):
    r = SpectrumReport(0.0, (-0.7, -0.69), 1e-3, 60)
    doc = json.loads(io.write_spectrum_json(tmp_path / "s.json", r, Classification("NormallyAttracting", 0.64)).read_text())
    assert doc["normal"] == [-0.69, -0.7]
    assert set(doc) == {"tangential", "normal", "spread", "iterations", "verdict", "margin"}


def test_json_is_canonical(tmp_path):
    a = io.write_json(tmp_path / "a.json", {"b": 1, "a": [1.5]}).read_bytes()
    b = io.write_json(tmp_path / "b.json", {"a": [1.5], "b": 1}).read_bytes()
    assert a == b and a.endswith(b"\n")
