import json
import math

import numpy as np
import pytest

from fredgraph.cli import main
from fredgraph.floquet import hausdorff
from fredgraph.io import read_csv

from conftest import SPECS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_validate_line(capsys):
    code, out = run(capsys, "validate", SPECS / "line_graph.json")
    assert code == 0
    assert json.loads(out.out)["valency"] == {"v0": 2}


def test_validate_catalog_honeycomb(capsys):
    code, out = run(capsys, "validate", "honeycomb")
    assert code == 0 and json.loads(out.out)["rank"] == 2


def test_check_identity(capsys):
    code, out = run(capsys, "check-fredholm", SPECS / "identity_sio.json", "--tau-grid", 32)
    assert code == 0
    assert json.loads(out.out)["verdict"] == "Fredholm"


def test_check_degenerate_reports_witness(capsys, tmp_path):
    js = tmp_path / "report.json"
    code, out = run(capsys, "check-fredholm", SPECS / "degenerate_sio.json", "--tau-grid", 32, "--json-out", js)
    assert code == 2
    summary = json.loads(out.out)
    assert summary["verdict"] == "NotFredholm" and summary["witnesses"]
    full = json.loads(js.read_text())
    assert full["conditions"]["edge"]["status"] == "fail"
    assert set(full["conditions"]) == {"edge", "vertex", "infinity"}


def test_check_shifted_convolution(capsys):
    code, _ = run(capsys, "check-fredholm", SPECS / "shifted_gaussian_conv.json", "--tau-grid", 64)
    assert code == 0


def test_inconclusive_exit_code(capsys, tmp_path):
    # sin(x) has no limit at infinity, so no limit operator can be extracted
    spec = json.loads((SPECS / "shifted_gaussian_conv.json").read_text())
    spec["graph"] = str(SPECS / spec["graph"])
    spec["a"] = "2 + sin(x)"
    p = tmp_path / "osc.json"
    p.write_text(json.dumps(spec))
    code, out = run(capsys, "check-fredholm", p, "--tau-grid", 32)
    assert code == 3
    assert json.loads(out.out)["verdict"] == "Inconclusive"


def test_ess_spectrum_csv_matches_fourier_range(capsys, tmp_path):
    csv = tmp_path / "spec.csv"
    code, out = run(capsys, "ess-spectrum", SPECS / "gaussian_conv.json", "--tau-grid", 256, "--fixed-grid",
                    "--csv-out", csv)
    assert code == 0
    head, data = read_csv(csv)
    assert head == ["re", "im", "tau_index"]
    pts = data[:, 0] + 1j * data[:, 1]
    assert hausdorff(pts, np.linspace(0, math.sqrt(math.pi), 20001)) <= 1e-2
    assert json.loads(out.out)["grid_size"] == 256


def test_ess_spectrum_margin_at_shift(capsys):
    code, out = run(capsys, "ess-spectrum", SPECS / "gaussian_conv.json", "--tau-grid", 64, "--fixed-grid",
                    "--shift", "-1")
    assert code == 0
    assert json.loads(out.out)["min_margin"] == pytest.approx(1.0, abs=1e-6)


def test_edge_symbol_csv(capsys, tmp_path):
    csv = tmp_path / "edge.csv"
    code, out = run(capsys, "symbol", "edge", SPECS / "sine_sio.json", "--grid", 20, "--csv-out", csv)
    assert code == 0
    with open(csv) as fh:
        assert fh.readline().strip() == "edge,s,xi,re,im,abs"
    assert json.loads(out.out)["rows"] == 40


def test_vertex_symbol_csv(capsys, tmp_path):
    csv = tmp_path / "vertex.csv"
    code, out = run(capsys, "symbol", "vertex", SPECS / "identity_sio.json", "--grid", 11, "--r-points", 3,
                    "--csv-out", csv)
    assert code == 0
    assert json.loads(out.out)["min_abs"]["v0"] == pytest.approx(1.0)


def test_finite_section_oracle(capsys):
    code, out = run(capsys, "oracle", "finite-section", SPECS / "gaussian_conv.json", "--radius", 10,
                    "--tau-grid", 128)
    assert code == 0
    assert json.loads(out.out)["max_distance_to_fiber_cloud"] < 5e-2


@pytest.mark.parametrize("argv", [["bogus"], ["validate"], ["check-fredholm", "missing.json"],
                                  ["symbol", "edge", str(SPECS / "gaussian_conv.json")],
                                  ["ess-spectrum", str(SPECS / "gaussian_conv.json"), "--tau-grid", "x"]])
def test_errors_exit_one(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 1
    assert out.err
