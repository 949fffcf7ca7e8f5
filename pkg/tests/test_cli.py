import csv
import json
import subprocess
import sys

import pytest

from gmtkit.cli import main
from gmtkit.frostman import CellMeasure
from gmtkit.lattice import CellSet
from gmtkit.sparsify import SparsityCertificate


def run(argv):
    return main(argv)


def write_square(tmp_path, depth=4):
    path = tmp_path / "square.json"
    CellSet(2, 0, frozenset({(0, 0)})).refined(depth).save(path)
    return path


def test_generate_is_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["generate", "--kind", "four-corner-cantor", "--depth", "8", "--out"]
    assert run(argv + [str(a)]) == 0
    assert run(argv + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    cells = CellSet.load(a)
    assert len(cells.sorted_cells()) == 256


def test_generate_random_sparse_with_certificate(tmp_path):
    out, cert_out = tmp_path / "cells.json", tmp_path / "cert.json"
    assert run([
        "generate", "--kind", "random-sparse", "--depth", "12", "--ell", "4",
        "--seed", "3", "--out", str(out), "--cert-out", str(cert_out),
    ]) == 0
    cells = CellSet.load(out)
    cert = SparsityCertificate.load(cert_out)
    assert cert.n == cells.n == 2
    assert cert.scales == (1, 6)


def test_frostman_report_matches_cover_cost(tmp_path, capsys):
    cells = write_square(tmp_path)
    out, report = tmp_path / "mu.json", tmp_path / "report.json"
    code = run([
        "frostman", "--cells", str(cells), "--gauge", "powerexp:1:0.5",
        "--out", str(out), "--report", str(report), "--ball-check", "32",
    ])
    assert code == 0
    rep = json.loads(report.read_text())
    assert rep["passed"] is True
    assert rep["total_mass"] == pytest.approx(rep["cover_cost"], rel=1e-9)
    assert rep["max_ratio"] <= 1.0 + 1e-9
    assert rep["ball_constant"] > 0.0
    mu = CellMeasure.load(out)
    assert mu.total == pytest.approx(rep["total_mass"], rel=1e-15)
    assert "total mass" in capsys.readouterr().out


def test_content_cost_and_cover(tmp_path):
    cells = write_square(tmp_path, depth=2)
    out = tmp_path / "content.json"
    assert run([
        "content", "--cells", str(cells), "--gauge", "powerexp:2:0",
        "--out", str(out),
    ]) == 0
    got = json.loads(out.read_text())
    # h(r) = r^2 makes every cover of the square cost its squared diameter
    assert got["cost"] == pytest.approx(2.0, rel=1e-12)
    assert got["min_level"] == 0
    assert got["cover"] == [[0, [0, 0]]]


def test_content_profile_csv(tmp_path):
    cells = write_square(tmp_path, depth=3)
    out = tmp_path / "profile.csv"
    assert run([
        "content", "--cells", str(cells), "--gauge", "powerexp:1:0.5",
        "--profile", "--format", "csv", "--out", str(out),
    ]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 4  # min_level 0..depth
    costs = [float(r["cost"]) for r in rows]
    assert costs == sorted(costs)  # deeper floors never get cheaper


def test_sparsify_command(tmp_path, capsys):
    cells = write_square(tmp_path)
    mu_path = tmp_path / "mu.json"
    assert run([
        "frostman", "--cells", str(cells), "--gauge", "powerexp:1:0.5",
        "--out", str(mu_path),
    ]) == 0
    capsys.readouterr()
    out, cert, report = tmp_path / "sparse.json", tmp_path / "cert.json", tmp_path / "rep.json"
    code = run([
        "sparsify", "--measure", str(mu_path), "--gauge", "powerexp:1:0.5",
        "--ell", "4", "--depth", "24", "--out", str(out), "--cert", str(cert),
        "--report", str(report),
    ])
    assert code == 0
    assert "certified scales: 17" in capsys.readouterr().out
    rep = json.loads(report.read_text())
    assert rep["passed"] is True
    assert rep["scales"] == [17]
    assert rep["coarse_drift"] <= 1e-12
    assert rep["cap_ratio_k"] <= 1.0 + 1e-9
    back = SparsityCertificate.load(cert)
    assert back.scales == (17,)


def test_beta_csv_on_flat_cells(tmp_path):
    cells_path = tmp_path / "patch.json"
    assert run([
        "generate", "--kind", "plane-patch", "--depth", "6", "--out", str(cells_path),
    ]) == 0
    out = tmp_path / "beta.csv"
    assert run([
        "beta", "--cells", str(cells_path), "--center", "0.5,0.0078125",
        "--scales", "2:8", "--format", "csv", "--out", str(out),
    ]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["x0", "x1", "level", "beta"]
    assert len(rows) == 8
    assert all(float(r[3]) < 1e-10 for r in rows[1:])


def test_beta_from_measure_json(tmp_path):
    cells = write_square(tmp_path)
    mu_path = tmp_path / "mu.json"
    assert run(["frostman", "--cells", str(cells), "--out", str(mu_path)]) == 0
    out = tmp_path / "beta.json"
    assert run([
        "beta", "--measure", str(mu_path), "--center", "0.5,0.5",
        "--scales", "1:4", "--out", str(out),
    ]) == 0
    got = json.loads(out.read_text())
    assert got["levels"] == [1, 2, 3, 4]
    assert all(v > 0.1 for v in got["values"])  # a full square is nowhere flat


def test_epsilon_halfspace(tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"kind": "halfspace", "normal": [0.0, 1.0], "point": [0.5, 0.5]}))
    out = tmp_path / "eps.json"
    assert run([
        "epsilon", "--pair", str(pair), "--center", "0.5,0.5", "--r", "0.25",
        "--samples", "100000", "--out", str(out),
    ]) == 0
    got = json.loads(out.read_text())
    assert got["value"] < 1e-3
    assert got["round_minima"][-1] == got["value"]
    mins = got["round_minima"]
    assert all(b <= a for a, b in zip(mins, mins[1:]))


def test_epsilon_profile_csv(tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"kind": "empty", "dim": 2}))
    out = tmp_path / "eps.csv"
    assert run([
        "epsilon", "--pair", str(pair), "--center", "0.5,0.5",
        "--scales", "2:5", "--samples", "512", "--format", "csv", "--out", str(out),
    ]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert len(rows) == 5
    values = [float(r[3]) for r in rows[1:]]
    assert all(v == pytest.approx(2.0 * 3.141592653589793, rel=1e-12) for v in values)


# c0-trials must stay large enough for the clearance estimate to settle
# below the construction's actual minimum; 8 trials leaves it too high
EXTRACT_ARGS = [
    "--k", "1", "--depth", "40", "--seed", "0",
    "--witness-samples", "6", "--c0-trials", "64", "--beta-centers", "2",
]

ARTIFACTS = (
    "certificate.json",
    "frostman_measure.json",
    "sparse_measure.json",
    "summary.json",
    "beta.csv",
)


def test_extract_core_pipeline(tmp_path, capsys):
    cells_path = tmp_path / "cantor.json"
    assert run(["generate", "--kind", "four-corner-cantor", "--depth", "8", "--out", str(cells_path)]) == 0
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert run(["extract-core", "--cells", str(cells_path), *EXTRACT_ARGS, "--outdir", str(out1)]) == 0
    assert "extracted core with scales" in capsys.readouterr().out
    assert run(["extract-core", "--cells", str(cells_path), *EXTRACT_ARGS, "--outdir", str(out2)]) == 0
    for name in ARTIFACTS:
        f1, f2 = out1 / name, out2 / name
        assert f1.exists(), name
        assert f1.read_bytes() == f2.read_bytes(), name
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["params"]["gauge"] == "powerexp:1:0.5"
    assert summary["sparsify"]["scales"] == [17, 33]
    assert summary["c0"]["value"] > 0.0
    assert summary["witness"]["passed"] is True


def test_exit_code_invalid_input(tmp_path, capsys):
    assert run(["generate", "--kind", "no-such-kind", "--out", str(tmp_path / "x.json")]) == 3
    capsys.readouterr()
    assert run(["frostman", "--cells", str(tmp_path / "missing.json"), "--out", str(tmp_path / "y.json")]) == 3
    cells = write_square(tmp_path)
    assert run(["frostman", "--cells", str(cells), "--gauge", "power:oops", "--out", str(tmp_path / "z.json")]) == 3
    err = capsys.readouterr().err
    assert "invalid input" in err


def test_exit_code_depth_budget(tmp_path, capsys):
    cells_path = tmp_path / "cantor.json"
    run(["generate", "--kind", "four-corner-cantor", "--depth", "8", "--out", str(cells_path)])
    code = run(["extract-core", "--cells", str(cells_path), "--depth", "18", "--outdir", str(tmp_path / "out")])
    assert code == 4
    assert "depth budget" in capsys.readouterr().err


def test_exit_code_verification_with_stage(tmp_path, capsys):
    cells_path = tmp_path / "cantor.json"
    run(["generate", "--kind", "four-corner-cantor", "--depth", "8", "--out", str(cells_path)])
    capsys.readouterr()
    code = run([
        "extract-core", "--cells", str(cells_path), "--gauge", "power:1",
        "--outdir", str(tmp_path / "out"),
    ])
    assert code == 2
    assert capsys.readouterr().err.startswith("gauge:")


def test_console_script_smoke(tmp_path):
    out = tmp_path / "cells.json"
    proc = subprocess.run(
        ["gmtkit", "generate", "--kind", "plane-patch", "--depth", "4", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert "wrote 16 cells" in proc.stdout
