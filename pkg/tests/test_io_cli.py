import csv
import io as _stdio
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given

from conftest import PHI, families
from jsrkit import gallery, io
from jsrkit.cli import main
from jsrkit.family import MatrixFamily, scale_family
from jsrkit.inclusion import PerturbedSystem

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def family_file(tmp_path, F, name="f.json"):
    return write(tmp_path, name, io.emit_family(F))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


# ---------------------------------------------------------------- family files

@given(families())
def test_round_trip(F):
    G = io.parse_family(io.emit_family(F))
    assert G.name == F.name and G.labels == F.labels
    assert all(np.array_equal(a, b) for a, b in zip(F, G))
    assert io.emit_family(G) == io.emit_family(F)


def test_system_round_trip():
    sys_ = PerturbedSystem(np.diag([0.5, 0.25]), (SWAP, 1j * np.eye(2)), name="s")
    back = io.parse_system(io.emit_system(sys_))
    assert np.array_equal(back.A0, sys_.A0)
    assert all(np.array_equal(a, b) for a, b in zip(back.directions, sys_.directions))
    assert back.delta_norm == "inf"


@pytest.mark.parametrize("text,needle", [
    ('{"name": "x", "n": 2, "matrices": []}', "line 1"),
    ('{"name": "x", "n": 2,\n "matrices": [{"label": "A", "rows": [[[1, 0], [2, 0]]]}]}', "line 2"),
    ('{"name": "x", "n": 1,\n "matrices": [{"label": "A", "rows": [[[1, 0, 3]]]}]}', "line 2"),
    ('{"name": "x", "n": 1, "matrices": [{"label": "A", "rows": [[["a", 0]]]}]}', "column"),
    ('{"name": "x", "n": 2, "matrices": [\n', "line 2"),
])
def test_malformed_files_report_location(tmp_path, capsys, text, needle):
    path = write(tmp_path, "bad.json", text)
    code, out, err = run(capsys, "bounds", path)
    assert code == 64
    assert needle in err and "column" in err
    with pytest.raises(io.FamilyFileError):
        io.parse_family(text)


def test_missing_file_is_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "bounds", tmp_path / "nope.json")
    assert code == 64 and err


# ---------------------------------------------------------------- bounds

def test_bounds_blondel_csv(tmp_path, capsys):
    path = family_file(tmp_path, gallery.blondel(1.0))
    code, out, _ = run(capsys, "bounds", path, "--kmax", 6, "--csv", "-")
    assert code == 0
    rows = list(csv.DictReader(_stdio.StringIO(out)))
    assert list(rows[0]) == ["k", "lower_k", "witness_lower", "upper_rowsum", "upper_spectral", "upper_colsum",
                             "witness_rowsum", "witness_spectral", "witness_colsum", "msr_k", "multiplications"]
    assert len(rows) == 6
    assert float(rows[1]["lower_k"]) >= 1.6180 and rows[1]["witness_lower"] == "0-1"


def test_bounds_single_matrix_lower_is_constant(tmp_path, capsys):
    A = np.array([[0.5, 2.0], [0.0, -0.75]])
    path = family_file(tmp_path, MatrixFamily.of(A))
    code, rep = report(capsys, "bounds", path, "--kmax", 5)
    lowers = [r["lower"] for r in rep["result"]["bracket"]["records"]]
    assert code == 0 and lowers == pytest.approx([0.75] * 5, rel=1e-12)


def test_bounds_budget_exceeded_is_partial(tmp_path, capsys):
    path = family_file(tmp_path, gallery.blondel(1.0))
    code, rep = report(capsys, "bounds", path, "--kmax", 8, "--budget", 20)
    br = rep["result"]["bracket"]
    assert code == 0 and br["partial"] and br["multiplications_used"] <= 20


def test_bounds_report_written_to_file(tmp_path, capsys):
    path = family_file(tmp_path, gallery.blondel(1.0))
    out = tmp_path / "rep.json"
    csv_path = tmp_path / "b.csv"
    code, stdout, _ = run(capsys, "bounds", path, "--kmax", 3, "--out", out, "--csv", csv_path)
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["command"] == "bounds"
    assert csv_path.read_text().startswith("k,lower_k")


def test_bounds_csv_is_bit_exact(tmp_path, capsys):
    path = family_file(tmp_path, gallery.berger_wang(3, 1.1))
    a = run(capsys, "bounds", path, "--kmax", 6, "--csv", "-")[1]
    b = run(capsys, "bounds", path, "--kmax", 6, "--csv", "-")[1]
    assert a == b


def test_bad_kmax_is_usage_error(tmp_path, capsys):
    path = family_file(tmp_path, gallery.blondel(1.0))
    for cmd in ("bounds", "smp"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, path, "--kmax", "0"])
        assert exc.value.code == 64
    capsys.readouterr()


# ---------------------------------------------------------------- decide / special / smp

@pytest.mark.parametrize("F,code", [
    (scale_family(gallery.blondel(1.0), 0.5), 0),
    (gallery.berger_wang(3, 1.1), 1),
    (gallery.stochastic(), 2),
])
def test_decide_exit_codes(tmp_path, capsys, F, code):
    got, rep = report(capsys, "decide", family_file(tmp_path, F))
    assert got == code
    v = rep["result"]["verdict"]
    assert v["status"] == ("stable", "unstable", "undecided")[code]
    if code == 1:
        assert len(v["witness"]) == 4 and v["value"] >= 1 - 1e-10


def test_special_outputs(tmp_path, capsys):
    code, rep = report(capsys, "special", family_file(tmp_path, gallery.conjugate_pair()))
    cf = rep["result"]["closed_form"]
    assert code == 0 and cf["rule"] == "ConjugatePair" and cf["value"] == pytest.approx(2)
    code, rep = report(capsys, "special", family_file(tmp_path, gallery.sign_flip(2, 1, -1, 0)))
    assert code == 0 and rep["result"]["closed_form"]["value"] == pytest.approx(1 + 2**0.5, abs=1e-10)
    rng = np.random.default_rng(11)
    F = MatrixFamily.of(rng.normal(size=(3, 3)), rng.normal(size=(3, 3)))
    code, out, err = run(capsys, "special", family_file(tmp_path, F))
    assert code == 3 and "no rule" in err and json.loads(out)["result"]["closed_form"] is None


def test_smp_certify(tmp_path, capsys):
    code, rep = report(capsys, "smp", family_file(tmp_path, gallery.conjugate_pair()), "--certify")
    top = rep["result"]["candidates"][0]
    assert code == 0 and top["certified"] and top["value"] == pytest.approx(2)
    assert np.allclose([[z[0] for z in row] for row in top["certificate_P"]], np.eye(2))


def test_smp_blondel_candidate(tmp_path, capsys):
    code, rep = report(capsys, "smp", family_file(tmp_path, gallery.blondel(1.0)))
    top = rep["result"]["candidates"][0]
    assert code == 0 and top["word"] == [0, 1] and top["minimal"]
    assert top["value"] == pytest.approx(PHI, abs=1e-12)
    assert "certified" in top


# ---------------------------------------------------------------- robustness

def system_file(tmp_path, A0, dirs):
    return write(tmp_path, "sys.json", io.emit_system(PerturbedSystem(np.asarray(A0, float), tuple(dirs))))


def test_robustness_interval(tmp_path, capsys):
    code, rep = report(capsys, "robustness", system_file(tmp_path, np.diag([0.5, 0.5]), [SWAP]),
                       "--tol", 0.02)
    r = rep["result"]
    assert code == 0 and r["alpha_star_lo"] <= 0.5 <= r["alpha_star_hi"]
    assert r["alpha_star_hi"] - r["alpha_star_lo"] <= 0.02
    assert rep["options"]["delta_norm"] == "inf" and r["sampled_lower_envelope"] is False


def test_robustness_zero_direction(tmp_path, capsys):
    code, rep = report(capsys, "robustness", system_file(tmp_path, np.diag([0.5, 0.5]), [np.zeros((2, 2))]),
                       "--alpha-hi", 3)
    assert code == 0 and rep["result"]["alpha_star_lo"] == 3.0


def test_robustness_precondition_exit(tmp_path, capsys):
    code, out, err = run(capsys, "robustness", system_file(tmp_path, np.eye(2), [SWAP]))
    assert code == 65 and out == "" and "precondition" in err


# ---------------------------------------------------------------- gallery

def test_gallery_blondel(capsys):
    code, out, _ = run(capsys, "gallery", "blondel", "--alpha", 1)
    F = io.parse_family(out)
    assert code == 0
    assert np.array_equal(F[0], [[1, 1], [0, 1]]) and np.array_equal(F[1], [[1, 0], [1, 1]])


def test_gallery_berger_wang(capsys):
    _, out, _ = run(capsys, "gallery", "berger-wang", "--k", 3, "--alpha", 1.1)
    F = io.parse_family(out)
    assert np.allclose(F[0], 1.1**3 * np.array([[0, 0], [1, 0]]))
    t = np.pi / 6
    assert np.allclose(F[1], np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]]) / 1.1)


def test_gallery_sign_flip_alias(capsys):
    _, out, _ = run(capsys, "gallery", "thm4", "--a", 2, "--b", 1, "--c", -1, "--d", 0)
    F = io.parse_family(out)
    assert np.array_equal(F[0], [[2, 1], [-1, 0]]) and np.array_equal(F[1], [[2, -1], [1, 0]])


def test_gallery_rejects_bad_parameters(capsys):
    code, _, err = run(capsys, "gallery", "berger-wang", "--k", 3, "--alpha", 5)
    assert code == 64 and err


# ---------------------------------------------------------------- reports

def test_reports_are_deterministic(tmp_path, capsys):
    path = family_file(tmp_path, gallery.berger_wang(3, 1.1))
    for argv in (["decide", path], ["bounds", path, "--kmax", 5], ["smp", path, "--kmax", 5],
                 ["structure", path, "--K", 16]):
        a = report(capsys, *argv)[1]
        b = report(capsys, *argv)[1]
        a.pop("timing"), b.pop("timing")
        assert a == b


def test_seed_is_echoed(tmp_path, capsys):
    path = family_file(tmp_path, gallery.blondel(1.0))
    assert report(capsys, "decide", path)[1]["seed"] == 0
    rep = report(capsys, "structure", path, "--seed", 17, "--K", 8)[1]
    assert rep["seed"] == 17
    with open(path, "rb") as fh:
        assert rep["input_sha256"] == io.digest(fh.read())


def test_structure_report(tmp_path, capsys):
    F = MatrixFamily.of(np.array([[1.0, 1.0], [0.0, 2.0]]), np.array([[3.0, 1.0], [0.0, 1.0]]))
    code, rep = report(capsys, "structure", family_file(tmp_path, F), "--rho", 3, "--K", 16)
    assert code == 0 and rep["result"]["reducibility"]["n1"] == 1
    assert rep["result"]["defectivity"]["classification"] in ("BoundedEvidence", "GrowthEvidence", "Inconclusive")


# ---------------------------------------------------------------- trajectory

def test_trajectory_csv(tmp_path, capsys):
    path = family_file(tmp_path, gallery.stochastic())
    code, out, _ = run(capsys, "trajectory", path, "--policy", "cyclic:0-1", "--K", 5)
    rows = list(csv.reader(_stdio.StringIO(out)))
    assert code == 0 and rows[0] == ["k", "re_0", "im_0", "re_1", "im_1", "norm"] and len(rows) == 7
    assert all(float(r[-1]) == pytest.approx(1.0) for r in rows[1:])
    code, out, err = run(capsys, "trajectory", path, "--policy", "sideways")
    assert code == 64 and "policy" in err


def test_module_entry_point(tmp_path):
    path = family_file(tmp_path, gallery.stochastic())
    env = dict(os.environ, JSRKIT_DISABLE_JIT="1")
    proc = subprocess.run([sys.executable, "-m", "jsrkit", "decide", path], capture_output=True, text=True, env=env)
    assert proc.returncode == 2
    rep = json.loads(proc.stdout)
    assert rep["backend"] == "numpy" and rep["result"]["verdict"]["boundary"]
