import json

import numpy as np
import pytest
from click.testing import CliRunner

from mtsurf import __version__
from mtsurf.cli import fmt, load_manifest, main, parse_complex
from mtsurf.errors import ManifestError
from mtsurf.minkowski import random_lorentz

TORUS = {"surface": {"id": "flat_torus", "params": {"h": 1.0}}, "grid": {"shape": [32, 32]}}
DEGENERATE = {"surface": {"id": "degenerate", "params": {"profile": {"kind": "sine", "amplitude": 0.2}}},
              "grid": {"shape": [24, 24], "origin": [0, -1.5], "extent": [2 * np.pi, 3.0],
                       "periodic": [True, False]}}


def manifest(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(json.dumps(body))
    return str(p)


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_analyze_torus(tmp_path):
    m = manifest(tmp_path, "t.json", TORUS)
    r = run("analyze", "--manifest", m, "--out", tmp_path / "out")
    assert r.exit_code == 0, r.output
    cls = json.loads((tmp_path / "out" / "classification.json").read_text())
    assert cls["classification"] == "constrained-willmore"
    assert cls["version"] == __version__ and len(cls["manifest_sha256"]) == 64
    assert cls["willmore_energy"] == pytest.approx(2 * np.pi ** 2)
    res = json.loads((tmp_path / "out" / "residuals.json").read_text())
    assert res["passed"] and res["residuals"]["gauss"]["max"] < 1e-8
    header = (tmp_path / "out" / "invariants.csv").read_text().splitlines()
    assert header[0].startswith("x,y,reported,u,") and "kappa_re" in header[0]
    assert len(header) == 1 + 32 * 32


def test_analyze_degenerate_surface(tmp_path):
    m = manifest(tmp_path, "d.json", DEGENERATE)
    r = run("analyze", "--manifest", m, "--out", tmp_path / "out")
    assert r.exit_code == 0, r.output
    cls = json.loads((tmp_path / "out" / "classification.json").read_text())
    assert cls["classification"] == "gauss-map-constant"
    assert cls["flags"]["non_isotropic"] is False


def test_analyze_fails_on_tight_tolerance(tmp_path):
    m = manifest(tmp_path, "t.json", TORUS)
    r = run("analyze", "--manifest", m, "--out", tmp_path / "out", "--backend", "fd", "--tol", "1e-12")
    assert r.exit_code == 1


def test_corrupted_csv_exits_2(tmp_path):
    (tmp_path / "pos.csv").write_text("x,y,f0,f1,f2,f3,f4\n0,0,1,0,0,0,zero\n")
    m = manifest(tmp_path, "c.json", {"surface": {"csv": "pos.csv"}})
    r = CliRunner().invoke(main, ["analyze", "--manifest", m, "--out", str(tmp_path / "o")])
    assert r.exit_code == 2
    assert "pos.csv:2" in r.output


@pytest.mark.parametrize("body, message", [
    ("{not json", "invalid JSON"),
    ('{"grid": {}}', "surface"),
    ('{"surface": {"id": "flat_torus"}, "deform": {"family": "lambda", "params": []}}', "nonempty"),
    ('{"surface": {"id": "flat_torus"}, "backend": "spectral"}', "backend"),
    ('{"surface": {"id": "flat_torus"}, "grid": {"shape": [0, 4]}}', "invalid grid"),
])
def test_manifest_errors(tmp_path, body, message):
    p = tmp_path / "m.json"
    p.write_text(body)
    with pytest.raises(ManifestError, match=message):
        load_manifest(p)
    r = CliRunner().invoke(main, ["analyze", "--manifest", str(p), "--out", str(tmp_path / "o")])
    assert r.exit_code == 2


def test_missing_output_directory(tmp_path):
    r = CliRunner().invoke(main, ["analyze", "--manifest", manifest(tmp_path, "t.json", TORUS)])
    assert r.exit_code == 2 and "--out" in r.output


def test_deform_lambda(tmp_path):
    body = dict(TORUS, deform={"family": "lambda", "params": [[0, 1], [np.cos(np.pi / 6), np.sin(np.pi / 6)]]})
    r = run("deform", "--manifest", manifest(tmp_path, "l.json", body), "--out", tmp_path / "out")
    assert r.exit_code == 0, r.output
    for k in ("00", "01"):
        d = tmp_path / "out" / f"lambda_{k}"
        laws = json.loads((d / "laws.json").read_text())
        assert laws["passed"]
        assert all(v["max"] < 1e-6 for v in laws["laws"].values() if "max" in v)
        assert (d / "surface.csv").read_text().startswith("x,y,f0,f1,f2,f3,f4\n")
        assert (d / "invariants.csv").exists()


def test_deform_calapso(tmp_path):
    body = dict(TORUS, deform={"family": "calapso", "params": [1, 3]})
    r = run("deform", "--manifest", manifest(tmp_path, "c.json", body), "--out", tmp_path / "out")
    assert r.exit_code == 0, r.output
    for k, t in (("00", 1), ("01", 3)):
        laws = json.loads((tmp_path / "out" / f"calapso_{k}" / "laws.json").read_text())
        assert laws["laws"]["s"]["max"] < 1e-6 and laws["param"] == [t, 0]


def test_deform_degenerate_names_the_flag(tmp_path):
    body = dict(DEGENERATE, deform={"family": "lambda", "params": [1]})
    r = CliRunner().invoke(main, ["deform", "--manifest", manifest(tmp_path, "d.json", body),
                                  "--out", str(tmp_path / "o")])
    assert r.exit_code == 3
    assert "non_isotropic" in r.output


def test_generate_and_verify(tmp_path):
    Phi = random_lorentz(np.random.default_rng(11), 0.5)
    t05 = {"surface": {"id": "flat_torus", "params": {"h": 0.5}}, "grid": {"shape": [24, 24]}}
    iso = {"surface": {"id": "flat_torus", "params": {"h": 0.5, "isometry": Phi.tolist()}},
           "grid": {"shape": [24, 24]}}
    a, b = manifest(tmp_path, "a.json", t05), manifest(tmp_path, "b.json", iso)
    r = run("verify", a, b, "--out", tmp_path / "v")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "v" / "congruence.json").read_text())
    assert rep["congruent"] and np.max(np.abs(np.array(rep["Phi"]) - Phi)) < 1e-9

    assert run("generate", "--manifest", a, "--out", tmp_path / "ga").exit_code == 0
    assert run("generate", "--manifest", b, "--out", tmp_path / "gb").exit_code == 0
    pa, pb = tmp_path / "ga" / "positions.csv", tmp_path / "gb" / "positions.csv"
    same = run("verify", pa, pa)
    assert same.exit_code == 0
    assert np.allclose(json.loads(same.output)["Phi"], np.eye(5), atol=1e-12)
    assert run("verify", pa, pb).exit_code == 0


def test_verify_distinct_tori_and_grid_mismatch(tmp_path):
    t1 = manifest(tmp_path, "t1.json", TORUS)
    t2 = manifest(tmp_path, "t2.json", dict(TORUS, surface={"id": "flat_torus", "params": {"h": 2.0}}))
    r = run("verify", t1, t2)
    assert r.exit_code == 1 and json.loads(r.output)["congruent"] is False
    small = manifest(tmp_path, "s.json", dict(TORUS, grid={"shape": [16, 16]}))
    r = CliRunner().invoke(main, ["verify", t1, small])
    assert r.exit_code == 4


def test_outputs_are_deterministic(tmp_path):
    m = manifest(tmp_path, "t.json", dict(TORUS, grid={"shape": [16, 16]}))
    for k in ("a", "b"):
        assert run("analyze", "--manifest", m, "--out", tmp_path / k).exit_code == 0
    for name in ("invariants.csv", "classification.json", "residuals.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_overrides_change_the_digest(tmp_path):
    m = manifest(tmp_path, "t.json", TORUS)
    a = load_manifest(m)
    b = load_manifest(m, grid=(16, 16))
    assert b.grid.shape == (16, 16) and a.digest != b.digest
    r = CliRunner().invoke(main, ["analyze", "--manifest", m, "--grid", "16x16", "--out", str(tmp_path)])
    assert r.exit_code == 2


def test_number_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(np.pi)) == np.pi
    assert parse_complex([0, 1]) == 1j and parse_complex("1+2j") == 1 + 2j and parse_complex(2) == 2
