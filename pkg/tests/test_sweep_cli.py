import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

import nomo_lab.variational
from nomo_lab import closed_forms as cf
from nomo_lab.cli import main
from nomo_lab.model import QuadraticForm
from nomo_lab.sweep import COLUMNS, GRID_COLUMN, SweepSpec, ordering_violations, read_csv, rows_to_csv, rows_to_json, run_sweep

S3 = math.sqrt(3)


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def default_sweep():
    spec = SweepSpec()
    return spec, run_sweep(spec)


def row_at(rows, lam):
    return next(r for r in rows if abs(r["lambda"] - lam) < 1e-12)


def test_sweep_rows(default_sweep):
    spec, rows = default_sweep
    assert len(rows) == 101
    assert [r["lambda"] for r in rows] == pytest.approx(np.linspace(0, 5, 101).tolist())
    r1 = row_at(rows, 1.0)
    assert r1["exact"] == pytest.approx(S3, abs=1e-10) and r1["tf"] == pytest.approx(S3, abs=1e-10)
    assert r1["tc"] == pytest.approx(2.1213203, abs=1e-7)
    assert r1["tf_alpha"] == pytest.approx(1.1547005, abs=1e-7) and r1["tf_beta"] == pytest.approx(1.1547005, abs=1e-7)
    r0 = row_at(rows, 0.0)
    assert r0["exact"] == pytest.approx(1.3660254, abs=1e-7)
    assert r0["tf"] == pytest.approx(1.3938469, abs=1e-7)
    assert all(r["converged"] for r in rows)
    assert ordering_violations(rows) == []


def test_csv_roundtrip(default_sweep):
    spec, rows = default_sweep
    text = rows_to_csv(rows, spec.columns)
    first, header = text.splitlines()[:2]
    assert first.startswith("# nomo-lab v1")
    assert header.split(",") == list(COLUMNS)
    back = read_csv(text)
    for a, b in zip(rows, back):
        for c in COLUMNS:
            assert a[c] == b[c]


def test_json_roundtrip(default_sweep):
    spec, rows = default_sweep
    back = json.loads(rows_to_json(rows, spec.columns))
    assert back[10] == {c: rows[10][c] for c in spec.columns}


def test_sweep_thread_count_does_not_change_output(monkeypatch):
    spec = SweepSpec(0, 2, 9)
    monkeypatch.setenv("NOMO_LAB_THREADS", "1")
    one = rows_to_csv(run_sweep(spec))
    monkeypatch.setenv("NOMO_LAB_THREADS", "4")
    four = rows_to_csv(run_sweep(spec))
    assert one == four


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(1, 1, 5)
    with pytest.raises(ValueError):
        SweepSpec(0, 1, 1)
    with pytest.raises(ValueError):
        SweepSpec(variants=("tf", "bogus"))


def test_sweep_subset_leaves_columns_empty():
    rows = run_sweep(SweepSpec(0, 1, 3, ("tf",)))
    text = rows_to_csv(rows)
    back = read_csv(text)
    assert back[0]["tc"] is None and back[0]["exact"] is None
    assert back[2]["tf"] == pytest.approx(cf.tf_energy(1.0))


def test_ordering_violations_reports():
    bad = ordering_violations([{"lambda": 2.0, "exact": 1.0, "tf": 0.9, "ctc": 1.1, "tc": 1.2}])
    assert len(bad) == 1 and "exact" in bad[0] and "lambda=2" in bad[0]
    assert ordering_violations([{"lambda": 0.0, "exact": 1.0, "tf": math.nan, "ctc": 1.1, "tc": 1.2}])


@pytest.mark.parametrize("variant, energy", [("tf", "1.73205081"), ("rel-unc", "2"), ("exact", "1.73205081")])
def test_cli_solve_text(variant, energy):
    code, out = run("solve", "--lambda", "1", "--variant", variant)
    assert code == 0
    line = out.splitlines()[1].split()
    assert line[0] == variant and line[1] == energy


def test_cli_solve_json():
    code, out = run("solve", "--lambda", "1", "--format", "json", "--dump-transform")
    assert code == 0
    doc = json.loads(out)
    energies = {r["variant"]: r["energy"] for r in doc["results"]}
    assert energies["tf"] == pytest.approx(S3, abs=1e-10)
    assert energies["ctc"] == pytest.approx(5 * math.sqrt(2) / 4, abs=1e-10)
    assert energies["rel-unc"] == pytest.approx(2.0, abs=1e-10)
    assert doc["transform"]["t"][0] == pytest.approx([1 / 3] * 3)


def test_cli_solve_full_family():
    code, out = run("solve", "--lambda", "2", "--variant", "rel-unc", "--family", "full", "--format", "json")
    assert code == 0
    assert json.loads(out)["results"][0]["energy"] == pytest.approx(cf.exact_energy(2.0), abs=1e-9)


def test_cli_config(tmp_path):
    cfg = tmp_path / "two.json"
    cfg.write_text(json.dumps({"masses": [1, 1], "springs": [[0, 1, 1.0]]}))
    code, out = run("solve", "--config", str(cfg), "--variant", "exact", "--format", "json")
    assert code == 0
    assert json.loads(out)["results"][0]["energy"] == pytest.approx(math.sqrt(2) / 2)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["solve", "--variant", "bogus"], 2),
        (["frobnicate"], 2),
        (["solve", "--lambda", "1", "--config", "x.json"], 2),
        (["sweep", "--steps", "1"], 2),
        (["solve", "--lambda", "-1"], 3),
        (["marginal", "--variant", "ctc"], 6),
        (["solve", "--config", "/nonexistent/model.json"], 2),
    ],
)
def test_cli_exit_codes(argv, code):
    assert run(*argv)[0] == code


def test_cli_bad_config_is_model_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"masses": [1, 1, 1], "springs": [[0, 1, 1.0]]}))
    assert run("solve", "--config", str(cfg))[0] == 3


def test_cli_unwritable_output(tmp_path):
    target = tmp_path / "missing-dir" / "out.csv"
    assert run("sweep", "--steps", "2", "--variant", "tf", "--output", str(target))[0] == 5


def test_cli_sweep_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--lambda-min", "0", "--lambda-max", "2", "--steps", "11", "--seed", "3"]
    assert run(*args, "--output", str(a))[0] == 0
    assert run(*args, "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_sweep_grid_column():
    code, out = run("sweep", "--lambda-min", "0", "--lambda-max", "1", "--steps", "2", "--variant", "exact", "--grid-check")
    assert code == 0
    rows = read_csv(out)
    assert out.splitlines()[1].split(",")[-1] == GRID_COLUMN
    for r in rows:
        assert r[GRID_COLUMN] == pytest.approx(r["exact"], abs=3e-3)


def test_cli_sweep_json():
    code, out = run("sweep", "--steps", "3", "--format", "json")
    assert code == 0
    assert [r["lambda"] for r in json.loads(out)] == [0.0, 2.5, 5.0]


def test_cli_marginal(tmp_path):
    dump = tmp_path / "m.json"
    code, out = run("marginal", "--lambda", "1", "--variant", "tc", "--dump", str(dump), "--dump-transform")
    assert code == 0
    assert "alpha: 0.942809042" in out
    doc = json.loads(dump.read_text())
    assert doc["marginal"]["frame"].startswith("internal:")
    assert doc["alpha"] == pytest.approx(cf.product_marginal(*cf.tc_params(1.0))[0], abs=1e-10)
    assert "transform" in doc


def test_cli_verify_quick():
    code, out = run("verify")
    assert code == 0
    assert out.strip().endswith("16/16 checks passed")


def test_cli_verify_tampered_potential(monkeypatch):
    original = nomo_lab.variational.potential_form

    def halved(model):
        v = original(model)
        return QuadraticForm(v.kind, 0.5 * v.matrix, v.frame)

    monkeypatch.setattr(nomo_lab.variational, "potential_form", halved)
    code, out = run("verify", "--level", "quick")
    assert code == 1
    failing = [ln for ln in out.splitlines() if "FAIL" in ln]
    assert any(ln.startswith("ordering exact<=tf<=ctc<=tc") for ln in failing)
    assert "exact=" in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nomo_lab", "solve", "--lambda", "1", "--variant", "exact"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "1.73205081" in proc.stdout


def test_cli_verify_full():
    code, out = run("verify", "--level", "full")
    assert code == 0
    assert out.count("grid oracle (extrapolated)") == 5
