import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from gaugekit import cli
from gaugekit.config import ConfigError, build, set_path, validate_document

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


@pytest.fixture
def small_doc():
    return {
        "domain": {"dim": 3},
        "measure": {"kind": "uniform_ball_density", "center": [0, 0, 0], "radius": 0.5, "density": 1.0,
                    "resolution": [4, 16], "target_norm": 0.5},
        "boundary": {"nodes": 100},
        "evaluation": {"sample_count": 4, "z_count": 3, "kappa_samples": 500, "riccati_grid": 200},
        "analyses": ["gauge", "existence"],
    }


def test_run_minimal(tmp_path):
    assert cli.main(["run", str(CONFIGS / "minimal.json"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["analyses"]["gauge"]["values"] == [1]
    assert rep["norm"]["estimate"] == 0
    assert (tmp_path / "timings.json").exists()
    raw = (tmp_path / "gauge.csv").read_bytes()
    assert b"\r\n" not in raw and raw.endswith(b"\n")


def test_validate(capsys):
    assert cli.main(["validate", str(CONFIGS / "radial_study.json")]) == 0
    assert "ok" in capsys.readouterr().out


@pytest.mark.parametrize("mutate", [
    lambda d: d["measure"].update(amplitude=-1.0),
    lambda d: d.update(extra=1),
    lambda d: d["domain"].update(dim=2),
    lambda d: d.update(analyses=["gauge", "gauge"]),
])
def test_malformed_exit_2(tmp_path, mutate, capsys):
    doc = json.loads((CONFIGS / "minimal.json").read_text())
    mutate(doc)
    assert cli.main(["run", str(_write(tmp_path, doc))]) == 2
    assert "config error" in capsys.readouterr().err


def test_error_names_path():
    doc = json.loads((CONFIGS / "minimal.json").read_text())
    doc["measure"]["amplitude"] = -1
    with pytest.raises(ConfigError) as exc:
        validate_document(doc)
    assert "measure.amplitude" in str(exc.value)


def test_bad_json_and_args(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert cli.main(["run", str(p)]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2


def test_resource_exit_3(tmp_path, small_doc):
    small_doc["measure"]["resolution"] = [400, 800]
    assert cli.main(["run", str(_write(tmp_path, small_doc)), "--out", str(tmp_path / "o")]) == 3


def test_bad_threads(tmp_path, monkeypatch, small_doc):
    monkeypatch.setenv("GAUGEKIT_THREADS", "zero")
    assert cli.main(["run", str(_write(tmp_path, small_doc))]) == 2
    monkeypatch.setenv("GAUGEKIT_THREADS", "0")
    assert cli.main(["sweep", str(_write(tmp_path, small_doc)), "--param", "measure.target_norm",
                     "--values", "0.5"]) == 2


def test_set_path(small_doc):
    doc = set_path(small_doc, "measure.target_norm", 0.25)
    assert doc["measure"]["target_norm"] == 0.25 and small_doc["measure"]["target_norm"] == 0.5
    with pytest.raises(ConfigError):
        set_path(small_doc, "measure.nope", 1.0)
    with pytest.raises(ConfigError):
        set_path(small_doc, "analyses", 1.0)
    build(doc)


def test_sweep_matches_run(tmp_path, small_doc):
    cfg = _write(tmp_path, small_doc)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "run")]) == 0
    assert cli.main(["sweep", str(cfg), "--param", "measure.target_norm", "--values", "0.5,1.5",
                     "--out", str(tmp_path / "sw")]) == 0
    single = json.loads((tmp_path / "run" / "report.json").read_text())
    point = json.loads((tmp_path / "sw" / "point_000" / "report.json").read_text())
    assert point["analyses"]["gauge"] == single["analyses"]["gauge"]
    with open(tmp_path / "sw" / "summary.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(cli.SUMMARY_COLUMNS)
    assert len(rows) == 3
    assert [r[-1] for r in rows[1:]] == ["exists_certified", "nonexistence_certified"]
    assert b"\r\n" not in (tmp_path / "sw" / "summary.csv").read_bytes()


def test_sweep_parallel_identical(tmp_path, monkeypatch, small_doc):
    cfg = _write(tmp_path, small_doc)
    args = ["sweep", str(cfg), "--param", "measure.target_norm", "--values", "0.3,0.6"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("GAUGEKIT_THREADS", "2")
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for rel in ("summary.csv", "point_000/report.json", "point_001/report.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_run_deterministic(tmp_path, small_doc):
    cfg = _write(tmp_path, small_doc)
    for name in ("a", "b"):
        assert cli.main(["run", str(cfg), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_dumps_nonfinite():
    text = cli.dumps({"a": float("inf"), "b": float("nan"), "c": 0.1})
    doc = json.loads(text)
    assert doc == {"a": "inf", "b": "nan", "c": 0.1}


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gaugekit.cli", "validate", str(CONFIGS / "minimal.json")],
                         capture_output=True, text=True)
    assert out.returncode == 0
