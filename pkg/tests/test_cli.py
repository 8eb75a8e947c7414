import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gtsc.cli import main
from gtsc.tensor import save_tt3d

FAST = ["--r", "3", "--rounds", "2", "--max-iters", "30", "--restarts", "2"]


def run(argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    code, _ = run(["synth", "--out", d, "--classes", "2", "--per-class", "5", "--m", "5", "--k", "4",
                   "--pgm"])
    assert code == 0
    return d


def test_synth_outputs(data_dir):
    assert (data_dir / "data.tt3d").exists()
    assert len((data_dir / "data.labels").read_text().split()) == 10
    assert len(list((data_dir / "pgm").glob("*.pgm"))) == 10


def test_eval_byte_identical(data_dir, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, text = run(["eval", "--data", data_dir, "--method", "gtsc", "--seeds", "3", "--out", p] + FAST)
        assert code == 0
        assert "ACC mean" in text
    assert paths[0].read_bytes() == paths[1].read_bytes()
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "method,seed,acc,nmi" and len(lines) == 4


def test_eval_with_config_file(data_dir, tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("r = 3\nrounds = 1\nmax_iters = 20\nrestarts = 2\nn_runs = 2\n")
    code, text = run(["eval", "--data", data_dir / "pgm", "--method", "tubsc", "--config", cfg])
    assert code == 0
    assert text.startswith("method,seed,acc,nmi\ntubsc,0,")


def test_train_inspect_encode_cluster(data_dir, tmp_path):
    model = tmp_path / "model"
    code, _ = run(["train", "--data", data_dir, "--out", model, "--alpha", "0"] + FAST)
    assert code == 0
    assert json.loads((model / "model.json").read_text())["config"]["method"] == "tubsc"
    code, text = run(["inspect", "--model", model])
    assert code == 0
    assert "tubsc" in text.splitlines()[0]
    assert "slack" in text

    enc = tmp_path / "enc"
    code, _ = run(["encode", "--model", model, "--data", data_dir, "--out", enc])
    assert code == 0
    rows = (enc / "features.csv").read_text().splitlines()
    assert rows[0] == "image,c0,c1,c2" and len(rows) == 11

    cl = tmp_path / "cl"
    code, text = run(["cluster", "--features", enc / "features.csv", "--k", "2", "--seeds", "2",
                      "--labels", data_dir / "data.labels", "--out", cl])
    assert code == 0
    assert len((cl / "labels.txt").read_text().split()) == 10
    assert (cl / "report.csv").read_text().startswith("method,seed,acc,nmi\n")
    code, _ = run(["cluster", "--features", enc / "features.csv", "--k", "2", "--out", tmp_path / "c2"])
    assert code == 0


def test_missing_data_exit_2(tmp_path, capsys):
    code, _ = run(["train", "--data", tmp_path / "nothing", "--out", tmp_path / "m"])
    assert code == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: MissingData: ")
    code, _ = run(["inspect", "--model", tmp_path])
    assert code == 2


def test_usage_errors_exit_1(capsys):
    assert run(["frobnicate"])[0] == 1
    assert capsys.readouterr().err.startswith("error: usage: ")
    assert run(["train"])[0] == 1
    assert run(["eval", "--data", "x", "--method", "pca"])[0] == 1


def test_bad_config_value_exit_1(data_dir, tmp_path):
    assert run(["train", "--data", data_dir, "--out", tmp_path / "m", "--r", "0"])[0] == 1


def test_numerical_failure_exit_3(tmp_path, capsys):
    data = tmp_path / "huge.tt3d"
    save_tt3d(data, np.full((2, 6, 2), 1e200))
    with np.errstate(all="ignore"):
        code, _ = run(["train", "--data", data, "--out", tmp_path / "m", "--beta", "0.1"] + FAST)
    assert code == 3
    assert capsys.readouterr().err.startswith("error: NonFiniteObjective: ")


def test_nonfinite_data_exit_2(tmp_path, capsys):
    data = tmp_path / "nan.tt3d"
    save_tt3d(data, np.zeros((2, 3, 2)))
    raw = bytearray(data.read_bytes())
    raw[32:40] = np.array([np.nan]).tobytes()
    data.write_bytes(bytes(raw))
    code, _ = run(["train", "--data", data, "--out", tmp_path / "m"] + FAST)
    assert code == 2
    assert capsys.readouterr().err.startswith("error: NonFiniteData: ")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gtsc", "synth", "--out", str(tmp_path), "--classes", "2",
                           "--per-class", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "wrote 4 images" in proc.stdout
