import csv
import io
import json

import numpy as np
import pytest

from barcode_coords import cli
from barcode_coords.features import FeatureMatrix
from barcode_coords.ingest import block_digit, synth_lesions, write_pgm
from barcode_coords.learn import ConvergenceError
from barcode_coords.pipeline import ConfigError, ExperimentConfig


@pytest.fixture
def digit_pgm(tmp_path):
    p = tmp_path / "zero.pgm"
    p.write_bytes(write_pgm(block_digit(0)))
    return str(p)


@pytest.fixture
def separable_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0, 0.1, (12, 3)), rng.normal(3, 0.1, (12, 3))])
    fm = FeatureMatrix(X, ["a", "b", "c"], labels=[0] * 12 + [1] * 12)
    p = tmp_path / "feats.csv"
    p.write_text(fm.to_csv())
    return p


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- barcode ----------------------------------------------------------------------------------


def test_barcode_one_sweep(capsys, digit_pgm):
    code, out, _ = run(capsys, "barcode", "--sweep", "right", digit_pgm)
    assert code == 0
    data = json.loads(out)["barcodes"]
    assert [(b["sweep"], b["dim"]) for b in data] == [("right", 0), ("right", 1)]
    loops = [b for b in data[1]["bars"] if b[2] == "inf"]
    assert len(loops) == 1


def test_barcode_all_sweeps(capsys, digit_pgm):
    code, out, _ = run(capsys, "barcode", "--all-sweeps", digit_pgm)
    assert code == 0
    assert len(json.loads(out)["barcodes"]) == 8
    code, out2, _ = run(capsys, "barcode", "--sweep", "all", digit_pgm)
    assert out2 == out  # deterministic


def test_barcode_text_format(capsys, digit_pgm):
    code, out, _ = run(capsys, "barcode", "--sweep", "top", "--format", "text", digit_pgm)
    assert code == 0
    assert out.startswith("# filtration=sweep sweep=top dim=0\n")
    assert "1 " in out


def test_barcode_intensity_and_slices(capsys, tmp_path):
    s = synth_lesions(1, 0)[0]
    img, mask = tmp_path / "l.pgm", tmp_path / "m.pgm"
    img.write_bytes(write_pgm(s.image))
    mask.write_bytes(write_pgm(type(s.image)(s.mask.on.astype(float))))
    code, out, _ = run(capsys, "barcode", "--filtration", "intensity", "--mask", str(mask), str(img))
    assert code == 0 and len(json.loads(out)["barcodes"]) == 4
    code, out, _ = run(capsys, "barcode", "--filtration", "border-slices", "--mask", str(mask), str(img))
    assert code == 0 and len(json.loads(out)["barcodes"]) == 56


def test_barcode_bad_input(capsys, tmp_path):
    code, _, err = run(capsys, "barcode", str(tmp_path / "missing.pgm"))
    assert code == 2 and "error" in err
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P6 1 1 255 abc")
    assert run(capsys, "barcode", str(bad))[0] == 2


# --- features ----------------------------------------------------------------------------------


def test_features_digits(capsys, tmp_path):
    sparse = tmp_path / "d.svm"
    code, out, _ = run(capsys, "features", "--dataset", "synth-digits", "--n", "10", "--sparse-out", str(sparse))
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 11 and all(len(r) == 34 for r in rows)
    assert rows[0][:3] == ["id", "label", "right_b0_f1"]
    assert len(sparse.read_text().splitlines()) == 10


def test_features_lesions(capsys):
    code, out, _ = run(capsys, "features", "--dataset", "synth-lesions", "--n", "1")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 4 and all(len(r) == 226 for r in rows)
    assert [r[1] for r in rows[1:]] == ["cyst", "metastasis", "hemangioma"]


def test_features_empty(capsys):
    code, out, _ = run(capsys, "features", "--dataset", "synth-digits", "--n", "0")
    assert code == 0
    assert len(out.splitlines()) == 1 and out.startswith("id,label,")


def test_features_bad_dataset(capsys, tmp_path):
    code, _, err = run(capsys, "features", "--dataset", "mnist")
    assert code == 2
    code, _, _ = run(capsys, "features", "--dataset", "mnist", "--images", str(tmp_path / "x"),
                     "--labels", str(tmp_path / "y"))
    assert code == 2


# --- classify --------------------------------------------------------------------------------


def write_config(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(kw))
    return str(p)


def test_classify_separable(capsys, tmp_path, separable_csv):
    cfg = write_config(tmp_path, dataset="features-csv", features_csv=separable_csv.name, folds=4,
                       c_grid=[1, 1000], output="report.json")
    code, out, _ = run(capsys, "classify", cfg)
    assert code == 0
    assert "mean accuracy 1.0000" in out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["results"][0]["best_mean_accuracy"] == 1.0
    assert report["features"] == 3 and report["samples"] == 24


def test_classify_overrides(capsys, tmp_path, separable_csv):
    cfg = write_config(tmp_path, dataset="features-csv", features_csv=str(separable_csv))
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "classify", cfg, "--kernel", "poly", "--gamma", "2", "--coef-a", "2",
                       "--degree", "3", "--c-grid", "10", "--loocv", "--selection", "second-order",
                       "--out", str(out_path))
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["config"]["loocv"] and report["config"]["kernels"][0]["kind"] == "poly"
    assert report["results"][0]["by_C"][0]["folds"] == 24


def test_classify_config_errors(capsys, tmp_path, separable_csv):
    cfg = write_config(tmp_path, dataset="features-csv", features_csv=str(separable_csv), folds=25)
    assert run(capsys, "classify", cfg)[0] == 2
    cfg = write_config(tmp_path, dataset="features-csv", features_csv=str(separable_csv), bogus=1)
    assert run(capsys, "classify", cfg)[0] == 2
    cfg = write_config(tmp_path, dataset="features-csv", features_csv=str(separable_csv), c_grid=[-1])
    assert run(capsys, "classify", cfg)[0] == 2
    (tmp_path / "broken.json").write_text("{")
    assert run(capsys, "classify", str(tmp_path / "broken.json"))[0] == 2


def test_classify_nonconvergence(capsys, tmp_path, separable_csv, monkeypatch):
    def fail(*a, **k):
        raise ConvergenceError("stuck")

    monkeypatch.setattr(cli, "cross_validate_grid", fail)
    cfg = write_config(tmp_path, dataset="features-csv", features_csv=str(separable_csv), folds=4)
    code, _, err = run(capsys, "classify", cfg)
    assert code == 3 and "stuck" in err


def test_config_round_trip():
    cfg = ExperimentConfig(dataset="synth-lesions", n=5, loocv=True, kernels=[{"kind": "gaussian", "gamma": 0.5}])
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig(dataset="mnist").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(kernels=[{"kind": "linear"}]).validate()


# --- verify-algebra -------------------------------------------------------------------------------


def test_verify_algebra_default(capsys, tmp_path):
    js = tmp_path / "h.json"
    code, out, _ = run(capsys, "verify-algebra", "--json", str(js))
    assert code == 0
    table = [line.split() for line in out.splitlines()[1:10]]
    assert [int(r[1]) for r in table] == [1, 1, 3, 6, 13, 24, 48, 86, 160]
    assert all(r[1] == r[2] for r in table)
    assert json.loads(js.read_text())["coefficients"]["8"] == 160


def test_verify_algebra_injected_bug(capsys):
    code, _, err = run(capsys, "verify-algebra", "--inject-bug", "--trials", "20")
    assert code == 1 and "FAIL" in err
