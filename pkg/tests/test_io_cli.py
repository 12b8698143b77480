import json

import numpy as np
import pytest

from radonreg import verify
from radonreg.activations import synth_rbf_kernel
from radonreg.catalog import catalog_profile
from radonreg.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from radonreg.io import DatasetError, ModelFileError, load_dataset, load_model, save_dataset, save_model
from radonreg.rbf import fit_rbf
from radonreg.verify import Check

KNOT_X = np.array([-1, -0.8, -0.6, -0.3, 0.1, 0.4, 0.7, 0.85, 1.0])


def three_knot(x):
    return 0.3 + 0.5 * x + 1.5 * np.maximum(x + 0.6, 0) - 2.0 * np.maximum(x - 0.1, 0) + 1.2 * np.maximum(x - 0.7, 0)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def planar_data(tmp_path, M=8, seed=0, name="train.csv"):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (M, 2))
    path = tmp_path / name
    save_dataset(path, X, np.cos(X[:, 0]) + X[:, 1])
    return str(path)


def test_load_dataset_shapes(tmp_path):
    d1 = load_dataset(write(tmp_path / "a.csv", "x1,y\n0,1\n1,2\n"))
    assert d1.d == 1 and d1.M == 2
    d2 = load_dataset(write(tmp_path / "b.csv", "x1,x2,y\n0,0,1\n1,0,2\n0,1,3\n"))
    assert d2.d == 2 and d2.M == 3
    np.testing.assert_array_equal(d2.y, [1, 2, 3])


def test_load_dataset_keeps_duplicates(tmp_path):
    assert load_dataset(write(tmp_path / "a.csv", "x1,y\n0,1\n0,1\n")).M == 2


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("x1,y\n", "no data rows"),
        ("a,b\n1,2\n", "header"),
        ("x1,y\n0,1\n1\n", "line 3"),
        ("x1,y\n0,abc\n", "non-numeric"),
        ("x1,y\n0,inf\n", "column y"),
        ("x1,y\n0,nan\n", "non-finite"),
    ],
)
def test_load_dataset_errors(tmp_path, text, fragment):
    with pytest.raises(DatasetError, match=fragment):
        load_dataset(write(tmp_path / "bad.csv", text))


def test_features_only_file_needs_flag(tmp_path):
    path = write(tmp_path / "x.csv", "x1,x2\n0,1\n")
    with pytest.raises(DatasetError, match="missing y"):
        load_dataset(path)
    assert load_dataset(path, require_y=False).y is None


def test_model_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (7, 2))
    prof = catalog_profile("ridge_spline_m", (2,))
    model = fit_rbf(X, np.exp(X[:, 0]) * np.sin(3 * X[:, 1]), synth_rbf_kernel(prof, 2, "radon", strict=False), 1, 1e-3)
    path = tmp_path / "m.json"
    save_model(path, model, "ridge_spline_m", (2,))
    back, doc = load_model(path)
    assert doc["schema_version"] and doc["mode"] == "rbf"
    np.testing.assert_array_equal(back.coeffs, model.coeffs)
    np.testing.assert_array_equal(back.poly.coeffs, model.poly.coeffs)
    np.testing.assert_array_equal(back.centers, model.centers)
    Q = rng.uniform(-1, 1, (5, 2))
    np.testing.assert_array_equal(back.predict(Q), model.predict(Q))


def test_model_schema_mismatch(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"schema_version": 999, "mode": "rbf"}))
    with pytest.raises(ModelFileError, match="schema_version"):
        load_model(path)
    path.write_text("not json")
    with pytest.raises(ModelFileError):
        load_model(path)


def test_cli_catalog(capsys):
    assert main(["catalog", "list"]) == EXIT_OK
    assert "ridge_spline_m" in capsys.readouterr().out
    assert main(["catalog", "list", "--json"]) == EXIT_OK
    names = {r["name"] for r in json.loads(capsys.readouterr().out)}
    assert {"exponential", "fractional_laplacian_alpha"} <= names


def test_cli_synth_activation_csv(tmp_path):
    out = tmp_path / "act.csv"
    rc = main(["synth", "activation", "--profile", "ridge_spline_m", "--param", "2", "--points", "11", "--out", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 12


def test_cli_synth_kernel_stdout(capsys):
    rc = main(["synth", "kernel", "--profile", "fractional_laplacian_alpha", "--param", "1", "--points", "5"])
    assert rc == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "r,value"


def test_cli_fit_predict_interpolates(tmp_path, capsys):
    data = planar_data(tmp_path)
    model = str(tmp_path / "m.json")
    assert main(["fit", "--mode", "rbf", "--profile", "ridge_spline_m", "--data", data, "--out", model]) == EXIT_OK
    preds = str(tmp_path / "p.csv")
    assert main(["predict", "--model", model, "--data", data, "--out", preds, "--truth"]) == EXIT_OK
    out = capsys.readouterr().out
    mse = float(out.strip().splitlines()[-1].split("=")[1])
    assert mse < 1e-12
    assert open(preds).readline().strip() == "yhat"


def test_cli_predict_dimension_mismatch(tmp_path, capsys):
    data = planar_data(tmp_path)
    model = str(tmp_path / "m.json")
    main(["fit", "--mode", "rbf", "--profile", "ridge_spline_m", "--data", data, "--out", model])
    other = write(tmp_path / "d1.csv", "x1,y\n0,1\n")
    assert main(["predict", "--model", model, "--data", other]) == EXIT_DATA
    assert "dimension mismatch" in capsys.readouterr().err


def test_cli_mnorm_three_knot(tmp_path, capsys):
    path = tmp_path / "knots.csv"
    save_dataset(path, KNOT_X[:, None], three_knot(KNOT_X))
    model = tmp_path / "m.json"
    rc = main(["fit", "--mode", "mnorm", "--profile", "ridge_spline_m", "--param", "2",
               "--lambda", "1e-6", "--data", str(path), "--out", str(model)])
    assert rc == EXIT_OK
    assert json.loads(model.read_text())["K0"] <= 3


def test_cli_seeded_fits_are_bit_identical(tmp_path):
    path = tmp_path / "knots.csv"
    save_dataset(path, KNOT_X[:, None], three_knot(KNOT_X))
    texts = []
    for i in range(2):
        out = tmp_path / f"m{i}.json"
        main(["fit", "--mode", "mnorm", "--profile", "ridge_spline_m", "--lambda", "1e-3", "--seed", "7",
              "--data", str(path), "--out", str(out)])
        texts.append(out.read_text())
    assert texts[0] == texts[1]


def test_cli_lp_fit_runs_and_needs_plane(tmp_path):
    data = planar_data(tmp_path)
    model = tmp_path / "lp.json"
    rc = main(["fit", "--mode", "lp", "--p", "1.5", "--profile", "ridge_spline_m", "--lambda", "0.1",
               "--grid-size", "256", "--angles", "90", "--data", data, "--out", str(model)])
    assert rc == EXIT_OK
    assert json.loads(model.read_text())["p"] == 1.5
    d1 = write(tmp_path / "d1.csv", "x1,y\n0,1\n1,2\n2,0\n")
    rc = main(["fit", "--mode", "lp", "--profile", "ridge_spline_m", "--lambda", "0.1", "--data", d1, "--out", str(model)])
    assert rc == EXIT_DATA


def test_cli_config_file_and_flag_precedence(tmp_path):
    data = planar_data(tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"profile": "ridge_spline_m", "mode": "rbf", "lambda": 0.5}))
    out = tmp_path / "m.json"
    assert main(["--config", str(cfg), "fit", "--data", data, "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["lambda"] == 0.5
    assert main(["fit", "--config", str(cfg), "--lambda", "0.25", "--data", data, "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["lambda"] == 0.25


def test_cli_usage_errors(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["verify", "nosuch"]) == EXIT_USAGE
    assert main(["synth", "activation", "--profile", "no_such_profile"]) == EXIT_USAGE
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["--config", str(cfg), "catalog", "list"]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "missing.json"), "catalog", "list"]) == EXIT_USAGE


def test_cli_data_errors(tmp_path):
    bad = write(tmp_path / "bad.csv", "x1,y\n0,oops\n")
    assert main(["fit", "--mode", "rbf", "--profile", "ridge_spline_m", "--data", bad, "--out", str(tmp_path / "m.json")]) == EXIT_DATA
    missing = str(tmp_path / "none.csv")
    assert main(["fit", "--mode", "rbf", "--profile", "ridge_spline_m", "--data", missing, "--out", str(tmp_path / "m.json")]) == EXIT_DATA


def test_cli_verify_exit_codes(monkeypatch, capsys):
    assert main(["verify", "bounds"]) == EXIT_OK
    assert "result=pass" in capsys.readouterr().out
    monkeypatch.setitem(verify.SUITES, "bounds", lambda: [Check("forced", 1.0, 0.5, False)])
    assert main(["verify", "bounds"]) == EXIT_VERIFY
    assert "status=FAIL" in capsys.readouterr().out
