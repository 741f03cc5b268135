import json

import numpy as np
import pytest

from tsrobust import io
from tsrobust.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "3", "--p", "1", "--r", "0.4", "--T", "400", "--seed", "5",
                 "--model-out", str(d / "true.json"), "--data-out", str(d / "data.csv")]) == 0
    return d


def test_synth_outputs(workspace):
    data = io.read_csv(workspace / "data.csv")
    assert data.T == 400 and data.n == 3
    model = io.load_model(workspace / "true.json")
    assert model.n == 3 and model.p == 1


def test_synth_is_seeded(workspace, tmp_path):
    main(["synth", "--T", "400", "--seed", "5", "--model-out", str(tmp_path / "m.json"), "--data-out", str(tmp_path / "d.csv")])
    assert (tmp_path / "d.csv").read_text() == (workspace / "data.csv").read_text()


def test_fit(workspace, capsys):
    out = workspace / "fit.json"
    assert main(["fit", str(workspace / "data.csv"), "--lags", "1", "--alpha", "0.99", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["permutation_log"]) == 6
    assert all(io.model_from_dict(m).edge_count() == doc["sparsity"] for m in doc["models"])
    assert "minimal edge count" in capsys.readouterr().out


def test_robustness_and_score(workspace, capsys):
    rep = workspace / "rob.json"
    reps = workspace / "reps.csv"
    assert main(["robustness", str(workspace / "data.csv"), "--replicates", "20", "--alpha", "0.999", "--seed", "1",
                 "--out", str(rep), "--replicate-csv", str(reps)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["N"] == 20
    assert all(s["R"] == 100 * s["K"] / 20 for s in doc["structures"])
    assert doc["structures"][0]["K"] >= 2
    assert len(reps.read_text().strip().splitlines()) == 21
    probplot = workspace / "pp.csv"
    assert main(["score", "--true", str(workspace / "true.json"), "--fit", str(rep),
                 "--std", str(rep), "--emit-probplot", str(probplot)]) == 0
    text = capsys.readouterr().out
    assert "equivalent:" in text and "zeta:" in text and "phi:" in text
    rows = probplot.read_text().strip().splitlines()
    assert rows[0] == "empirical,theoretical" and len(rows) > 1


def test_score_self(workspace, capsys):
    m = str(workspace / "true.json")
    assert main(["score", "--true", m, "--fit", m]) == 0
    out = capsys.readouterr().out
    assert "equivalent: True" in out and "zeta: 0" in out


def test_missing_seed_is_printed(tmp_path, capsys):
    main(["synth", "--T", "50", "--model-out", str(tmp_path / "m.json"), "--data-out", str(tmp_path / "d.csv")])
    assert "seed:" in capsys.readouterr().err


def test_experiment(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"grid": {"n": [2], "p": [1], "r": [0.4], "T": [200]},
                               "models_per_cell": 2, "replicates": 3, "seed": 4}))
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "table.csv").exists()
    assert "n=2 p=1" in capsys.readouterr().out


def test_casestudy(tmp_path):
    rng = np.random.default_rng(0)
    rows = 80
    raw = tmp_path / "raw.csv"
    cols = {
        "UNRATE": rng.uniform(4, 8, rows), "GDPC1": rng.uniform(95, 105, rows), "GDPPOT": np.full(rows, 100.0),
        "HCOMPBS": np.cumprod(1 + rng.uniform(0, 0.02, rows)), "IDPBS": np.cumprod(1 + rng.uniform(0, 0.02, rows)),
        "OPHPBS": np.cumprod(1 + rng.uniform(0, 0.02, rows)),
    }
    import pandas as pd

    pd.DataFrame(cols).to_csv(raw, index=False)
    out = tmp_path / "case.json"
    assert main(["casestudy", "--data", str(raw), "--replicates", "3", "--seed", "2", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["low"]["alpha"] == 0.5 and doc["high"]["alpha"] == 0.999


def test_bad_input_returns_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,x\n")
    assert main(["fit", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err
