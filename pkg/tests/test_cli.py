import json
import subprocess
import sys

import pytest

from mgstd.cli import main
from mgstd.dataset import ingest_csv


@pytest.fixture(scope="module")
def dw_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--model", "dw1d", "--preset", "D2", "--seed", "3",
                 "--out", str(out)]) == 0
    return out / "dataset.csv"


def test_simulate_writes_interleaved_csv(dw_csv):
    d = ingest_csv(dw_csv)
    assert d.n_series == 120 and d.n_points == 12000
    meta = json.loads((dw_csv.parent / "simulate.json").read_text())
    assert meta["interleave"] == 4 and meta["seed"] == 3
    assert meta["sigma2"] == pytest.approx(0.2)


def test_simulate_binary(tmp_path):
    assert main(["simulate", "--model", "saddle2d", "--preset", "D1", "--n-series", "100",
                 "--format", "bin", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "dataset.bin").stat().st_size == 200 * 2 * 8
    assert (tmp_path / "dataset.bin.json").exists()


def test_unknown_model_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--model", "lorenz", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_morse_outputs(dw_csv, tmp_path):
    assert main(["morse", "--input", str(dw_csv), "--mu-star", "2", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "morse.json").read_text())
    assert doc["names"][0] == "MS0" and doc["mu_star"] == 2
    assert set(doc["grid"]) == {"m", "h", "L", "delta"}
    assert (tmp_path / "morse.dot").read_text().startswith("digraph")
    assert (tmp_path / "map.tsv").read_text().startswith("source\ttarget")


def test_morse_huge_threshold(dw_csv, tmp_path):
    assert main(["morse", "--input", str(dw_csv), "--mu-star", "100000",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "morse.json").read_text())["sets"] == []


def test_morse_missing_threshold(dw_csv, tmp_path):
    assert main(["morse", "--input", str(dw_csv), "--out", str(tmp_path)]) == 2


def test_input_and_model_exclusive(dw_csv, tmp_path):
    assert main(["morse", "--input", str(dw_csv), "--model", "dw1d", "--mu-star", "1",
                 "--out", str(tmp_path)]) == 2


def test_bad_delta_length(dw_csv, tmp_path):
    assert main(["morse", "--input", str(dw_csv), "--mu-star", "1", "--delta", "0.1,0.1",
                 "--out", str(tmp_path)]) == 2


def test_missing_file(tmp_path):
    assert main(["morse", "--input", str(tmp_path / "nope.csv"), "--mu-star", "1",
                 "--out", str(tmp_path)]) == 3


def test_empty_dataset(tmp_path):
    (tmp_path / "empty.csv").write_text("series_id,step,y1\n")
    assert main(["select", "--input", str(tmp_path / "empty.csv"),
                 "--out", str(tmp_path)]) == 3


def test_parse_error_exit(tmp_path):
    (tmp_path / "bad.csv").write_text("a,0,1.0\na,1,inf\n")
    assert main(["select", "--input", str(tmp_path / "bad.csv"), "--out", str(tmp_path)]) == 3


def test_select_and_coverage(dw_csv, tmp_path):
    assert main(["select", "--input", str(dw_csv), "--h-candidates", "0.2,0.25,0.3",
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "select.json").read_text())
    assert rep["mu_star"] >= 1 and rep["recommended_h"] in (0.2, 0.25, 0.3)
    rows = (tmp_path / "coverage.tsv").read_text().splitlines()
    assert len(rows) == 101
    curve = (tmp_path / "ratio_curve.tsv").read_text().splitlines()
    assert curve[0] == "mu_star\tratio" and len(curve) == 101


def test_select_failure_exit(dw_csv, tmp_path):
    # A barely above 1 cannot be met at any small threshold
    assert main(["select", "--input", str(dw_csv), "--A", "1.0001", "--mu-max", "3",
                 "--out", str(tmp_path)]) == 4
    assert (tmp_path / "ratio_curve.tsv").exists()


def test_select_sweep(dw_csv, tmp_path):
    assert main(["select", "--input", str(dw_csv), "--sweep-delta", "--increment", "0.05",
                 "--jobs", "1", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "select.json").read_text())
    assert len(rep["per_shift"]) == 5 and "mu_star_mean" in rep


def test_vectorfield_needs_threshold(dw_csv, tmp_path):
    assert main(["vectorfield", "--input", str(dw_csv), "--out", str(tmp_path)]) == 2


def test_vectorfield_rerun_identical(dw_csv, tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / str(k)
        assert main(["vectorfield", "--input", str(dw_csv), "--mu-star", "1",
                     "--increment", "0.05", "--archive", "--jobs", "1", "--out", str(out)]) == 0
        texts.append((out / "vectorfield.tsv").read_bytes())
        assert json.loads((out / "shifts.json").read_text())["mu_star"] == 1
    assert texts[0] == texts[1]
    assert texts[0].startswith(b"qx\twx\tsupport\n")


def test_config_file_defaults(dw_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mu_star": 3, "h": 0.3, "delta": [0.1]}))
    assert main(["morse", "--input", str(dw_csv), "--config", str(cfg),
                 "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "morse.json").read_text())
    assert doc["mu_star"] == 3 and doc["grid"]["h"] == 0.3 and doc["grid"]["delta"] == [0.1]
    # explicit flags win over the file
    assert main(["morse", "--input", str(dw_csv), "--config", str(cfg), "--mu-star", "2",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "morse.json").read_text())["mu_star"] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mgstd", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "vectorfield" in proc.stdout


def test_pca_and_interleave_flags(tmp_path):
    import numpy as np
    from mgstd.dataset import Dataset, write_csv
    rng = np.random.default_rng(0)
    latent = np.cumsum(rng.normal(size=(2, 40, 2)) * 0.2, axis=1)
    mix = rng.normal(size=(2, 6))
    d = Dataset.from_series([z @ mix + 0.01 * rng.normal(size=(40, 6)) for z in latent])
    write_csv(d, tmp_path / "raw.csv")
    assert main(["morse", "--input", str(tmp_path / "raw.csv"), "--pca", "2",
                 "--interleave", "4", "--mu-star", "1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "morse.json").read_text())
    assert doc["grid"]["m"] == 2


def test_params_menu(dw_csv, tmp_path):
    assert main(["morse", "--input", str(dw_csv), "--params", "strato", "--mu-star", "1",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "morse.json").read_text())["grid"]["h"] == 0.3
    assert main(["morse", "--input", str(dw_csv), "--params", "strato", "--h", "0.2",
                 "--mu-star", "1", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "morse.json").read_text())["grid"]["h"] == 0.2
    assert main(["select", "--input", str(dw_csv), "--params", "tropo",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "select.json").read_text())["recommended_h"] in \
        (1 / 3, 0.25, 0.2)
