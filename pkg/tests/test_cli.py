import hashlib
import json

from nebcluster.cli import main


def _hash(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_config(tmp_path, **overrides):
    config = {
        "dataset": {"kind": "gaussian_blobs", "n_points": 240, "seed": 0, "spread": 0.6},
        "family": "student_t",
        "df": 1.0,
        "n_components": 6,
        "neb": {"n_path_points": 64, "n_steps": 10},
        "k_target": 3,
        "seeds": [0],
        "output_dir": str(tmp_path / "out"),
    }
    config.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def test_generate_roundtrip(tmp_path, capsys):
    out = tmp_path / "data.csv"
    rc = main(["generate", "--kind", "noisy_moons", "--n-points", "100", "--seed", "3", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x0,x1,label"
    assert len(lines) == 101


def test_fit_writes_model_and_manifest(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["fit", "--config", str(cfg)])
    assert rc == 0
    outdir = tmp_path / "out"
    model = json.loads((outdir / "model.json").read_text())
    assert model["model"]["n_components"] <= 6
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"model.json", "filter_report.json"}
    for name, digest in manifest["outputs"].items():
        assert _hash(outdir / name) == digest


def test_fit_deterministic_model_hash(tmp_path):
    cfg = _write_config(tmp_path)
    main(["fit", "--config", str(cfg)])
    h1 = _hash(tmp_path / "out" / "model.json")
    main(["fit", "--config", str(cfg)])
    assert _hash(tmp_path / "out" / "model.json") == h1


def test_validation_exit_code(tmp_path):
    cfg = _write_config(tmp_path, n_components=100000)
    assert main(["fit", "--config", str(cfg)]) == 2


def test_io_error_exit_code(tmp_path):
    assert main(["fit", "--config", str(tmp_path / "missing.json")]) == 4
    cfg = _write_config(tmp_path, input_path="/nonexistent/file.csv", dataset=None)
    assert main(["cluster", "--config", str(cfg)]) == 4


def test_fit_failure_exit_code(tmp_path):
    data = tmp_path / "degenerate.csv"
    data.write_text("x0,x1\n" + "0.0,0.0\n" * 8)
    cfg = _write_config(
        tmp_path,
        dataset=None,
        input_path=str(data),
        n_components=4,
        fit={"ridge": 0.0, "retry_schedule": [[1e-3, 50]]},
    )
    assert main(["fit", "--config", str(cfg)]) == 3


def test_cluster_outputs_and_reproducibility(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["cluster", "--config", str(cfg)]) == 0
    outdir = tmp_path / "out"
    expected = {
        "model.json",
        "filter_report.json",
        "graph.json",
        "graph.dot",
        "dendrogram.json",
        "dendrogram.nwk",
        "thresholds.csv",
        "labels.csv",
    }
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert set(manifest["outputs"]) == expected
    hashes = dict(manifest["outputs"])
    assert main(["cluster", "--config", str(cfg)]) == 0
    manifest2 = json.loads((outdir / "manifest.json").read_text())
    assert manifest2["outputs"] == hashes  # byte-identical outputs


def test_cluster_without_k_target_skips_labels(tmp_path):
    cfg = _write_config(tmp_path, k_target=None)
    assert main(["cluster", "--config", str(cfg)]) == 0
    outdir = tmp_path / "out"
    assert not (outdir / "labels.csv").exists()
    assert (outdir / "thresholds.csv").exists()
    header = (outdir / "thresholds.csv").read_text().splitlines()[0]
    assert header.split(",")[-1] == "jump"


def test_cluster_multi_seed_parallel_identical_to_serial(tmp_path):
    cfg1 = _write_config(tmp_path, seeds=[0, 1], output_dir=str(tmp_path / "serial"), jobs=1)
    assert main(["cluster", "--config", str(cfg1)]) == 0
    cfg2 = _write_config(tmp_path, seeds=[0, 1], output_dir=str(tmp_path / "par"), jobs=2)
    assert main(["cluster", "--config", str(cfg2)]) == 0
    m1 = json.loads((tmp_path / "serial" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "par" / "manifest.json").read_text())
    assert m1["outputs"] == m2["outputs"]
    assert set(m1["outputs"]) == {
        f"seed_{s}/{name}"
        for s in (0, 1)
        for name in (
            "model.json",
            "filter_report.json",
            "graph.json",
            "graph.dot",
            "dendrogram.json",
            "dendrogram.nwk",
            "thresholds.csv",
            "labels.csv",
        )
    }


def test_flag_overrides_config(tmp_path):
    cfg = _write_config(tmp_path)
    out2 = tmp_path / "other"
    assert main(["cluster", "--config", str(cfg), "--output-dir", str(out2), "--k-target", "2"]) == 0
    labels = (out2 / "labels.csv").read_text().splitlines()[1:]
    values = {int(line.split(",")[1]) for line in labels}
    assert values == {0, 1}
    manifest = json.loads((out2 / "manifest.json").read_text())
    assert manifest["config"]["k_target"] == 2


def test_manifest_config_reruns_to_same_hashes(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["cluster", "--config", str(cfg)]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    echo = tmp_path / "echo.json"
    echo.write_text(json.dumps(manifest["config"]))
    out2 = tmp_path / "echo_out"
    assert main(["cluster", "--config", str(echo), "--output-dir", str(out2)]) == 0
    manifest2 = json.loads((out2 / "manifest.json").read_text())
    assert manifest2["outputs"] == manifest["outputs"]


def test_eval_between_label_files(tmp_path, capsys):
    truth = tmp_path / "truth.csv"
    truth.write_text("point_index,cluster\n0,0\n1,0\n2,1\n3,1\n")
    pred = tmp_path / "pred.csv"
    pred.write_text("point_index,cluster\n0,1\n1,1\n2,0\n3,0\n")
    rc = main(["eval", "--truth", str(truth), "--pred", str(pred), "--out", str(tmp_path / "ari.json")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "ari 1.0" in out
    assert json.loads((tmp_path / "ari.json").read_text())["ari"] == 1.0


def test_eval_against_generated_labels(tmp_path, capsys):
    data = tmp_path / "data.csv"
    main(["generate", "--kind", "gaussian_blobs", "--n-points", "60", "--seed", "1", "--out", str(data)])
    rc = main(["eval", "--truth", str(data), "--pred", str(data)])
    assert rc == 0
    assert "ari 1.0" in capsys.readouterr().out


def test_compare_single_seed_std_zero(tmp_path):
    cfg = _write_config(
        tmp_path,
        dataset={"kind": "gaussian_blobs", "n_points": 200, "seed": 0, "spread": 0.6},
        n_components=5,
    )
    assert main(["compare", "--config", str(cfg)]) == 0
    outdir = tmp_path / "out"
    rows = (outdir / "compare.csv").read_text().splitlines()
    assert rows[0] == "strategy,mean_ari,std_ari,n_runs,failures"
    for row in rows[1:]:
        assert row.split(",")[2] == "0.0"
    report = json.loads((outdir / "compare.json").read_text())
    assert "oracle" in report["table"] and "neb" in report["table"]
    wide = (outdir / "compare_table.csv").read_text().splitlines()
    assert wide[0].startswith("dataset,dim,")


def test_stability_subcommand(tmp_path):
    cfg = _write_config(tmp_path, seeds=[0, 1])
    assert main(["stability", "--config", str(cfg), "--mode", "seeds"]) == 0
    outdir = tmp_path / "out"
    report = json.loads((outdir / "stability.json").read_text())
    assert len(report["pairwise_ari"]) == 2
    matrix = (outdir / "stability_matrix.csv").read_text().splitlines()
    assert len(matrix) == 3
    summary = (outdir / "stability_summary.csv").read_text().splitlines()
    assert summary[0] == "dataset,dim,mode,n_runs,mean,min,std"


def test_cluster_with_alternative_strategy_flag(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["cluster", "--config", str(cfg), "--strategy", "euclidean", "--one-shot"])
    assert rc == 0
    outdir = tmp_path / "out"
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"labels.csv"}
    assert manifest["config"]["strategy"]["kind"] == "euclidean"
    assert manifest["config"]["strategy"]["recompute_centers"] is False
    labels = (outdir / "labels.csv").read_text().splitlines()[1:]
    assert {int(line.split(",")[1]) for line in labels} == {0, 1, 2}


def test_cluster_manifest_contains_filter_report(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["cluster", "--config", str(cfg)]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    report = manifest["runs"]["0"]["filter_report"]
    assert report["n_surviving"] >= 1
    assert "removed" in report


def test_stability_component_sweep(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(
        ["stability", "--config", str(cfg), "--mode", "components", "--components", "4,6"]
    )
    assert rc == 0
    report = json.loads((tmp_path / "out" / "stability.json").read_text())
    assert [r["n_components"] for r in report["runs"]] == [4, 6]
