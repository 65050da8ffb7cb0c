import json
from pathlib import Path

import pytest

from viclust.cli import main
from viclust.synth import make_synthetic_inputs

CORE_OUTPUTS = (
    "scores.csv",
    "assignments.csv",
    "profile.json",
    "crosstab_remoteness.csv",
    "crosstab_state.csv",
    "stability.json",
    "selection_report.json",
)

STAMP = "2026-01-01T00:00:00Z"


@pytest.fixture(scope="module")
def demo_inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    return make_synthetic_inputs(root, n_regions=80, seed=7)


def base_args(paths, out_dir, *extra):
    return [
        "run",
        "--values", str(paths["values"]),
        "--regions", str(paths["regions"]),
        "--variables", str(paths["variables"]),
        "--adjacency", str(paths["adjacency"]),
        "--erp-variable", "ERP",
        "--output-dir", str(out_dir),
        "--run-timestamp", STAMP,
        "--restarts", "5",
        "--k-max", "6",
        *extra,
    ]


def snapshot(out_dir: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(out_dir)): p.read_bytes()
        for p in sorted(out_dir.rglob("*"))
        if p.is_file()
    }


def test_run_writes_all_outputs(demo_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(base_args(demo_inputs, out, "--k", "4")) == 0
    for name in CORE_OUTPUTS:
        assert (out / name).exists(), name
    assert (out / "manifest.json").exists()
    assert not (out / "elbow.csv").exists()  # k was fixed, no scan needed


def test_run_without_k_records_elbow_choice(demo_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(base_args(demo_inputs, out)) == 0
    assert (out / "elbow.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    suggested = manifest["steps"]["elbow"]["notes"]["suggested_k"]
    assert manifest["steps"]["cluster"]["notes"]["k"] == suggested
    model = json.loads((out / "cluster_model.json").read_text())
    assert model["k"] == suggested


def test_elbow_choice_ignores_stale_cluster_model(demo_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(base_args(demo_inputs, out, "--k", "6")) == 0
    assert main(base_args(demo_inputs, out)) == 0  # re-run without k in the same dir
    manifest = json.loads((out / "manifest.json").read_text())
    suggested = manifest["steps"]["elbow"]["notes"]["suggested_k"]
    assert manifest["steps"]["cluster"]["notes"]["k"] == suggested
    assert json.loads((out / "cluster_model.json").read_text())["k"] == suggested


def test_identical_configs_are_byte_identical(demo_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(base_args(demo_inputs, out, "--k", "4")) == 0
    first = snapshot(out)
    for p in sorted(out.rglob("*"), reverse=True):
        p.unlink() if p.is_file() else p.rmdir()
    assert main(base_args(demo_inputs, out, "--k", "4")) == 0
    assert snapshot(out) == first


def test_thread_count_does_not_change_results(demo_inputs, tmp_path):
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    assert main(base_args(demo_inputs, out1, "--k", "4", "--threads", "1")) == 0
    assert main(base_args(demo_inputs, out2, "--k", "4", "--threads", "3")) == 0
    a, b = snapshot(out1), snapshot(out2)
    assert set(a) == set(b)
    for name in a:
        if name == "manifest.json":
            continue  # the config echo records the differing thread counts
        assert a[name] == b[name], name
    ma = json.loads((out1 / "manifest.json").read_text())
    mb = json.loads((out2 / "manifest.json").read_text())
    for step in ma["steps"]:
        assert ma["steps"][step]["outputs"] == mb["steps"][step]["outputs"]


def test_step_sequence_and_missing_intermediates(demo_inputs, tmp_path):
    out = tmp_path / "steps"
    args = lambda cmd, *extra: [cmd] + base_args(demo_inputs, out, *extra)[1:]

    # pca before anything: missing intermediate, nonzero exit
    assert main(args("pca")) == 1

    assert main(args("ingest")) == 0
    assert (out / "ingested_values.csv").exists()
    assert (out / "omission_log.csv").exists()

    assert main(args("select")) == 0
    assert (out / "selection_report.json").exists()

    assert main(args("pca")) == 0
    assert (out / "scores.csv").exists()

    assert main(args("elbow")) == 0
    assert main(args("cluster")) == 0
    assert main(args("stability")) == 0
    assert main(args("profile")) == 0
    for name in CORE_OUTPUTS:
        assert (out / name).exists(), name


def test_single_step_replay_reproduces_recorded_hashes(demo_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(base_args(demo_inputs, out, "--k", "4")) == 0
    before = json.loads((out / "manifest.json").read_text())["steps"]["pca"]["outputs"]
    args = ["pca"] + base_args(demo_inputs, out, "--k", "4")[1:]
    assert main(args) == 0
    after = json.loads((out / "manifest.json").read_text())["steps"]["pca"]["outputs"]
    assert before == after


def test_stability_requires_two_seeds(demo_inputs, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(base_args(demo_inputs, out, "--k", "4")) == 0
    args = ["stability"] + base_args(demo_inputs, out, "--k", "4", "--seeds", "123")[1:]
    assert main(args) == 1
    assert "at least 2 seeds" in capsys.readouterr().err


def test_config_file_with_flag_override(demo_inputs, tmp_path):
    out = tmp_path / "out"
    cfg = {
        "values": str(demo_inputs["values"]),
        "regions": str(demo_inputs["regions"]),
        "adjacency": str(demo_inputs["adjacency"]),
        "erp_variable": "ERP",
        "output_dir": str(tmp_path / "ignored"),
        "k": 3,
        "restarts": 5,
        "run_timestamp": STAMP,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(cfg_path), "--output-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["output_dir"] == str(out)  # the flag won
    assert manifest["config"]["k"] == 3


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"values": "x", "regions": "y",
                                    "erp_variable": "ERP", "output_dir": "z",
                                    "bogus": 1}))
    assert main(["run", "--config", str(cfg_path)]) == 1
    assert "unknown config key" in capsys.readouterr().err


def test_boundaries_path_produces_atlas(demo_inputs, tmp_path):
    out = tmp_path / "out"
    args = [
        "run",
        "--values", str(demo_inputs["values"]),
        "--regions", str(demo_inputs["regions"]),
        "--boundaries", str(demo_inputs["boundaries"]),
        "--erp-variable", "ERP",
        "--output-dir", str(out),
        "--run-timestamp", STAMP,
        "--k", "4",
        "--restarts", "5",
    ]
    assert main(args) == 0
    atlas = json.loads((out / "atlas.geojson").read_text())
    assert atlas["type"] == "FeatureCollection"
    clusters = {f["properties"]["cluster"] for f in atlas["features"]}
    assert None in clusters  # the zero-population region is present but null
    assert {1, 2, 3, 4} <= {c for c in clusters if c is not None}


def test_run_without_contiguity_input_uses_column_means(demo_inputs, tmp_path):
    out = tmp_path / "out"
    args = [
        "run",
        "--values", str(demo_inputs["values"]),
        "--regions", str(demo_inputs["regions"]),
        "--erp-variable", "ERP",
        "--output-dir", str(out),
        "--run-timestamp", STAMP,
        "--k", "3",
        "--restarts", "5",
    ]
    assert main(args) == 0
    log = (out / "imputation_log.csv").read_text().strip().split("\n")
    assert len(log) > 1  # the demo data plants missing cells
    assert all(line.endswith(",column_mean") for line in log[1:])


def test_conflicting_and_invalid_config_rejected(demo_inputs, tmp_path, capsys):
    out = tmp_path / "out"
    both = base_args(demo_inputs, out, "--boundaries", str(demo_inputs["boundaries"]))
    assert main(both) == 1
    assert "not both" in capsys.readouterr().err

    bad_init = base_args(demo_inputs, out, "--k", "3", "--init", "magic")
    assert main(bad_init) == 1
    assert "unknown init" in capsys.readouterr().err

    bad_retention = base_args(demo_inputs, out, "--retention", "varimax")
    assert main(bad_retention) == 1
    assert "unknown retention" in capsys.readouterr().err


def test_error_carries_step_context(demo_inputs, tmp_path, capsys):
    out = tmp_path / "out"
    args = base_args(demo_inputs, out, "--k", "4")
    idx = args.index("--erp-variable")
    args[idx + 1] = "NOPE"
    assert main(args) == 1
    err = capsys.readouterr().err
    assert "step 'ingest'" in err and "NOPE" in err
