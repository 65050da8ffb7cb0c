import pytest

from viclust.cli import main
from viclust.figures import render_report
from viclust.synth import make_synthetic_inputs

EXPECTED = {
    "elbow.png",
    "index_histograms.png",
    "stability_ari.png",
    "crosstab_remoteness.png",
}


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("figrun")
    paths = make_synthetic_inputs(root / "demo", n_regions=60, seed=7)
    out = root / "out"
    args = [
        "run",
        "--values", str(paths["values"]),
        "--regions", str(paths["regions"]),
        "--adjacency", str(paths["adjacency"]),
        "--erp-variable", "ERP",
        "--output-dir", str(out),
        "--run-timestamp", "2026-01-01T00:00:00Z",
        "--restarts", "5",
        "--k-max", "5",
    ]
    assert main(args) == 0
    return out


def test_report_renders_every_figure(finished_run):
    written = render_report(finished_run)
    assert {p.name for p in written} == EXPECTED
    for path in written:
        assert path.stat().st_size > 1000
        assert path.read_bytes()[:4] == b"\x89PNG"


def test_repeated_renders_are_byte_identical(finished_run):
    first = {p.name: p.read_bytes() for p in render_report(finished_run)}
    second = {p.name: p.read_bytes() for p in render_report(finished_run)}
    assert first == second


def test_report_cli_lists_files(finished_run, capsys):
    assert main(["report", "--output-dir", str(finished_run)]) == 0
    out = capsys.readouterr().out
    assert "elbow.png" in out


def test_report_on_empty_dir_fails(tmp_path, capsys):
    assert main(["report", "--output-dir", str(tmp_path)]) == 1
    assert "no renderable outputs" in capsys.readouterr().err
