"""Command-line front end.

``viclust run`` executes the whole pipeline; the step subcommands
(ingest, select, pca, elbow, cluster, stability, profile) re-run one
stage from the serialized intermediates in the output directory, and
``viclust report`` renders figures from a finished run. Flags mirror the
config fields; ``--config`` loads the same fields from a JSON file, with
explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import RunConfig
from .errors import PipelineError
from .pipeline import STEP_NAMES, run_all, run_step

_CONFIG_FLAGS = (
    # (flag, config field, type, help)
    ("--values", "values", str, "values.csv path (region_id + one column per variable)"),
    ("--regions", "regions", str, "regions.csv path (region metadata)"),
    ("--variables", "variables", str, "variables.csv path (optional long names)"),
    ("--boundaries", "boundaries", str, "GeoJSON boundaries for contiguity and the atlas"),
    ("--adjacency", "adjacency", str, "adjacency CSV (region_id,neighbor_id) instead of boundaries"),
    ("--erp-variable", "erp_variable", str, "short form of the population column"),
    ("--output-dir", "output_dir", str, "directory for outputs and intermediates"),
    ("--missing-flag-threshold", "missing_flag_threshold", float,
     "missing+zero fraction above which a variable is flagged (default 0.10)"),
    ("--snap-tolerance", "snap_tolerance", float, "vertex snap tolerance for contiguity (default 0)"),
    ("--skew-threshold", "skew_threshold", float, "|skewness| screen threshold (default 2)"),
    ("--corr-threshold", "corr_threshold", float, "|r| pruning threshold (default 0.90)"),
    ("--retention", "retention", str, "kaiser | first_only | cumulative (default kaiser)"),
    ("--retention-param", "retention_param", float,
     "eigenvalue cutoff for kaiser, fraction for cumulative (default 1.0)"),
    ("--loading-threshold", "loading_threshold", float, "substantive |loading| cutoff (default 0.20)"),
    ("--k", "k", int, "cluster count; when omitted, the elbow scan chooses"),
    ("--k-max", "k_max", int, "largest k for the elbow scan (default 10)"),
    ("--init", "init", str, "forgy | kmeanspp (default forgy)"),
    ("--restarts", "restarts", int, "K-means restarts per run (default 25)"),
    ("--threads", "threads", int, "worker threads for restarts; never changes results"),
    ("--run-timestamp", "run_timestamp", str,
     "ISO-8601 stamp echoed into the manifest (pin for byte-identical runs)"),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with config fields")
    for flag, _, ftype, help_text in _CONFIG_FLAGS:
        parser.add_argument(flag, type=ftype, default=None, help=help_text)
    parser.add_argument(
        "--seeds", default=None,
        help="comma-separated seed list (default 123,1767,7462,944,3401)",
    )
    parser.add_argument(
        "--manual-remove", default=None,
        help="comma-separated variables to remove before the screens",
    )


def _build_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    for _, field, _, _ in _CONFIG_FLAGS:
        value = getattr(args, field)
        if value is not None:
            data[field] = value
    if args.seeds is not None:
        data["seeds"] = [int(tok) for tok in args.seeds.split(",") if tok.strip()]
    if args.manual_remove is not None:
        data["manual_removals"] = [tok.strip() for tok in args.manual_remove.split(",")
                                   if tok.strip()]
    return RunConfig.from_json_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viclust",
        description="Vulnerability indices and cluster profiles from a region table.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="execute the full pipeline")
    _add_config_flags(run_parser)

    for step in STEP_NAMES:
        step_parser = sub.add_parser(step, help=f"run only the {step} stage")
        _add_config_flags(step_parser)

    report_parser = sub.add_parser("report", help="render figures from a finished run")
    report_parser.add_argument("--output-dir", required=True)
    report_parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            from .figures import render_report

            written = render_report(args.output_dir, dpi=args.dpi)
            for path in written:
                print(path)
            if not written:
                print("no renderable outputs found", file=sys.stderr)
                return 1
            return 0
        cfg = _build_config(args)
        if args.command == "run":
            manifest_path = run_all(cfg)
            print(manifest_path)
        else:
            run_step(args.command, cfg)
            print(f"{args.command}: done")
        return 0
    except PipelineError as exc:
        print(f"viclust: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"viclust: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
