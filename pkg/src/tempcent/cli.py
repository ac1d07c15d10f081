"""Command-line entry point: ``tempcent {analyze,centrality,ccp,correlate,rq2}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .metrics import MetricDataError
from .network import SnapshotError, _load_structured
from .pipeline import (
    ConfigError,
    RunConfig,
    run_analyze,
    run_ccp,
    run_centrality,
    run_correlate,
    run_rq2,
)
from .stats import StatisticsError
from .supra import ConvergenceError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

COMMANDS = {
    "analyze": run_analyze,
    "centrality": run_centrality,
    "ccp": run_ccp,
    "correlate": run_correlate,
    "rq2": run_rq2,
}


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON/YAML file supplying any option; flags override it")
    common.add_argument("--manifest", type=Path, help="manifest listing snapshot files in release order")
    common.add_argument("--metrics-dir", type=Path, help="directory of <release>/<tool>.csv metric tables")
    common.add_argument("--mapping-dir", type=Path, help="directory of <release>.map package=service files")
    common.add_argument("--descriptors", type=Path, help="metric descriptor manifest")
    common.add_argument("--algorithms", type=_csv_list, help="comma list from taylor,yin,liu")
    common.add_argument("--eps", type=float, dest="epsilon", help="coupling parameter epsilon (default 0.5)")
    common.add_argument("--alpha", type=float, dest="alpha_correlation", help="significance for Spearman/Wilcoxon (default 0.01)")
    common.add_argument("--ad-alpha", type=float, dest="alpha_ad", help="significance for Anderson-Darling (default 0.05)")
    sym = common.add_mutually_exclusive_group()
    sym.add_argument("--symmetrize", dest="symmetrize", action="store_true", default=None)
    sym.add_argument("--raw-directed", dest="symmetrize", action="store_false")
    common.add_argument("--out", type=Path, help="output directory (default ./out)")
    common.add_argument("--format", type=_csv_list, dest="formats", help="comma list from csv,json,svg")
    common.add_argument("--no-preprocess", dest="preprocess", action="store_false", default=None)
    common.add_argument("--solver", choices=("power", "dense"))
    common.add_argument("--fom-method", choices=("analytic", "numerical"))
    common.add_argument("--ccp-thresholds", choices=("per-release", "final"))
    common.add_argument("--rq2-mode", choices=("paired", "groups"))
    common.add_argument("--fom-pairing", choices=("latest", "prefix"))
    common.add_argument("--correction", choices=("none", "bonferroni", "holm"))
    common.add_argument("--services", type=_csv_list, help="services drawn in trajectory/CCP charts")
    common.add_argument("--workers", type=int, help="threads for independent units")

    parser = argparse.ArgumentParser(prog="tempcent", description="Temporal centrality and CCP analysis of microservice networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analyze", "full pipeline and run manifest"),
        ("centrality", "temporal centrality tables and charts"),
        ("ccp", "CCP rank timeline"),
        ("correlate", "normality screening and Spearman sweep"),
        ("rq2", "CCP tests and FOM-centrality correlation"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return parser


_PATH_KEYS = ("manifest", "metrics_dir", "mapping_dir", "descriptors", "out")
_ALIASES = {"eps": "epsilon", "alpha": "alpha_correlation", "ad_alpha": "alpha_ad", "format": "formats"}


def make_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config is not None:
        if not args.config.exists():
            raise FileNotFoundError(f"config file not found: {args.config}")
        doc = _load_structured(args.config.read_text(encoding="utf-8"), args.config.suffix) or {}
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a mapping")
        base = args.config.parent
        for key, value in doc.items():
            key = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key in _PATH_KEYS:
                value = base / value
            values[key] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        values[key] = value
    fields = RunConfig.__dataclass_fields__
    unknown = set(values) - set(fields)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    for key in ("algorithms", "formats", "services"):
        if key in values and isinstance(values[key], str):
            values[key] = _csv_list(values[key])
        if key in values:
            values[key] = tuple(values[key])
    for key in _PATH_KEYS:
        if key in values:
            values[key] = Path(values[key])
    return RunConfig(**values)


def _fail(code: int, exc: BaseException, out: Path | None) -> int:
    report = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    if out is not None and out.is_dir():
        (out / "error.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = None
    try:
        config = make_config(args)
        bundle = COMMANDS[args.command](config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc, config.out if config else None)
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, exc, config.out if config else None)
    except (OSError, SnapshotError, MetricDataError, StatisticsError, ValueError) as exc:
        return _fail(EXIT_DATA, exc, config.out if config else None)
    for err in bundle.errors:
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
    print(f"{args.command}: wrote results to {config.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
