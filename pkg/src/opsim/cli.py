"""``opsim`` command line: run, scan, plot, presets.

Exit codes: 0 success, 1 validation error, 2 IO error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .config import DOTTED, ConfigError, RunConfig, coerce_value, parse_config
from .output import load_manifest, read_runs_csv, render_bundle
from .planner import ExperimentPlan, run_experiment
from .scan import PRESET_DESCRIPTIONS, PRESETS, Facet, execute_scan, preset_spec, single_cell_spec
from .svg import EmptySelection, render_facet

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2
SEED_ENV = "OPSIM_SEED"

_SWEPT = {"fa": "fa_values", "nd": "nd_values", "adjust_error": "adjust_error_values", "cutoff_time": "cutoff_values"}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors are validation errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


class ValidationError(Exception):
    pass


def _add_overrides(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("parameter overrides (mirror config keys)")
    for f in fields(RunConfig):
        if f.name in ("replications", "base_seed"):
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            group.add_argument(flag, dest=f"ov_{f.name}", action=argparse.BooleanOptionalAction, default=None)
        else:
            group.add_argument(flag, dest=f"ov_{f.name}", metavar="VALUE", default=None, help=DOTTED[f.name])


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--seed", type=int, help=f"seed (falls back to ${SEED_ENV}, then config)")
    p.add_argument("--replications", type=int)
    _add_overrides(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"opsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment and print its measurements")
    _common(run)
    run.add_argument("--log", type=Path, help="also write the experiment log as JSON")

    scan = sub.add_parser("scan", help="run a parameter scan and write an output bundle")
    _common(scan)
    scan.add_argument("--preset", choices=PRESETS)
    scan.add_argument("--from-manifest", type=Path, help="re-run the scan recorded in a manifest")
    scan.add_argument("--out", type=Path, default=Path("out"))
    scan.add_argument("--workers", type=int, default=1, help="worker processes (0 = all CPUs)")

    plot = sub.add_parser("plot", help="re-render plots from a saved runs.csv")
    plot.add_argument("runs_csv", type=Path)
    plot.add_argument("--preset", choices=PRESETS)
    plot.add_argument("--adjust-error", action=argparse.BooleanOptionalAction, default=False)
    plot.add_argument("--cutoff", action=argparse.BooleanOptionalAction, default=False)
    plot.add_argument("--sweep", choices=("fa", "nd"), default="fa")
    plot.add_argument("--name", default="plot")
    plot.add_argument("--out", type=Path, default=Path("."))

    sub.add_parser("presets", help="list built-in scan presets")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config is not None:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
    overrides: Dict[str, Any] = {}
    for f in fields(RunConfig):
        raw = getattr(args, f"ov_{f.name}", None)
        if raw is None:
            continue
        try:
            overrides[f.name] = coerce_value(f.name, raw)
        except ValueError as exc:
            raise ValidationError(f"--{f.name.replace('_', '-')}: {exc}") from None
    if args.replications is not None:
        overrides["replications"] = args.replications
    seed = _resolve_seed(args.seed)
    if seed is not None:
        overrides["base_seed"] = seed
    cfg = cfg.replace(**overrides)
    args._overridden = set(overrides)
    return cfg


def _resolve_seed(flag: Optional[int]) -> Optional[int]:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return None


def _fmt(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return f"{x:.6g}"


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    plan = ExperimentPlan.from_config(cfg)
    log = run_experiment(plan, cfg, cfg.base_seed)
    header = ("sample", "pq", "target_te", "events", "ticks", "final_se", "mean_misalign", "reason")
    print(f"seed={cfg.base_seed} budget_ticks={plan.budget_ticks} cutoff={cfg.cutoff_time} adjust={cfg.adjust_error}")
    print("  ".join(f"{h:>14}" for h in header))
    for r in log.records:
        cols = (r.sample_id, r.pq, r.target_te, r.events, r.ticks_used, r.final_se, r.mean_misalignment, r.reason.value)
        print("  ".join(f"{c if isinstance(c, str) else _fmt(c):>14}" for c in cols))
    print(f"total ticks: {log.total_ticks}")
    if args.log is not None:
        args.log.write_text(log.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    if args.from_manifest is not None:
        spec = load_manifest(args.from_manifest)
    else:
        cfg = _load_config(args)
        if args.preset:
            spec = preset_spec(args.preset, cfg)
            # an explicit override of a swept parameter pins that axis
            narrowed = {
                _SWEPT[k]: (getattr(cfg, k),) for k in _SWEPT if k in args._overridden
            }
            if narrowed:
                spec = spec.__class__(**{**spec.__dict__, **narrowed})
        else:
            spec = single_cell_spec(cfg)
    result = execute_scan(spec, workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, body in render_bundle(result).items():
        (args.out / name).write_text(body, encoding="utf-8")
        print(args.out / name)
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    rows = read_runs_csv(args.runs_csv.read_text(encoding="utf-8"))
    if args.preset:
        facets = preset_spec(args.preset).facets
    else:
        facets = (Facet(args.name, args.adjust_error, args.cutoff, args.sweep),)
    args.out.mkdir(parents=True, exist_ok=True)
    for facet in facets:
        path = args.out / f"{facet.name}.svg"
        path.write_text(render_facet(rows, facet), encoding="utf-8")
        print(path)
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    for name in PRESETS:
        print(f"{name:12} {PRESET_DESCRIPTIONS[name]}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "scan": cmd_scan, "plot": cmd_plot, "presets": cmd_presets}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValidationError, EmptySelection, KeyError) as exc:
        print(f"opsim: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"opsim: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"opsim: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
