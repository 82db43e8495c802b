"""Command-line entry point.

Subcommands:
  run         execute the configured sweep, write CSV and figures
  validate    parse and validate a config file without running it
  oracle-fim  cross-check the closed-form information term against
              numerical quadrature over a grid of bandwidth splits

Exit codes: 0 success, 1 configuration problem, 2 run-level failure.
"""

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from .config import ParseError, ScenarioConfig, ValidationError, load_config
from .harness import run_sweep, write_results
from .metrics import fim, fim_integral
from .optimizer import _sensing_beam
from .scenario import build_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risisac",
        description="Range-estimation accuracy optimization for a "
                    "surface-assisted sensing and uplink network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the configured sweep")
    run_p.add_argument("--config", help="YAML config file (defaults apply if omitted)")
    run_p.add_argument("--output", required=True, help="CSV output path")
    run_p.add_argument("--seed", type=int, default=None,
                       help="run a single seed, overriding the config list")
    run_p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes")
    run_p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")

    val_p = sub.add_parser("validate", help="validate a config file")
    val_p.add_argument("--config", required=True)

    orc_p = sub.add_parser("oracle-fim",
                           help="closed form vs quadrature information term")
    orc_p.add_argument("--config", default=None)
    orc_p.add_argument("--output", required=True, help="CSV output path")
    orc_p.add_argument("--grid", type=int, default=21,
                       help="number of split values in [0, 1)")
    return parser


def _load(path) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    return load_config(path)


def _cmd_run(args) -> int:
    config = _load(args.config)
    if args.seed is not None:
        config = replace(config, seeds=(args.seed,))
    records = run_sweep(config, workers=args.workers)
    write_results(records, args.output, config.k_devices)
    print(f"wrote {len(records)} records to {args.output}")
    if not args.no_plot:
        from .plotting import render_figures
        for path in render_figures(records, args.output, config.sweep_var):
            print(f"wrote figure {path}")
    failures = [r for r in records if r.error]
    for rec in failures:
        print(f"run failed: scheme={rec.scheme} seed={rec.seed} "
              f"sweep_value={rec.sweep_value}: {rec.error}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    n_points = max(len(config.sweep_values), 1)
    n_runs = n_points * len(config.schemes) * len(config.seeds)
    print(f"{args.config}: valid ({n_runs} runs planned)")
    return 0


def _cmd_oracle_fim(args) -> int:
    config = _load(args.config)
    scen = build_scenario(config, config.seeds[0])
    f = _sensing_beam(scen.channels)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "closed_form", "quadrature", "rel_err"])
        worst = 0.0
        for alpha in np.linspace(0.0, 1.0, args.grid, endpoint=False):
            closed = fim(alpha, f, scen.channels, scen.budget)
            quad = fim_integral(alpha, f, scen.channels, scen.budget)
            rel = abs(closed - quad) / max(abs(quad), 1e-300)
            worst = max(worst, rel)
            writer.writerow([f"{alpha:.17g}", f"{closed:.17g}",
                             f"{quad:.17g}", f"{rel:.17g}"])
    print(f"wrote {args.grid} rows to {args.output}; worst rel_err {worst:.3e}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate,
                "oracle-fim": _cmd_oracle_fim}
    try:
        return handlers[args.command](args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surface run-level failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
