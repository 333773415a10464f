"""CLI entrypoint: ``nlhelm solve|constants|check <config>`` and ``nlhelm presets``."""
from __future__ import annotations

import argparse
import logging

from dotenv import load_dotenv

from nlhelm.config import RunConfig, default_log_level, default_workers, load_config
from nlhelm.errors import NLHelmError
from nlhelm.orchestrator import EXIT_CONFIG, EXIT_OK, MODE_CONSTANTS, MODE_SOLVE, run
from nlhelm.outputs import RunSummary
from nlhelm.weights import WEIGHT_PRESETS, diameter_criterion, geometry_report, realize

logger = logging.getLogger(__name__)


def _banner(title: str, lines: list[tuple[str, object]] = ()) -> None:
    print(f"\n{'='*60}")
    print(f"  {title}")
    print(f"{'='*60}")
    for label, value in lines:
        print(f"  {label:<10}: {value}")
    if lines:
        print(f"{'='*60}\n")


def _load(args) -> RunConfig:
    config = load_config(args.config)
    return config.with_overrides(seed=args.seed, output_dir=args.output)


def _print_summary(summary: RunSummary) -> None:
    _banner("Run Complete")
    for name in ("alpha", "beta", "lambda0", "min_eigenvalue"):
        if name in summary.constants:
            print(f"  {name:<15}: {summary.constants[name]:.10g}")
    if summary.rows:
        print(f"\n  {'lambda':>10} {'conv':>5} {'level':>14} {'res_pde':>11} {'iters':>6}")
        for row in summary.rows:
            print(f"  {row.lam:>10.4g} {'yes' if row.converged else 'no':>5} "
                  f"{row.level:>14.8g} {row.res_pde:>11.3e} {row.iters:>6}")
    if summary.skipped_lambdas:
        print(f"\n  Skipped (<= lambda0): {', '.join(f'{lam:g}' for lam in summary.skipped_lambdas)}")
    if summary.errors:
        print(f"\n  Errors: {len(summary.errors)}")
        for err in summary.errors:
            print(f"    ! {err}")
    print(f"\n  Outputs  : {summary.output_dir}")
    print(f"  Exit code: {summary.exit_code}")


# =====================================================================
#  solve / constants : full LangGraph pipeline
# =====================================================================
def _run_pipeline(args, mode: str) -> int:
    try:
        config = _load(args)
    except NLHelmError as exc:
        print(f"[CONFIG] {exc}")
        return EXIT_CONFIG
    workers = args.workers or default_workers()
    _banner(
        "Nonlinear Helmholtz dual solver" if mode == MODE_SOLVE else "Method constants",
        [("Config", args.config), ("Grid", f"N={config.N} M={config.M} L={config.L:g}"),
         ("Exponent", f"p={config.p:g}"), ("Weight", config.weight.kind),
         ("Lambdas", len(config.lambdas)), ("Workers", workers)],
    )
    summary = run(config, mode=mode, workers=workers)
    _print_summary(summary)
    return summary.exit_code


def cmd_solve(args) -> int:
    return _run_pipeline(args, MODE_SOLVE)


def cmd_constants(args) -> int:
    return _run_pipeline(args, MODE_CONSTANTS)


def cmd_check(args) -> int:
    """Validate a config, realize its weight and report the geometry."""
    try:
        config = _load(args)
        Q = realize(config.weight, config.grid)
    except NLHelmError as exc:
        print(f"[CONFIG] {exc}")
        return EXIT_CONFIG
    report = geometry_report(Q)
    criterion = diameter_criterion(report, config.wavenumber)
    _banner("Configuration check", [
        ("Config", args.config),
        ("Grid", f"N={config.N} M={config.M} L={config.L:g} h={config.grid.h:.4g}"),
        ("A_+", f"{report.cells_aplus} cells"),
        ("A_-", f"{report.cells_aminus} cells, diam {report.diam_aminus:.6g}{'' if report.exact else ' (bound)'}"),
        ("Distance", f"{report.dist_apm:.6g}"),
        ("Criterion", f"{criterion.diameter_bound:.6g} <= {criterion.limit:.6g}: "
                      f"{'met' if criterion.satisfied else 'not met'}"),
    ])
    if report.cells_aplus == 0:
        print("[CONFIG] weight has no focusing part (A_+ is empty)")
        return EXIT_CONFIG
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, meta in WEIGHT_PRESETS.items():
        print(f"[{name}] N={meta['dimension']} {meta['kind']}: {meta['description']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="nlhelm: dual variational solver for the sign-changing nonlinear Helmholtz equation",
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default: $NLHELM_LOG_LEVEL or INFO)")

    sub = parser.add_subparsers(dest="command", required=True)

    def _with_config(sub_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
        sub_parser.add_argument("config", type=str, help="Path to the run configuration file")
        sub_parser.add_argument("--seed", type=int, default=None, help="Override mp.seed")
        sub_parser.add_argument("--output", type=str, default=None, help="Override the output directory")
        return sub_parser

    sub_solve = _with_config(sub.add_parser("solve", help="Constants, positivity check and lambda sweep"))
    sub_solve.add_argument("--workers", type=int, default=None, help="Threads for seeds and lambdas")
    sub_solve.set_defaults(func=cmd_solve)

    sub_constants = _with_config(sub.add_parser("constants", help="Only alpha, beta, lambda0 and the checks"))
    sub_constants.add_argument("--workers", type=int, default=None, help="Threads for the seed runs")
    sub_constants.set_defaults(func=cmd_constants)

    sub_check = _with_config(sub.add_parser("check", help="Validate a config and report the weight geometry"))
    sub_check.set_defaults(func=cmd_check)

    sub_presets = sub.add_parser("presets", help="List the built-in weight presets")
    sub_presets.set_defaults(func=cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> None:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or default_log_level()).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    raise SystemExit(args.func(args))


if __name__ == "__main__":
    main()
