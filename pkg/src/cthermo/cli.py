"""Command-line entry point.

    cthermo <scenario> [--config FILE] [--out DIR] [--format csv|json]
                       [--dt FLOAT] [--threads N]

Scenarios: fig1, fig2a, fig2b, fig2c, fig3, ft-check, sweep, criteria.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
CTHERMO_THREADS is the fallback for --threads.
"""

from __future__ import annotations

import argparse
import os
import sys

from .dynamics import IntegrationError
from .scenarios import SCENARIOS, ConfigError, load_config, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cthermo",
        description="Deterministic driven-qubit coherence-thermodynamics datasets",
    )
    parser.add_argument("scenario", choices=SCENARIOS, help="scenario to run")
    parser.add_argument("--config", metavar="FILE", help="TOML config file")
    parser.add_argument("--out", metavar="DIR", help="output directory (default: .)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--dt", type=float, help="integrator step (absolute time)")
    parser.add_argument(
        "--threads",
        type=int,
        help="worker threads for grid scenarios (env CTHERMO_THREADS as fallback)",
    )
    return parser


def _threads_from_env() -> int | None:
    raw = os.environ.get("CTHERMO_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CTHERMO_THREADS: not an integer: {raw!r}") from exc
    return value


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else _threads_from_env()
        cfg = load_config(
            args.scenario,
            args.config,
            out_dir=args.out,
            fmt=args.format,
            dt=args.dt,
            threads=threads,
        )
    except ConfigError as exc:
        print(f"cthermo: config error: {exc}", file=sys.stderr)
        return 2
    try:
        paths = run_scenario(cfg)
    except (IntegrationError, ArithmeticError, FloatingPointError) as exc:
        print(f"cthermo: numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # Out-of-regime model errors surface here (e.g. tau_ratio for a
        # state with no finite decoherence time).
        print(f"cthermo: numeric failure: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
