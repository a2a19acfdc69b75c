"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(non-convergence, zero probability, trial budget), 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    GridError,
    InvalidParameterError,
    ScenarioError,
    TrialBudgetExceeded,
    ZeroProbabilityError,
)
from .report import csv_text, render_report, run_scenario
from .scenario import Scenario, parse_scenario, scenario_from_sections

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
DEFAULT_SEED = 0
DEFAULT_TRIALS = 1000

# chain subcommand flag -> (section, key, type)
CHAIN_FLAGS = {
    "L": ("chain", "L", float),
    "n": ("chain", "n", int),
    "eta_m": ("chain", "eta_m", float),
    "swap_intrinsic": ("chain", "swap_intrinsic", float),
    "post_intrinsic": ("chain", "post_intrinsic", float),
    "include_comm_delay": ("chain", "include_comm_delay", bool),
    "tau_mem": ("chain", "tau_mem", float),
    "cap_slots": ("chain", "cap_slots", int),
    "L_att": ("link", "L_att", float),
    "eta_d": ("link", "eta_d", float),
    "p": ("link", "p", float),
    "c_fiber": ("link", "c_fiber", float),
    "p_dlcz": ("dlcz", "p", float),
    "eta_m_dlcz": ("dlcz", "eta_m", float),
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(DEFAULT_SEED), help="master random seed")
    parser.add_argument("--trials", type=int, default=default(DEFAULT_TRIALS),
                        help="Monte Carlo trials / phase samples (0 skips sampling)")
    parser.add_argument("--out", type=Path, default=default(None), help="write the CSV table here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repeaterlab",
        description="Raman conversion and repeater-chain timing simulations.",
    )
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    helps = {
        "convert": "single-photon Raman conversion in one building block",
        "link": "heralding probability and time of one elementary link",
        "chain": "distribution time over a nested repeater chain",
        "compare-dlcz": "speed-up over the DLCZ protocol",
        "phase": "fidelity loss from relative-phase jitter",
        "sweep": "evaluate the [sweep] target over its grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, parents=[common])
        p.add_argument("scenario", type=Path, nargs="?" if name == "chain" else None,
                       help="scenario file")
        if name == "chain":
            for flag, (_, _, kind) in CHAIN_FLAGS.items():
                option = "--" + flag.replace("_", "-")
                if kind is bool:
                    p.add_argument(option, dest=flag, action=argparse.BooleanOptionalAction, default=None)
                else:
                    p.add_argument(option, dest=flag, type=kind, default=None)
    return parser


def _chain_overrides(args: argparse.Namespace) -> dict[str, dict]:
    overrides: dict[str, dict] = {}
    for flag, (section, key, _) in CHAIN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    return overrides


def _load(args: argparse.Namespace) -> Scenario:
    overrides = _chain_overrides(args) if args.command == "chain" else {}
    if args.scenario is None:
        return scenario_from_sections(overrides)
    scenario = parse_scenario(args.scenario.read_text(encoding="utf-8"))
    if overrides:
        scenario = scenario.with_values(
            {(section, key): value for section, values in overrides.items() for key, value in values.items()}
        )
    return scenario


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = _load(args)
        report = run_scenario(scenario, seed=args.seed, trials=args.trials, command=args.command)
        text = render_report(report)
        if args.out is not None:
            args.out.write_text(csv_text(report), encoding="utf-8", newline="")
    except (ScenarioError, InvalidParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ZeroProbabilityError, ConvergenceError, GridError, DegenerateInputError,
            TrialBudgetExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
