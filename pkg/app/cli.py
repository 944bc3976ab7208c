"""
Командная строка: r0, equilibria, check, simulate, sweep, phase.

Результаты печатаются в stdout, логи идут в stderr.
Коды выхода: 0 успех, 2 ошибка конфигурации, 3 нечисловое состояние, 1 прочее.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app import commands
from app.config import (
    CERT_BUDGET,
    DEFAULT_H,
    DEFAULT_N_INIT,
    DEFAULT_RECORD_EVERY_TIME,
    DEFAULT_SEED,
    DEFAULT_T_END,
    DEFAULT_TOL,
    OUTPUT_FORMATS,
    SYSTEMS,
)
from app.errors import ConfigError, NonFiniteState, ScirsError
from app.integrator import IntegrationConfig
from app.params_io import (
    RunConfig,
    SamplerSpec,
    SweepSpec,
    load_sweep_spec,
    parse_state,
    parse_values,
    read_params,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


# -------------------------
# parser
# -------------------------

def _add_params(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--params", type=Path, required=required, help="файл параметров (flat / JSON / YAML)")


def _add_integration(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h", type=float, default=DEFAULT_H, help="шаг RK4")
    parser.add_argument("--t-end", type=float, default=DEFAULT_T_END, help="горизонт интегрирования")
    parser.add_argument("--record-every", type=float, default=DEFAULT_RECORD_EVERY_TIME, help="время между записями")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, help="допуск сходимости (max-норма)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _add_run(parser: argparse.ArgumentParser, default_out: str) -> None:
    _add_params(parser)
    _add_integration(parser)
    parser.add_argument("--out", type=Path, default=Path(default_out))
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="csv")
    parser.add_argument("--system", choices=SYSTEMS, default="limit")
    parser.add_argument("--n-init", type=int, default=DEFAULT_N_INIT, help="число случайных стартов из Omega")
    parser.add_argument("--init", action="append", default=[], help="явное начальное состояние 'x1,x2,...'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scirs", description="SCIRS malware model on wireless sensor networks")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("r0", help="basic reproduction number")
    _add_params(p)

    p = sub.add_parser("equilibria", help="DFE, DEE and residuals as JSON")
    _add_params(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("check", help="global stability condition and certificate")
    _add_params(p)
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--budget", type=int, default=CERT_BUDGET, help="число случайных проб для D")
    p.add_argument("--c", type=float, help="константа для старого условия 2a")

    p = sub.add_parser("simulate", help="RK4 trajectories, one file per initial state")
    _add_run(p, "out/simulate")

    p = sub.add_parser("phase", help="phase-portrait data in a single CSV")
    _add_run(p, "out/phase.csv")

    p = sub.add_parser("sweep", help="one-parameter sweep summary")
    _add_params(p, required=False)
    _add_integration(p)
    p.add_argument("--out", type=Path, default=Path("out/sweep.csv"))
    p.add_argument("--spec", type=Path, help="YAML с base, axis, values")
    p.add_argument("--axis")
    p.add_argument("--values", help="значения через запятую")
    p.add_argument("--simulate", action="store_true", help="заполнить converged_at")

    return parser


# -------------------------
# configs from flags
# -------------------------

def _integration(args: argparse.Namespace) -> IntegrationConfig:
    return IntegrationConfig.every(args.h, args.t_end, args.record_every, convergence_tol=args.tol)


def run_config(args: argparse.Namespace) -> RunConfig:
    states = [parse_state(text) for text in args.init] or None
    return RunConfig(
        params=read_params(args.params),
        system=args.system,
        integration=_integration(args),
        output_path=args.out,
        output_format=args.format,
        initial_states=states,
        sampler=None if states else SamplerSpec(count=args.n_init, seed=args.seed),
    )


def sweep_spec(args: argparse.Namespace) -> SweepSpec:
    if args.spec is not None:
        spec = load_sweep_spec(args.spec)
        if args.axis is not None:
            spec = SweepSpec(spec.base, args.axis, spec.values, spec.simulate)
        if args.values is not None:
            spec = SweepSpec(spec.base, spec.axis, parse_values(args.values), spec.simulate)
        if args.simulate:
            spec.simulate = True
        return spec

    if args.params is None or args.axis is None or args.values is None:
        raise ConfigError("sweep needs --spec, or --params with --axis and --values", field="spec")
    return SweepSpec(read_params(args.params), args.axis, parse_values(args.values), args.simulate)


# -------------------------
# dispatch
# -------------------------

def run(args: argparse.Namespace) -> None:
    if args.command == "r0":
        print(commands.cmd_r0(read_params(args.params)))
    elif args.command == "equilibria":
        print(commands.cmd_equilibria(read_params(args.params), out=args.out))
    elif args.command == "check":
        print(commands.cmd_check(read_params(args.params), seed=args.seed, budget=args.budget, c=args.c, out=args.out))
    elif args.command == "simulate":
        commands.cmd_simulate(run_config(args))
        print(args.out / "summary.json")
    elif args.command == "phase":
        print(commands.cmd_phase(run_config(args)))
    elif args.command == "sweep":
        commands.cmd_sweep(sweep_spec(args), _integration(args), args.out, seed=args.seed)
        print(args.out)


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)

    log.debug("🚀 command %s", args.command)
    try:
        run(args)
    except ConfigError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteState as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ScirsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    return EXIT_OK
