"""Command-line entry point.

Usage::

    PYTHONPATH=$(pwd) python -m cli parse systems/kg2d.pde
    PYTHONPATH=$(pwd) python -m cli charpoly systems/dirac.pde
    PYTHONPATH=$(pwd) python -m cli solve systems/monge_strip.pde --cauchy systems/monge_strip_cauchy.json --query '[{"x": [1, 0]}]'

Exit codes: 0 success, 1 usage, 2 parse error, 3 numeric failure, 4 precondition violation.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from loguru import logger
from pydantic import ValidationError

from cli import export
from config.settings import Settings, get_settings
from domain.errors import CharkitError, UsageError
from domain.models import HamiltonianSystem, JetEnv, PDESystem, RunConfig, SymbolTensor
from logic.formatting import dsl_names
from logic.physics import BUILTINS, builtin_symbol
from logic.symbol import char_det, principal_symbol
from pipeline import analysis, loader


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as UsageError instead of exiting with 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{level}: {message}")


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Seed for random covectors (CHARKIT_SEED overrides)")
    common.add_argument("--trials", type=int, default=settings.trials, help="Random covectors for the generic rank")
    common.add_argument("--h", type=float, default=settings.h, help="Integrator step size")
    common.add_argument("--steps", type=int, default=settings.steps, help="Number of integrator steps")
    common.add_argument("--tol", type=float, default=settings.rank_tol, help="Relative rank tolerance")
    common.add_argument("-o", "--output", help="Write JSON here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = _Parser(prog="charkit", description="Principal symbols, characteristics and first-order PDE solving.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub = commands.add_parser("parse", parents=[common], help="Echo the canonical form and dimensions")
    sub.add_argument("system")

    for name, text in (("symbol", "Principal symbol"), ("charpoly", "Characteristic polynomial det A(p)")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("system", help="A .pde file or builtin:<name>")
        sub.add_argument("--at", help="Env JSON with point bindings")
        sub.add_argument("--metric", help="Metric JSON for built-in symbols")

    sub = commands.add_parser("rank", parents=[common], help="Generic rank and pointwise rank at a covector")
    sub.add_argument("system", help="A .pde file or builtin:<name>")
    sub.add_argument("--at", help="Env JSON with point bindings and an optional covector")
    sub.add_argument("--covector", help="Covector as inline JSON list")
    sub.add_argument("--metric", help="Metric JSON for built-in symbols")

    sub = commands.add_parser("check-surface", parents=[common], help="Classify a Cauchy surface")
    sub.add_argument("system")
    sub.add_argument("--surface", required=True, help="z(x) with surface z = 0, or tau(y) with --graph")
    sub.add_argument("--graph", action="store_true", help="Read --surface as the graph t = tau(y)")
    sub.add_argument("--at", required=True, help="Env JSON with bindings and surface samples")

    sub = commands.add_parser("charpde", parents=[common], help="Wave-front PDE for t = tau(y)")
    sub.add_argument("system", help="A .pde file or builtin:<name>")
    sub.add_argument("--at", help="Env JSON with background bindings")
    sub.add_argument("--time-axis", help="Independent variable playing the role of t")
    sub.add_argument("--metric", help="Metric JSON for built-in symbols")

    sub = commands.add_parser("solve", parents=[common], help="Method of characteristics")
    sub.add_argument("system")
    sub.add_argument("--cauchy", required=True, help="Cauchy data JSON")
    sub.add_argument("--query", help="Query points, a JSON file or inline JSON")
    sub.add_argument("--csv", help="Also write the sheet as CSV")

    sub = commands.add_parser("hjflow", parents=[common], help="Lagrangian sweep of a Hamiltonian flow")
    source = sub.add_mutually_exclusive_group(required=True)
    source.add_argument("--hamiltonian", help="Hamiltonian JSON")
    source.add_argument("--system", help="Trace the bicharacteristics of this system's wave-front PDE")
    sub.add_argument("--at", help="Background env JSON for --system")
    sub.add_argument("--seed-family", required=True, help="Seed family JSON")
    sub.add_argument("--csv", help="Also write the sheet as CSV")

    sub = commands.add_parser("builtin", parents=[common], help="Emit a built-in symbol")
    sub.add_argument("name", choices=sorted(BUILTINS))
    sub.add_argument("--metric", help="Metric JSON")
    sub.add_argument("--indep", help="Comma-separated independent variable names")

    sub = commands.add_parser("schema", parents=[common], help="Regenerate the payload JSON schemas")
    sub.add_argument("--dir", default="schemas")
    return parser


def _metric(args):
    return loader.load_metric(args.metric) if getattr(args, "metric", None) else None


def _symbol_source(args) -> Tuple[SymbolTensor, Optional[PDESystem]]:
    if loader.parse_builtin_ref(args.system):
        return loader.load_symbol(args.system, _metric(args)), None
    system = loader.load_system(args.system)
    return principal_symbol(system), system


def _env(args, system: Optional[PDESystem]):
    if not getattr(args, "at", None):
        return JetEnv(), loader.EnvDocument()
    return loader.load_env(args.at, system)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
        logger.debug("wrote {}", output)
    else:
        sys.stdout.write(text)


def _dispatch(args, config: RunConfig, settings: Settings) -> int:
    command = config.command
    names = None

    if command == "schema":
        for path in export.write_schemas(args.dir):
            print(path)
        return 0

    if command == "parse":
        payload = export.system_payload(loader.load_system(config.system))

    elif command == "builtin":
        indep = [name.strip() for name in args.indep.split(",")] if args.indep else None
        payload = export.symbol_payload(builtin_symbol(args.name, metric=_metric(args), indep=indep))

    elif command in ("symbol", "charpoly", "rank", "charpde"):
        st, system = _symbol_source(args)
        names = dsl_names(system) if system is not None else None
        env, document = _env(args, system)
        if command == "symbol":
            payload = export.symbol_payload(analysis.bound_symbol(st, env), names)
        elif command == "charpoly":
            payload = export.charpoly_payload(char_det(st, env), names)
        elif command == "rank":
            covector = loader.read_json(args.covector) if args.covector else document.covector
            report = analysis.rank_report(st, env, covector, seed=config.seed, trials=config.trials, tol=config.tol)
            payload = export.rank_payload(report)
        else:
            pde = analysis.wave_front(st, env, args.time_axis or document.time_axis)
            payload = export.charpde_payload(pde, HamiltonianSystem.from_wave_front(pde))

    elif command == "check-surface":
        system = loader.load_system(config.system)
        env, document = loader.load_env(args.at, system)
        report = analysis.surface_report(
            system, args.surface, env, document, graph=args.graph, seed=config.seed, trials=config.trials, tol=config.tol
        )
        payload = export.surface_payload(report)

    elif command == "solve":
        system = loader.load_system(config.system)
        cauchy, axes, bindings = loader.load_cauchy(args.cauchy, system)
        queries = loader.load_queries(args.query) if args.query else []
        outcome = analysis.solve_cauchy(
            system, cauchy, axes, bindings, h=config.h, steps=config.steps, queries=queries, settings=settings
        )
        payload = export.solve_payload(outcome)
        if args.csv:
            export.write_csv(export.solution_frame(outcome.sheet), args.csv)

    elif command == "hjflow":
        if args.hamiltonian:
            hamiltonian = loader.load_hamiltonian(args.hamiltonian)
        else:
            system = loader.load_system(args.system)
            env, document = _env(args, system)
            hamiltonian = analysis.hamiltonian_from_system(system, env, document.time_axis)
        seed = loader.load_seed_family(args.seed_family)
        outcome = analysis.sweep(hamiltonian, seed, h=config.h, steps=config.steps, settings=settings)
        payload = export.hjflow_payload(outcome, hamiltonian)
        if args.csv:
            export.write_csv(export.lagrangian_frame(outcome.sheet), args.csv)

    else:
        raise UsageError(f"Unknown command: {command}")

    _emit(export.to_json(payload), config.output)
    return 0


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code.

    Args:
        argv: Arguments without the program name (defaults to ``sys.argv[1:]``)

    Returns:
        int: 0 on success, otherwise the exit code of the failure class
    """
    settings = get_settings()
    configure_logging(settings.log_level)
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser(settings).parse_args(argv)
        if args.verbose:
            configure_logging("DEBUG")
        config = RunConfig(
            command=args.command,
            system=getattr(args, "system", None),
            aux=getattr(args, "at", None) or getattr(args, "cauchy", None) or getattr(args, "seed_family", None),
            seed=settings.seed if settings.seed is not None else args.seed,
            trials=args.trials,
            h=args.h,
            steps=args.steps,
            tol=args.tol,
            output=args.output,
        )
        return _dispatch(args, config, settings)
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    except ValidationError as exc:
        logger.error("Invalid option: {}", exc.errors()[0]["msg"])
        return UsageError.exit_code
    except CharkitError as exc:
        logger.error(str(exc))
        return exc.exit_code
    except ValueError as exc:
        logger.error(str(exc))
        return UsageError.exit_code
