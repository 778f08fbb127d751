"""
ErgoLab - Command Line Front End
Runs one experiment per invocation, writes reports and a manifest, or serves the HTTP API
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

import uvicorn
from fastapi import FastAPI

from ergolab import __version__
from ergolab.config import ALL_KEYS, RunConfig, default_workers, load_config_file, resolve_config, write_manifest
from ergolab.endpoints.experiments import router as experiments_router
from ergolab.errors import BudgetExceededError, ConfigurationError, ErgoLabError
from ergolab.models.polynomials import GrowthFn
from ergolab.simulations.dynamics import SkewSystem
from ergolab.simulations.experiments import (
    certify_points,
    cesaro_trajectory,
    entropy_proxy,
    estimate_e_measure,
    llt_curve,
    triple_measure_curve,
)
from ergolab.simulations.reports import ExperimentReport
from ergolab.simulations.selftest import run_selftest
from ergolab.simulations.series import series_partial_sums

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_BUDGET = 3
EXIT_CONFIG = 64

EXPERIMENTS = ["llt", "series", "e-measure", "triple", "cesaro", "entropy", "certify", "selftest"]

# flag -> config key; flags share the key's converter from ergolab.config
COMMON_FLAGS = {
    "--seed": "seed",
    "--workers": "workers",
    "--samples": "samples",
    "--omega-per-point": "omega_per_point",
    "--horizon": "horizon",
    "--eta": "eta",
    "--f": "f",
    "--p1": "p1",
    "--p2": "p2",
    "--base": "base",
    "--M": "M",
    "--budget": "budget",
    "--scan-bound": "scan_bound",
    "--rotation-alpha": "rotation_alpha",
    "--step-function": "step_function",
}

COMMAND_FLAGS = {
    "llt": {"--llt-n": "llt_n"},
    "series": {"--growth": "growth", "--n-cap": "n_cap", "--k-cap": "k_cap"},
    "e-measure": {"--n-values": "n_values", "--k-cap": "k_cap"},
    "triple": {"--n-from": "n_from", "--n-to": "n_to"},
    "cesaro": {"--n-max": "n_max"},
    "entropy": {"--entropy-n": "entropy_n"},
    "certify": {},
    "selftest": {"--conjugacy-trials": "conjugacy_trials"},
}


def create_app() -> FastAPI:
    """FastAPI application exposing the experiments"""
    app = FastAPI(title="ErgoLab", version=__version__)
    app.include_router(experiments_router)

    @app.get("/")
    def root() -> Dict[str, Any]:
        return {
            "message": "ErgoLab experiment server",
            "status": "running",
            "version": __version__,
            "endpoints": ["/status"] + [f"/experiments/{name}" for name in EXPERIMENTS],
        }

    @app.get("/status")
    def status() -> Dict[str, Any]:
        return {
            "server_status": "running",
            "version": __version__,
            "experiments": EXPERIMENTS,
            "available_workers": default_workers(),
        }

    return app


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, not check failures"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--out", default="results", help="output directory for reports and manifest")
    common.add_argument("--unsafe-degree", dest="unsafe_degree", action="store_const", const=True, default=None,
                        help="allow polynomials of degree below 5")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    for flag, key in COMMON_FLAGS.items():
        common.add_argument(flag, dest=key, default=None, metavar=key.upper())

    parser = _Parser(prog="ergolab", description="Simulation and verification lab for skew-product systems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, flags in COMMAND_FLAGS.items():
        sub = commands.add_parser(name, parents=[common])
        for flag, key in flags.items():
            sub.add_argument(flag, dest=key, default=None, metavar=key.upper())

    serve = commands.add_parser("serve", help="run the HTTP API with uvicorn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8003)
    serve.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Typed values of every flag given on the command line"""
    overrides = {}
    flags = {**COMMON_FLAGS, **COMMAND_FLAGS[args.command]}
    for flag, key in flags.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            overrides[key] = ALL_KEYS[key](raw)
        except ValueError as e:
            raise ConfigurationError(f"invalid value for {flag}: {e}", "<command line>") from e
    if args.unsafe_degree:
        overrides["unsafe_degree"] = True
    return overrides


def run_experiment(command: str, run: RunConfig, system: SkewSystem) -> ExperimentReport:
    samples = system.config.samples
    workers = run.workers
    if command == "llt":
        return llt_curve(run.resolve_list(system, run.llt_n))
    if command == "series":
        return series_partial_sums(GrowthFn.parse(run.growth), run.n_cap, run.k_cap)
    if command == "e-measure":
        return estimate_e_measure(system, run.resolve_list(system, run.n_values), samples, run.k_cap, workers)
    if command == "triple":
        return triple_measure_curve(system, run.resolve_n(system, run.n_from), run.resolve_n(system, run.n_to),
                                    samples, workers)
    if command == "cesaro":
        return cesaro_trajectory(system, run.resolve_n(system, run.n_max), samples, workers)
    if command == "entropy":
        return entropy_proxy(system, run.resolve_list(system, run.entropy_n), samples, workers)
    if command == "certify":
        return certify_points(system, samples, workers)
    if command == "selftest":
        return run_selftest(system, conjugacy_trials=run.conjugacy_trials)
    raise ConfigurationError(f"unknown experiment {command!r}")


def save_partial_report(command: str, system: Optional[SkewSystem], error: Exception, out_dir: str):
    """Write <command>.json for a run cut short, once the system is resolved"""
    if system is None:
        return
    report = ExperimentReport(experiment=command, config=system.config.to_dict())
    report.summary = {"error": type(error).__name__, "M": system.start, "H": system.horizon}
    report.notes.append(f"partial report: {error}")
    report.add_check("run completed", False, str(error))
    report.record_base(system.kind)
    report.save(out_dir)


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one experiment and return the exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.command == "serve":
        print(f"🌐 Starting ErgoLab server on http://{args.host}:{args.port}")
        uvicorn.run(create_app(), host=args.host, port=args.port, log_level=args.log_level.lower())
        return EXIT_OK

    system = None
    try:
        file_values = load_config_file(args.config) if args.config else None
        run_config, system = resolve_config(file_values, collect_overrides(args), args.config)
        write_manifest(run_config, args.out)
        logger.info("Running %s (M=%d, H=%d, F=%s)", args.command, system.start, system.horizon, system.flips.to_text())
        report = run_experiment(args.command, run_config, system)
    except ConfigurationError as e:
        print(f"❌ {e.diagnostic()}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        # PreconditionError and the parse errors are ValueErrors
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as e:
        print(f"❌ {e}", file=sys.stderr)
        save_partial_report(args.command, system, e, args.out)
        return EXIT_BUDGET
    except AssertionError as e:
        print(f"❌ assertion failed: {e}", file=sys.stderr)
        save_partial_report(args.command, system, e, args.out)
        return EXIT_CHECK_FAILED
    except ErgoLabError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"❌ {args.command} failed: {e}", file=sys.stderr)
        save_partial_report(args.command, system, e, args.out)
        return EXIT_BUDGET

    except AssertionError as e:
        print(f"❌ assertion failed: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except ErgoLabError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"❌ {args.command} failed: {e}", file=sys.stderr)
        return EXIT_BUDGET

    paths = report.save(args.out)
    for name in report.failed_checks:
        print(f"❌ {name}")
    if not report.passed:
        print(f"❌ {args.command}: {len(report.failed_checks)} of {len(report.checks)} checks failed")
        return EXIT_CHECK_FAILED
    print(f"✅ {args.command}: {len(report.checks)} checks passed, {len(paths)} files in {args.out}")
    return EXIT_OK


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
