"""Command-line dispatch: one subcommand per analysis path."""

import math
import sys
import time
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

from src.maxplus_tails import __version__
from src.maxplus_tails.config import Config
from src.maxplus_tails.core.decay import (
    DEFAULT_THETA_MAX,
    eta_of,
    optimize_routing,
    solve,
    stability_verdict,
)
from src.maxplus_tails.core.mgf import (
    block_theta_limit,
    default_theta_grid,
    lambda_block_empirical,
    lambda_S_empirical,
)
from src.maxplus_tails.core.recursion import default_margin, sample_daters
from src.maxplus_tails.core.selftest import run_selftest
from src.maxplus_tails.core.structure import analyze_structure, check_assumptions
from src.maxplus_tails.core.tail import cross_validate, fit_tail
from src.maxplus_tails.errors import (
    AssumptionError,
    ConfigError,
    MaxPlusTailsError,
    ModelConfigError,
    UsageError,
)
from src.maxplus_tails.models.library import builtin
from src.maxplus_tails.models.network import NetworkModel, check_unit_max_degree
from src.maxplus_tails.models.reports import RunManifest
from src.maxplus_tails.storage.model_loader import load_model
from src.maxplus_tails.storage.output_writer import OutputWriter
from src.maxplus_tails.utils.logging import set_global_level, setup_logger

logger = setup_logger("maxplus-tails.cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ESTIMATION = 2
EXIT_USAGE = 64
EXIT_INTERRUPTED = 130

# Result of a command: (JSON payload, optional CSV (header, rows), exit code)
Outcome = Tuple[Dict[str, Any], Optional[Tuple[Sequence[str], list]], int]

BUILTIN_PARAMETERS = ("mu", "mu1", "mu2", "mu3", "lam", "p")


def select_model(config: Config) -> NetworkModel:
    """Load ``--model`` or construct ``--builtin`` with its rate flags."""
    if config.model_path is not None:
        return load_model(config.model_path)
    params = {key: getattr(config, key) for key in BUILTIN_PARAMETERS}
    model, _ = builtin(config.builtin, config.service_kind, config.arrival_kind, **params)
    return model


def _model_label(config: Config) -> str:
    if config.model_path is not None:
        return config.model_path
    return config.builtin or "resequencing"


def run_validate(config: Config) -> Outcome:
    try:
        model = select_model(config)
    except ModelConfigError as e:
        payload = {"valid": False, "error": e.reason, "path": e.path}
        return payload, None, EXIT_VALIDATION
    verdicts = check_assumptions(model, samples=config.samples)
    valid = all(verdict.passed for verdict in verdicts.values())
    payload = {
        "valid": valid,
        "name": model.name,
        "s": model.s,
        "K": model.K,
        "verdicts": {name: verdict.to_dict() for name, verdict in verdicts.items()},
    }
    return payload, None, EXIT_OK if valid else EXIT_VALIDATION


def run_analyze(config: Config) -> Outcome:
    model = select_model(config)
    structure = analyze_structure(model)
    verdicts = check_assumptions(model, samples=config.samples)
    payload = structure.to_dict()
    payload["verdicts"] = {name: verdict.to_dict() for name, verdict in verdicts.items()}
    payload["eta"] = eta_of(model)
    payload["unit_max_degree"] = check_unit_max_degree(model).to_dict()
    return payload, None, EXIT_OK


def run_simulate(config: Config) -> Outcome:
    model = select_model(config)
    settings = config.settings()
    stability = stability_verdict(model, analyze_structure(model), settings)
    margin = default_margin(float(stability["gamma"]), model.arrivals.mean)
    batch = sample_daters(
        model,
        settings.replicas,
        settings.streams,
        margin,
        settings.threads,
        max_horizon=settings.max_horizon,
        block_size=settings.block_size,
    )
    payload = {
        "stability": stability,
        "margin": margin,
        "replicas": len(batch),
        "censored": batch.censored,
        "z_mean": float(batch.z.mean()),
        "z_max": float(batch.z.max()),
        "horizon_max": int(batch.horizon_used.max()),
    }
    rows = [
        [index, float(batch.z[index]), int(batch.horizon_used[index]), bool(batch.converged[index])]
        for index in range(len(batch))
    ]
    return payload, (("replica", "z", "horizon_used", "converged"), rows), EXIT_OK


def run_mgf(config: Config) -> Outcome:
    model = select_model(config)
    settings = config.settings()
    structure = analyze_structure(model)
    eta = eta_of(model)

    if config.block.upper() == "S":
        limit = eta
    else:
        try:
            ell = int(config.block) - 1
        except ValueError:
            raise ConfigError(f"--block must be a class number or S, got {config.block!r}")
        if not 0 <= ell < structure.d:
            raise ConfigError(f"--block must be between 1 and {structure.d}, got {config.block}")
        limit = block_theta_limit(model, structure.classes[ell])
    theta_max = config.theta_max
    if theta_max is None and math.isinf(limit):
        theta_max = DEFAULT_THETA_MAX
    grid = default_theta_grid(limit, theta_max, settings.grid_points)

    if config.block.upper() == "S":
        curve = lambda_S_empirical(
            model, grid, settings.n, settings.replicas, settings.streams, settings.threads,
            settings.block_size,
        )
    else:
        curve = lambda_block_empirical(
            model, structure, ell, grid, settings.n, settings.replicas, settings.streams,
            settings.threads, block_size=settings.block_size,
        )
    rows = [list(row) for row in curve.rows()]
    payload = {
        "block": curve.label,
        "n": curve.n_used,
        "replicas": curve.replicas,
        "upper_bound": curve.upper_bound,
        "eta": eta,
        "curve": [dict(zip(("theta", "lambda_hat", "ci", "flag"), row)) for row in rows],
    }
    return payload, (("theta", "lambda_hat", "ci", "flag"), rows), EXIT_OK


def run_theta(config: Config) -> Outcome:
    model = select_model(config)
    report = solve(model, config.method, config.settings(), eta_override=config.eta_override)
    return report.to_dict(), None, EXIT_OK


def run_tailfit(config: Config) -> Outcome:
    model = select_model(config)
    fit = fit_tail(model, config.settings())
    return fit.to_dict(), (("x", "log_ccdf"), [list(level) for level in fit.levels]), EXIT_OK


def run_crosscheck(config: Config) -> Outcome:
    model = select_model(config)
    verdict = cross_validate(
        model, config.settings(), config.method, eta_override=config.eta_override
    )
    rows = [list(level) for level in verdict.fit.levels]
    code = EXIT_OK if verdict.passed else EXIT_ESTIMATION
    return verdict.to_dict(), (("x", "log_ccdf"), rows), code


def run_optimize(config: Config) -> Outcome:
    if config.model_path is not None:
        model = load_model(config.model_path)
    else:
        params = {key: getattr(config, key) for key in ("mu2", "mu3", "lam", "p")}
        model, _ = builtin(config.builtin or "resequencing", config.service_kind, config.arrival_kind, **params)
    optimum = optimize_routing(model, settings=config.settings())
    return optimum.to_dict(), None, EXIT_OK


def run_selftest_command(config: Config) -> Outcome:
    settings = config.settings()
    result = run_selftest(settings, quick=config.quick)
    return result, None, EXIT_OK if result["passed"] else EXIT_ESTIMATION


COMMANDS: Dict[str, Callable[[Config], Outcome]] = {
    "validate": run_validate,
    "analyze": run_analyze,
    "simulate": run_simulate,
    "mgf": run_mgf,
    "theta": run_theta,
    "tailfit": run_tailfit,
    "crosscheck": run_crosscheck,
    "optimize": run_optimize,
    "selftest": run_selftest_command,
}


def _emit(config: Config, manifest: RunManifest, outcome: Outcome) -> None:
    payload, table, _ = outcome
    writer = OutputWriter(manifest, include_timing=config.timing)
    sys.stdout.write(writer.render_json(payload))
    sys.stdout.flush()
    if config.out:
        if table is not None:
            writer.write_csv(config.out, *table)
        else:
            writer.write_json(config.out, payload)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on validation failure, 2 on estimation or diagnostic
        failure, 64 on usage errors, 130 when interrupted
    """
    try:
        config = Config.from_args(argv)
        set_global_level(config.log_level)
        config.validate()

        started = time.perf_counter()
        outcome = COMMANDS[config.command](config)
        manifest = RunManifest(
            subcommand=config.command,
            model=_model_label(config) if config.command != "selftest" else "bundled",
            seed=config.seed,
            parameters=config.manifest_parameters(),
            version=__version__,
            wall_time=time.perf_counter() - started,
        )
        logger.info(f"{config.command} finished in {manifest.wall_time:.2f}s")
        _emit(config, manifest, outcome)
        return outcome[2]

    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        # --help exits through argparse
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except (ModelConfigError, ConfigError, AssumptionError) as e:
        logger.error(f"Validation failed: {e}")
        return EXIT_VALIDATION
    except MaxPlusTailsError as e:
        logger.error(f"Estimation failed: {e}")
        return EXIT_ESTIMATION
    except Exception as e:
        logger.error(f"Error running {argv!r}: {e}")
        logger.exception("Exception details:")
        return EXIT_ESTIMATION
