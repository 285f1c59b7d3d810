"""Configuration handling for the maxplus-tails command line."""

import argparse
from dataclasses import dataclass, fields
from typing import List, Optional, Sequence, Tuple

from environs import Env

from src.maxplus_tails.errors import ConfigError, UsageError
from src.maxplus_tails.models.settings import EstimationSettings
from src.maxplus_tails.utils.pool import DEFAULT_BLOCK_SIZE

COMMANDS = (
    "validate",
    "analyze",
    "simulate",
    "mgf",
    "theta",
    "tailfit",
    "crosscheck",
    "optimize",
    "selftest",
)
MODEL_COMMANDS = ("validate", "analyze", "simulate", "mgf", "theta", "tailfit", "crosscheck")
BUILTINS = (
    "mm1",
    "single_server",
    "tandem_identical",
    "tandem_independent",
    "fork_join",
    "resequencing",
)


class ToolArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _quantile_window(text: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return lo, hi


@dataclass
class Config:
    """Configuration for one command-line run."""

    command: str = ""

    # Model selection
    model_path: Optional[str] = None
    builtin: Optional[str] = None
    mu: Optional[float] = None
    mu1: Optional[float] = None
    mu2: Optional[float] = None
    mu3: Optional[float] = None
    lam: Optional[float] = None
    p: Optional[float] = None
    service_kind: str = "exponential"
    arrival_kind: str = "exponential"

    # Estimation settings
    seed: int = 0
    replicas: int = 100_000
    n: int = 64
    horizon: int = 1_000_000
    theta_max: Optional[float] = None
    quantile_window: Tuple[float, float] = (0.95, 0.999)
    threads: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE
    points: int = 32
    method: str = "analytic_first"
    block: str = "S"
    samples: int = 1000
    eta_override: Optional[float] = None
    quick: bool = False

    # Output settings
    out: Optional[str] = None
    timing: bool = False
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Config":
        """
        Load configuration from environment variables.

        Returns:
            Config object with values loaded from environment
        """
        env = Env()
        env.read_env()  # Read from .env file if it exists

        return cls(
            threads=env.int("MAXPLUS_TAILS_THREADS", 1),
            seed=env.int("MAXPLUS_TAILS_SEED", 0),
            log_level=env.str("MAXPLUS_TAILS_LOG_LEVEL", "INFO"),
            block_size=env.int("MAXPLUS_TAILS_BLOCK_SIZE", DEFAULT_BLOCK_SIZE),
        )

    @staticmethod
    def build_parser() -> argparse.ArgumentParser:
        parser = ToolArgumentParser(
            prog="maxplus-tails",
            description="Tail decay rates of stochastic (max,plus)-linear networks",
        )
        subparsers = parser.add_subparsers(dest="command", parser_class=ToolArgumentParser)
        subparsers.required = True

        common = ToolArgumentParser(add_help=False)
        common.add_argument("--seed", type=int, help="Master seed (default: MAXPLUS_TAILS_SEED or 0)")
        common.add_argument("--threads", type=int, help="Worker threads (default: MAXPLUS_TAILS_THREADS or 1)")
        common.add_argument("--out", type=str, help="Output file (JSON or CSV by command)")
        common.add_argument("--log-level", type=str, help="Logging level")
        common.add_argument("--timing", action="store_true", default=None, help="Embed wall time in outputs")

        model = ToolArgumentParser(add_help=False)
        model.add_argument("model_file", nargs="?", help="Model config (JSON)")
        model.add_argument("--model", dest="model_path", type=str, help="Model config (JSON)")
        model.add_argument("--builtin", choices=BUILTINS, help="Bundled model family")
        model.add_argument("--mu", type=float, help="Service rate (mm1, single_server, tandem_identical)")
        model.add_argument("--mu1", type=float, help="Rate of station 1")
        model.add_argument("--mu2", type=float, help="Rate of station / path 2")
        model.add_argument("--mu3", type=float, help="Rate of station / path 3")
        model.add_argument("--lambda", dest="lam", type=float, help="Arrival rate")
        model.add_argument("--p", type=float, help="Routing probability of the upper path")
        model.add_argument(
            "--service-kind",
            choices=("exponential", "deterministic"),
            help="Service law of builtin stations; deterministic uses time 1/rate",
        )
        model.add_argument(
            "--arrival-kind",
            choices=("exponential", "deterministic"),
            help="Interarrival law of builtins; deterministic uses time 1/lambda",
        )

        estimation = ToolArgumentParser(add_help=False)
        estimation.add_argument("--replicas", type=int, help="Monte Carlo replicas")
        estimation.add_argument("--n", type=int, help="Block length for MGF estimates")
        estimation.add_argument("--horizon", type=int, help="Maximal backward horizon for daters")
        estimation.add_argument("--theta-max", type=float, help="Upper end of the theta grid")
        estimation.add_argument("--points", type=int, help="Theta grid size")
        estimation.add_argument(
            "--quantile-window", type=_quantile_window, help="Tail-fit window 'lo,hi'"
        )
        estimation.add_argument("--block-size", type=int, help="Replicas per random stream")

        method = ToolArgumentParser(add_help=False)
        method.add_argument("--method", choices=("analytic_first", "empirical_only"))
        method.add_argument("--eta-override", type=float, help="Replace the computed eta")

        subparsers.add_parser("validate", parents=[common, model], help="Validate a model config")
        analyze = subparsers.add_parser(
            "analyze", parents=[common, model], help="Communication classes and assumption verdicts"
        )
        analyze.add_argument("--samples", type=int, help="Draws for the (SP) sampling check")
        subparsers.add_parser(
            "simulate", parents=[common, model, estimation], help="Sample maximal daters"
        )
        mgf = subparsers.add_parser(
            "mgf", parents=[common, model, estimation], help="Estimate Lambda_S or a block Lambda"
        )
        mgf.add_argument("--block", type=str, help="Class number (1-based) or S")
        subparsers.add_parser(
            "theta", parents=[common, model, estimation, method], help="Solve for theta*"
        )
        subparsers.add_parser(
            "tailfit", parents=[common, model, estimation], help="Fit the tail of Z"
        )
        subparsers.add_parser(
            "crosscheck",
            parents=[common, model, estimation, method],
            help="Compare theta* with the fitted tail slope",
        )
        subparsers.add_parser(
            "optimize", parents=[common, model], help="Optimal routing probability"
        )
        selftest = subparsers.add_parser(
            "selftest", parents=[common, estimation], help="Run every bundled model through every path"
        )
        selftest.add_argument("--quick", action="store_true", default=None, help="Reduced replica counts")
        return parser

    @classmethod
    def from_args(cls, argv: Optional[Sequence[str]] = None) -> "Config":
        """
        Parse command line arguments to create configuration.

        Command-line values override environment values.

        Args:
            argv: Arguments without the program name (defaults to sys.argv[1:])

        Returns:
            Config object

        Raises:
            UsageError: On unknown commands or malformed flags
        """
        args = cls.build_parser().parse_args(argv)

        # First load environment variables
        config = cls.from_env()

        # Override with command line arguments
        known = {f.name for f in fields(cls)}
        for key, value in vars(args).items():
            if key in known and value is not None:
                setattr(config, key, value)
        model_file = getattr(args, "model_file", None)
        if model_file is not None:
            if config.model_path is not None:
                raise UsageError("give the model either positionally or with --model, not both")
            config.model_path = model_file
        return config

    def validate(self) -> None:
        """
        Validate the configuration.

        Raises:
            ConfigError: If a value is out of range or the model selection is ambiguous
        """
        problems: List[str] = []
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")
        if self.replicas < 1:
            problems.append(f"replicas must be >= 1, got {self.replicas}")
        if self.n < 1:
            problems.append(f"n must be >= 1, got {self.n}")
        if self.horizon < 0:
            problems.append(f"horizon must be >= 0, got {self.horizon}")
        if self.seed < 0:
            problems.append(f"seed must be >= 0, got {self.seed}")
        if self.block_size < 1:
            problems.append(f"block size must be >= 1, got {self.block_size}")
        if self.points < 3:
            problems.append(f"points must be >= 3, got {self.points}")
        lo, hi = self.quantile_window
        if not 0 < lo < hi < 1:
            problems.append(f"quantile window must satisfy 0 < lo < hi < 1, got {lo},{hi}")
        if self.theta_max is not None and self.theta_max <= 0:
            problems.append(f"theta-max must be positive, got {self.theta_max}")
        if self.command in MODEL_COMMANDS:
            if (self.model_path is None) == (self.builtin is None):
                problems.append("give exactly one of --model and --builtin")
        if self.command == "optimize" and self.model_path and self.builtin:
            problems.append("give at most one of --model and --builtin")
        if problems:
            raise ConfigError("; ".join(problems))

    def settings(self) -> EstimationSettings:
        """Estimation parameters for the engines."""
        return EstimationSettings(
            seed=self.seed,
            n=self.n,
            replicas=self.replicas,
            threads=self.threads,
            block_size=self.block_size,
            theta_max=self.theta_max,
            grid_points=self.points,
            tail_replicas=self.replicas,
            quantile_window=tuple(self.quantile_window),
            max_horizon=self.horizon,
        )

    def manifest_parameters(self) -> dict:
        """Every value that influences the output, for the run manifest."""
        skip = {"command", "model_path", "builtin", "seed", "out", "timing", "log_level", "threads"}
        return {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in skip and getattr(self, f.name) is not None
        }
