"""Result types produced by the analysis engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.maxplus_tails.models.maxplus import MaxPlusMatrix
from src.maxplus_tails.models.network import NetworkModel


def json_number(value: Optional[float]) -> Any:
    """Floats as JSON: non-finite values become the strings "inf", "-inf", "nan"."""
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_jsonable(payload: Any) -> Any:
    """Recursively convert numpy scalars, tuples and non-finite floats for json.dumps."""
    if isinstance(payload, dict):
        return {str(k): to_jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [to_jsonable(v) for v in payload]
    if isinstance(payload, np.ndarray):
        return [to_jsonable(v) for v in payload.tolist()]
    if isinstance(payload, (bool, np.bool_)):
        return bool(payload)
    if isinstance(payload, (int, np.integer)):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        return json_number(payload)
    return payload


@dataclass(frozen=True)
class AssumptionVerdict:
    name: str
    passed: bool
    method: str
    detail: str = ""
    witness: Optional[Dict[str, Any]] = None

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "passed": self.passed,
                "method": self.method,
                "detail": self.detail,
                "witness": self.witness,
            }
        )


@dataclass(frozen=True)
class StructureReport:
    """
    Precedence structure of A.

    Coordinates are 0-based; ``to_dict`` renders them 1-based.
    """

    support: Tuple[Tuple[bool, ...], ...]
    classes: Tuple[Tuple[int, ...], ...]
    class_of: Tuple[int, ...]
    order: Tuple[Tuple[bool, ...], ...]
    permutation: Tuple[int, ...]
    assumption_verdicts: Dict[str, AssumptionVerdict] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.classes)

    def precedes(self, left: int, right: int) -> bool:
        """C_left ⋖ C_right."""
        return self.order[left][right]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "classes": [[i + 1 for i in cls] for cls in self.classes],
            "class_of": {str(i + 1): c + 1 for i, c in enumerate(self.class_of)},
            "order": [
                [l + 1, m + 1]
                for l in range(self.d)
                for m in range(self.d)
                if l != m and self.order[l][m]
            ],
            "permutation": [i + 1 for i in self.permutation],
            "verdicts": {k: v.to_dict() for k, v in self.assumption_verdicts.items()},
        }


@dataclass
class PathSample:
    """
    One time-reversed path: sigma_0..sigma_N, tau_1..tau_N and S_0..S_N.

    Realized matrices are regenerated from the stored component draws.
    """

    horizon: int
    sigma: np.ndarray
    tau: np.ndarray
    s_values: np.ndarray

    def matrices(self, model: NetworkModel) -> List[Tuple[MaxPlusMatrix, MaxPlusMatrix]]:
        """(A_k, B_k) for k = 0..N."""
        return [model.realize(self.sigma[k]) for k in range(self.horizon + 1)]


@dataclass(frozen=True)
class DaterSample:
    z: float
    horizon_used: int
    converged: bool


@dataclass
class DaterBatch:
    z: np.ndarray
    horizon_used: np.ndarray
    converged: np.ndarray

    def __len__(self) -> int:
        return int(self.z.shape[0])

    def __getitem__(self, index: int) -> DaterSample:
        return DaterSample(
            z=float(self.z[index]),
            horizon_used=int(self.horizon_used[index]),
            converged=bool(self.converged[index]),
        )

    @property
    def censored(self) -> int:
        return int(np.count_nonzero(~self.converged))


@dataclass(frozen=True)
class GammaEstimate:
    gamma: float
    standard_error: float
    mean_interarrival: float
    horizon: int
    replicas: int

    @property
    def stable(self) -> bool:
        return self.gamma + 2.0 * self.standard_error < self.mean_interarrival

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "gamma_hat": self.gamma,
                "standard_error": self.standard_error,
                "mean_interarrival": self.mean_interarrival,
                "horizon": self.horizon,
                "replicas": self.replicas,
                "stable": self.stable,
            }
        )


@dataclass
class MGFCurve:
    """
    Estimated scaled cumulant generating function on a theta grid.

    ``values`` holds NaN where ``infinite`` is set.
    """

    theta_grid: np.ndarray
    values: np.ndarray
    half_widths: np.ndarray
    infinite: np.ndarray
    n_used: int
    replicas: int
    label: str = "S"
    upper_bound: bool = False

    def __post_init__(self) -> None:
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.half_widths = np.asarray(self.half_widths, dtype=float)
        self.infinite = np.asarray(self.infinite, dtype=bool)
        if np.any(np.diff(self.theta_grid) <= 0):
            raise ValueError("theta grid must be strictly increasing")

    @property
    def finite_count(self) -> int:
        """Number of leading grid points before the first INFINITE flag."""
        flagged = np.flatnonzero(self.infinite)
        return int(flagged[0]) if flagged.size else int(self.theta_grid.size)

    @property
    def finite_end(self) -> float:
        """Largest grid theta of the leading finite stretch."""
        count = self.finite_count
        return float(self.theta_grid[count - 1]) if count else 0.0

    def evaluate(self, theta: float, band: int = 0) -> float:
        """
        Piecewise-linear interpolant of the curve (band=+1/-1 for the CI edges).

        Returns ``math.inf`` beyond the finite stretch.
        """
        count = self.finite_count
        if count == 0 or theta > self.theta_grid[count - 1]:
            return math.inf
        curve = self.values[:count] + band * self.half_widths[:count]
        return float(np.interp(theta, self.theta_grid[:count], curve))

    def rows(self) -> List[Tuple[float, Any, Any, str]]:
        out = []
        for theta, value, width, flag in zip(
            self.theta_grid, self.values, self.half_widths, self.infinite
        ):
            out.append(
                (
                    float(theta),
                    "inf" if flag else float(value),
                    "" if flag else float(width),
                    "INFINITE" if flag else "",
                )
            )
        return out


@dataclass(frozen=True)
class ThetaEstimate:
    """Decay-rate root with its uncertainty interval."""

    value: float
    lower: float
    upper: float
    method: str
    root_found: bool = True
    capped: bool = False
    cap: float = math.inf
    note: str = ""

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "theta": self.value,
                "lower": self.lower,
                "upper": self.upper,
                "method": self.method,
                "root_found": self.root_found,
                "capped": self.capped,
                "cap": self.cap,
                "note": self.note,
            }
        )


@dataclass(frozen=True)
class ClassRate:
    class_index: int
    coordinates: Tuple[int, ...]
    estimate: ThetaEstimate

    @property
    def theta(self) -> float:
        return self.estimate.value

    def to_dict(self) -> dict:
        payload = {"class": self.class_index + 1, "coordinates": [c + 1 for c in self.coordinates]}
        payload.update(self.estimate.to_dict())
        return payload


@dataclass
class DecayReport:
    eta: float
    theta_by_class: List[ClassRate]
    theta_star: float
    theta_star_lower: float
    theta_star_upper: float
    binding: str
    eta_cap_lifted: bool
    diagnostics: List[str] = field(default_factory=list)
    stability: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "eta": self.eta,
                "theta_star": self.theta_star,
                "theta_star_ci": [self.theta_star_lower, self.theta_star_upper],
                "binding": self.binding,
                "eta_cap_lifted": self.eta_cap_lifted,
                "theta_by_class": [rate.to_dict() for rate in self.theta_by_class],
                "stability": self.stability,
                "diagnostics": self.diagnostics,
            }
        )


@dataclass(frozen=True)
class RoutingOptimum:
    p: float
    theta_star: float
    admissible: Tuple[float, float]
    clamped: bool
    method: str
    attained: bool = True

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "p_star": self.p,
                "theta_star": self.theta_star,
                "admissible": list(self.admissible),
                "clamped": self.clamped,
                "method": self.method,
                "attained": self.attained,
            }
        )


@dataclass(frozen=True)
class LegendreCheck:
    theta_rate: float
    theta_star: float
    agrees: bool
    tolerance: float
    applicable: bool
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "inf_rate_over_alpha": self.theta_rate,
                "theta_star": self.theta_star,
                "agrees": self.agrees,
                "tolerance": self.tolerance,
                "applicable": self.applicable,
                "notes": list(self.notes),
            }
        )


@dataclass
class TailFit:
    samples: int
    quantile_window: Tuple[float, float]
    slope: float
    slope_se: float
    levels: List[Tuple[float, float]]
    censored: int
    warnings: List[str] = field(default_factory=list)

    @property
    def theta_hat(self) -> float:
        return -self.slope

    @property
    def void(self) -> bool:
        """More than 1% of the daters were truncated."""
        return self.censored > 0.01 * self.samples

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "samples": self.samples,
                "quantile_window": list(self.quantile_window),
                "slope": self.slope,
                "slope_se": self.slope_se,
                "theta_hat": self.theta_hat,
                "censored": self.censored,
                "void": self.void,
                "levels": [list(level) for level in self.levels],
                "warnings": self.warnings,
            }
        )


@dataclass
class CrossCheckVerdict:
    passed: bool
    theta_fit: float
    theta_fit_se: float
    theta_star: float
    binding: str
    tolerance: float
    warnings: List[str] = field(default_factory=list)
    fit: Optional[TailFit] = None
    report: Optional[DecayReport] = None

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "verdict": self.label,
                "theta_fit": self.theta_fit,
                "theta_fit_se": self.theta_fit_se,
                "theta_star": self.theta_star,
                "binding": self.binding,
                "tolerance": self.tolerance,
                "warnings": self.warnings,
                "tail_fit": self.fit.to_dict() if self.fit else None,
                "decay": self.report.to_dict() if self.report else None,
            }
        )


@dataclass
class RunManifest:
    """Everything that determines a run's output."""

    subcommand: str
    model: str
    seed: int
    parameters: Dict[str, Any]
    version: str
    wall_time: Optional[float] = None

    def to_dict(self, include_timing: bool = False) -> dict:
        payload = {
            "subcommand": self.subcommand,
            "model": self.model,
            "seed": self.seed,
            "parameters": dict(sorted(self.parameters.items())),
            "version": self.version,
        }
        if include_timing:
            payload["wall_time"] = self.wall_time
        return to_jsonable(payload)

