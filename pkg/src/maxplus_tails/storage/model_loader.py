"""Loading network models from JSON configs."""

import json
import os
from typing import Any, Dict, List, Optional

from src.maxplus_tails.errors import ModelConfigError
from src.maxplus_tails.models.network import (
    ArrivalSpec,
    BernoulliModulated,
    CoinSpec,
    ComponentSpec,
    Deterministic,
    Distribution,
    EntryExpression,
    Exponential,
    NetworkModel,
    Uniform,
)
from src.maxplus_tails.utils.logging import setup_logger

logger = setup_logger("maxplus-tails.loader")


def _require(payload: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(payload, dict):
        raise ModelConfigError(f"expected an object, got {type(payload).__name__}", path)
    if key not in payload:
        raise ModelConfigError(f"missing field {key!r}", path)
    return payload[key]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelConfigError(f"expected a number, got {value!r}", path)
    return float(value)


def parse_distribution(payload: Any, path: str) -> Distribution:
    """
    Parse ``{"type": ..., params}``.

    Supported types: deterministic (value), exponential (rate), uniform (low, high)
    and bernoulli_modulated (p, inner).
    """
    kind = _require(payload, "type", path)
    try:
        if kind == "deterministic":
            return Deterministic(_number(_require(payload, "value", path), f"{path}.value"))
        if kind == "exponential":
            return Exponential(_number(_require(payload, "rate", path), f"{path}.rate"))
        if kind == "uniform":
            return Uniform(
                _number(_require(payload, "low", path), f"{path}.low"),
                _number(_require(payload, "high", path), f"{path}.high"),
            )
        if kind == "bernoulli_modulated":
            return BernoulliModulated(
                _number(_require(payload, "p", path), f"{path}.p"),
                parse_distribution(_require(payload, "inner", path), f"{path}.inner"),
            )
    except ValueError as e:
        raise ModelConfigError(str(e), path) from e
    raise ModelConfigError(f"unsupported distribution type {kind!r}", f"{path}.type")


def parse_entry(payload: Any, path: str) -> EntryExpression:
    """
    Parse one matrix entry.

    ``"-inf"`` is BOTTOM, ``0`` or ``"0"`` the constant zero, and
    ``{"max": [[1, 2], [3]]}`` the max of the component sums; ids are 1-based and
    may repeat inside a term.
    """
    if payload == "-inf" or payload is None:
        return EntryExpression.neg_inf()
    if payload == "0" or (isinstance(payload, (int, float)) and not isinstance(payload, bool) and payload == 0):
        return EntryExpression.zero()
    terms = _require(payload, "max", path)
    if not isinstance(terms, list) or not terms:
        raise ModelConfigError("'max' must be a non-empty list of terms", f"{path}.max")
    parsed: List[tuple] = []
    for t, term in enumerate(terms):
        if not isinstance(term, list) or not term:
            raise ModelConfigError("each term must be a non-empty list of ids", f"{path}.max[{t}]")
        for k in term:
            if isinstance(k, bool) or not isinstance(k, int):
                raise ModelConfigError(f"component id must be an integer, got {k!r}", f"{path}.max[{t}]")
        parsed.append(tuple(term))
    return EntryExpression.poly(*parsed)


def _parse_component(payload: Any, position: int) -> ComponentSpec:
    path = f"components[{position}]"
    index = _require(payload, "id", path)
    if isinstance(index, bool) or not isinstance(index, int):
        raise ModelConfigError(f"id must be an integer, got {index!r}", f"{path}.id")
    dist = parse_distribution(_require(payload, "dist", path), f"{path}.dist")
    coin = None
    if payload.get("coin") is not None:
        coin_payload = payload["coin"]
        try:
            coin = CoinSpec(
                int(_require(coin_payload, "id", f"{path}.coin")),
                int(_require(coin_payload, "branch", f"{path}.coin")),
                _number(_require(coin_payload, "p", f"{path}.coin"), f"{path}.coin.p"),
            )
        except ValueError as e:
            raise ModelConfigError(str(e), f"{path}.coin") from e
    return ComponentSpec(index, dist, coin)


def parse_model(payload: Dict[str, Any], name: Optional[str] = None) -> NetworkModel:
    """
    Build a validated NetworkModel from a decoded JSON config.

    Raises:
        ModelConfigError: With the path of the offending field
    """
    if not isinstance(payload, dict):
        raise ModelConfigError("expected an object", "")
    s = _require(payload, "s", "")
    if isinstance(s, bool) or not isinstance(s, int):
        raise ModelConfigError(f"s must be an integer, got {s!r}", "s")

    raw_components = _require(payload, "components", "")
    if not isinstance(raw_components, list):
        raise ModelConfigError("components must be a list", "components")
    components = tuple(_parse_component(c, position) for position, c in enumerate(raw_components))

    raw_a = _require(payload, "A", "")
    if not isinstance(raw_a, list) or not all(isinstance(row, list) for row in raw_a):
        raise ModelConfigError("A must be a list of rows", "A")
    a = tuple(
        tuple(parse_entry(entry, f"A[{i}][{j}]") for j, entry in enumerate(row))
        for i, row in enumerate(raw_a)
    )
    raw_b = _require(payload, "B", "")
    if not isinstance(raw_b, list):
        raise ModelConfigError("B must be a list", "B")
    b = tuple(parse_entry(entry, f"B[{i}]") for i, entry in enumerate(raw_b))

    try:
        arrivals = ArrivalSpec(parse_distribution(_require(payload, "arrivals", ""), "arrivals"))
    except ValueError as e:
        raise ModelConfigError(str(e), "arrivals") from e

    try:
        return NetworkModel(
            s=s,
            components=components,
            a=a,
            b=b,
            arrivals=arrivals,
            name=name or payload.get("name", "model"),
            metadata=dict(payload.get("metadata", {})),
        )
    except ValueError as e:
        raise ModelConfigError(str(e), "") from e


def load_model(path: str) -> NetworkModel:
    """
    Read and parse a JSON model config.

    Args:
        path: Path to the config file

    Returns:
        Validated NetworkModel

    Raises:
        ModelConfigError: If the file is missing, not JSON, or invalid
    """
    if not os.path.exists(path):
        raise ModelConfigError(f"model config not found: {path}")
    try:
        with open(path, "r") as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelConfigError(f"invalid JSON in {path}: {e}") from e
    if not isinstance(payload, dict):
        raise ModelConfigError("expected an object", "")
    default_name = os.path.splitext(os.path.basename(path))[0]
    model = parse_model(payload, name=payload.get("name", default_name))
    logger.info(f"Loaded model {model.name} from {path} (s={model.s}, K={model.K})")
    return model


def model_to_config(model: NetworkModel) -> Dict[str, Any]:
    """Inverse of :func:`parse_model`."""
    components = []
    for component in model.components:
        item: Dict[str, Any] = {"id": component.index, "dist": component.dist.to_config()}
        if component.coin is not None:
            item["coin"] = {
                "id": component.coin.id,
                "branch": component.coin.branch,
                "p": component.coin.p,
            }
        components.append(item)
    return {
        "name": model.name,
        "s": model.s,
        "components": components,
        "arrivals": model.arrivals.dist.to_config(),
        "A": [[entry.to_config() for entry in row] for row in model.a],
        "B": [entry.to_config() for entry in model.b],
        "metadata": dict(model.metadata),
    }
