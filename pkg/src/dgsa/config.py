"""Flat key/value analysis configuration.

The config format is deliberately plain text with dotted keys::

    model.builtin = gfunction
    model.a = 0, 1, 4.5, 9
    sampler.kind = lowdiscrepancy
    sampler.n = 16384
    analyses = dgsm, bounds, sobol

Every validation failure raises :class:`~dgsa.errors.ConfigError`, which names
the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .distributions import (
    Exponential,
    Gumbel,
    InputDistribution,
    InputSpace,
    Normal,
    Truncated,
    Uniform,
    Weibull,
)
from .errors import ConfigError, ExpressionSyntaxError
from .exprmodel import expression_model
from .functions import ModelFunction, builtin, builtin_names

ANALYSES = ("dgsm", "bounds", "sobol", "morris", "crossed", "oracle")

_MODEL_PARAM_KEYS = ("a", "b", "c", "g0")


@dataclass
class ModelConfig:
    builtin: Optional[str] = None
    params: Dict[str, object] = field(default_factory=dict)
    expression: Optional[str] = None
    dimension: Optional[int] = None
    gradient: str = "fd"  # "fd" or "analytic"


@dataclass
class SamplerConfig:
    kind: str = "lowdiscrepancy"
    seed: int = 0
    skip: int = 1
    n: int = 0


@dataclass
class MorrisConfig:
    r: int = 10
    p: int = 4
    delta_levels: int = 0  # 0 selects the usual p/2 step


@dataclass
class AnalysisConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    marginals: List[InputDistribution] = field(default_factory=list)
    default_marginal: Optional[InputDistribution] = None
    marginal_overrides: Dict[int, InputDistribution] = field(default_factory=dict)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    analyses: List[str] = field(default_factory=list)
    morris: MorrisConfig = field(default_factory=MorrisConfig)
    fd_delta: float = 1e-5
    crossed_delta: float = 1e-4
    sobol_first_order: bool = True
    envelope: Optional[Tuple[float, float]] = None
    groups: List[List[int]] = field(default_factory=list)  # 0-based indices
    pairs: Optional[List[Tuple[int, int]]] = None  # 0-based indices
    oracle_order: int = 32
    output_path: str = "analysis"
    output_formats: List[str] = field(default_factory=lambda: ["csv", "json"])


def parse_distribution(text: str, key: str = "space") -> InputDistribution:
    """Parse a marginal spec such as ``uniform 0 1`` or ``truncated -1 1 normal 0 2``."""
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ConfigError(key, "empty distribution spec")
    kind, args = tokens[0].lower(), tokens[1:]

    def floats(n: int, what: str) -> List[float]:
        if len(args) != n:
            raise ConfigError(key, f"{kind} takes {n} parameter(s) ({what}), got {len(args)}")
        try:
            return [float(t) for t in args]
        except ValueError:
            raise ConfigError(key, f"non-numeric parameter in '{text}'") from None

    try:
        if kind == "uniform":
            a, b = floats(2, "a b")
            return Uniform(a, b)
        if kind == "normal":
            mu, sigma = floats(2, "mu sigma")
            return Normal(mu, sigma)
        if kind == "exponential":
            (lam,) = floats(1, "rate")
            return Exponential(lam)
        if kind == "gumbel":
            mu, beta = floats(2, "mu beta")
            return Gumbel(mu, beta)
        if kind == "weibull":
            k, lam = floats(2, "shape scale")
            return Weibull(k, lam)
        if kind == "truncated":
            if len(args) < 3:
                raise ConfigError(key, "truncated takes: truncated <a> <b> <base spec>")
            try:
                a, b = float(args[0]), float(args[1])
            except ValueError:
                raise ConfigError(key, f"non-numeric truncation bound in '{text}'") from None
            base = parse_distribution(" ".join(args[2:]), key)
            return Truncated(base, a, b)
    except ValueError as exc:  # marginal constructor rejected the parameters
        raise ConfigError(key, str(exc)) from None
    raise ConfigError(key, f"unknown distribution kind '{kind}'")


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"expected a number, got '{raw}'") from None


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got '{raw}'") from None


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(key, f"expected true/false, got '{raw}'")


def _parse_floats(raw: str, key: str) -> List[float]:
    tokens = raw.replace(",", " ").split()
    if not tokens:
        raise ConfigError(key, "expected at least one number")
    return [_parse_float(t, key) for t in tokens]


def _parse_index_list(raw: str, key: str) -> List[int]:
    indices = []
    for token in raw.replace(",", " ").split():
        idx = _parse_int(token, key)
        if idx < 1:
            raise ConfigError(key, f"input indices are 1-based, got {idx}")
        indices.append(idx - 1)
    if not indices:
        raise ConfigError(key, "expected at least one input index")
    return indices


def parse_config_text(text: str) -> AnalysisConfig:
    """Parse the flat key/value format into a validated config."""
    cfg = AnalysisConfig()
    seen = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got '{line}'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip('"')
        if key in seen:
            raise ConfigError(key, "duplicate key")
        seen.add(key)
        _apply_key(cfg, key, value)
    validate_config(cfg)
    return cfg


def load_config(path: str) -> AnalysisConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read '{path}': {exc}") from None
    return parse_config_text(text)


def _apply_key(cfg: AnalysisConfig, key: str, value: str) -> None:
    if key == "model.builtin":
        cfg.model.builtin = value
    elif key in tuple(f"model.{p}" for p in _MODEL_PARAM_KEYS):
        param = key.split(".", 1)[1]
        values = _parse_floats(value, key)
        cfg.model.params[param] = values if len(values) > 1 else values[0]
    elif key == "model.expression":
        cfg.model.expression = value
    elif key == "model.dimension":
        cfg.model.dimension = _parse_int(value, key)
    elif key == "model.gradient":
        if value not in ("fd", "analytic"):
            raise ConfigError(key, f"expected fd or analytic, got '{value}'")
        cfg.model.gradient = value
    elif key == "space.default":
        cfg.default_marginal = parse_distribution(value, key)
    elif key.startswith("space."):
        index = _parse_int(key.split(".", 1)[1], key)
        if index < 1:
            raise ConfigError(key, "space coordinates are 1-based")
        cfg.marginal_overrides[index - 1] = parse_distribution(value, key)
    elif key == "sampler.kind":
        if value not in ("pseudo", "lowdiscrepancy"):
            raise ConfigError(key, f"expected pseudo or lowdiscrepancy, got '{value}'")
        cfg.sampler.kind = value
    elif key == "sampler.seed":
        cfg.sampler.seed = _parse_int(value, key)
    elif key == "sampler.skip":
        cfg.sampler.skip = _parse_int(value, key)
    elif key == "sampler.n":
        cfg.sampler.n = _parse_int(value, key)
    elif key == "analyses":
        cfg.analyses = [t for t in value.replace(",", " ").split()]
    elif key == "morris.r":
        cfg.morris.r = _parse_int(value, key)
    elif key == "morris.p":
        cfg.morris.p = _parse_int(value, key)
    elif key == "morris.delta_levels":
        cfg.morris.delta_levels = _parse_int(value, key)
    elif key == "fd.delta":
        cfg.fd_delta = _parse_float(value, key)
    elif key == "crossed.delta":
        cfg.crossed_delta = _parse_float(value, key)
    elif key == "sobol.first_order":
        cfg.sobol_first_order = _parse_bool(value, key)
    elif key == "bounds.derivative_min":
        lo = _parse_float(value, key)
        hi = cfg.envelope[1] if cfg.envelope else float("inf")
        cfg.envelope = (lo, hi)
    elif key == "bounds.derivative_max":
        hi = _parse_float(value, key)
        lo = cfg.envelope[0] if cfg.envelope else 0.0
        cfg.envelope = (lo, hi)
    elif key == "groups":
        cfg.groups = [
            _parse_index_list(part, key) for part in value.split(";") if part.strip()
        ]
    elif key == "pairs":
        pairs = []
        for part in value.split(";"):
            if not part.strip():
                continue
            idx = _parse_index_list(part, key)
            if len(idx) != 2:
                raise ConfigError(key, "each pair needs exactly two input indices")
            pairs.append((min(idx), max(idx)))
        cfg.pairs = pairs
    elif key == "oracle.order":
        cfg.oracle_order = _parse_int(value, key)
    elif key == "output.path":
        cfg.output_path = value
    elif key == "output.format":
        formats = [t for t in value.replace(",", " ").split()]
        for fmt in formats:
            if fmt not in ("csv", "json"):
                raise ConfigError(key, f"unknown output format '{fmt}'")
        cfg.output_formats = formats
    else:
        raise ConfigError(key, "unknown configuration key")


def model_dimension(model: ModelConfig) -> int:
    """Dimension implied by the model spec."""
    if model.builtin is not None and model.expression is not None:
        raise ConfigError(
            "model.builtin", "give either model.builtin or model.expression, not both"
        )
    if model.builtin is None and model.expression is None:
        raise ConfigError(
            "model.builtin", "no model configured (set model.builtin or model.expression)"
        )
    if model.builtin is not None:
        if model.builtin == "morris_reduced":
            return 4
        if model.builtin == "linear_one_var":
            return 1
        if model.builtin == "gfunction":
            a = model.params.get("a")
            if a is None:
                raise ConfigError("model.a", "gfunction needs a coefficient vector")
            return len(a) if isinstance(a, list) else 1
        if model.builtin == "linear_sum":
            b = model.params.get("b")
            if b is None:
                raise ConfigError("model.b", "linear_sum needs a coefficient vector")
            return len(b) if isinstance(b, list) else 1
        raise ConfigError("model.builtin", f"unknown builtin '{model.builtin}'")
    if model.dimension is None:
        raise ConfigError("model.dimension", "expression models must declare a dimension")
    return model.dimension


def build_model(model: ModelConfig) -> ModelFunction:
    if model.builtin is not None and model.expression is not None:
        raise ConfigError("model.builtin", "give either model.builtin or model.expression, not both")
    if model.builtin is not None:
        if model.builtin not in builtin_names():
            raise ConfigError(
                "model.builtin",
                f"unknown builtin '{model.builtin}' (known: {', '.join(builtin_names())})",
            )
        try:
            return builtin(model.builtin, **model.params)
        except (TypeError, ValueError) as exc:
            raise ConfigError("model.builtin", f"bad parameters for {model.builtin}: {exc}") from None
    if model.expression is not None:
        d = model_dimension(model)
        try:
            return expression_model(model.expression, d)
        except ExpressionSyntaxError as exc:
            raise ConfigError("model.expression", str(exc)) from None
    raise ConfigError(
        "model.builtin", "no model configured (set model.builtin or model.expression)"
    )


def build_space(cfg: AnalysisConfig, dimension: int) -> InputSpace:
    default = cfg.default_marginal or Uniform(0.0, 1.0)
    marginals = [default] * dimension
    for index, marginal in cfg.marginal_overrides.items():
        if index >= dimension:
            raise ConfigError(
                f"space.{index + 1}",
                f"coordinate exceeds the model dimension {dimension}",
            )
        marginals[index] = marginal
    return InputSpace(tuple(marginals))


def validate_config(cfg: AnalysisConfig) -> None:
    if not cfg.analyses:
        raise ConfigError("analyses", "at least one analysis must be requested")
    for name in cfg.analyses:
        if name not in ANALYSES:
            raise ConfigError("analyses", f"unknown analysis '{name}' (known: {', '.join(ANALYSES)})")
    if cfg.sampler.n < 1:
        raise ConfigError("sampler.n", "a positive sample size is required")
    if cfg.sampler.skip < 1:
        raise ConfigError("sampler.skip", "the low-discrepancy skip must be >= 1")
    if not cfg.fd_delta > 0:
        raise ConfigError("fd.delta", "the finite-difference step must be positive")
    if not cfg.crossed_delta > 0:
        raise ConfigError("crossed.delta", "the second-difference step must be positive")
    if cfg.envelope is not None:
        lo, hi = cfg.envelope
        if lo < 0 or hi < lo:
            raise ConfigError(
                "bounds.derivative_min", "envelope must satisfy 0 <= min <= max"
            )
    if "morris" in cfg.analyses:
        if cfg.morris.r < 2:
            raise ConfigError("morris.r", "screening needs at least 2 trajectories")
        if cfg.morris.p < 2:
            raise ConfigError("morris.p", "the level grid needs p >= 2")
        if cfg.morris.delta_levels and not 1 <= cfg.morris.delta_levels <= cfg.morris.p - 1:
            raise ConfigError(
                "morris.delta_levels", f"must lie in [1, {cfg.morris.p - 1}]"
            )
    if cfg.oracle_order < 2:
        raise ConfigError("oracle.order", "quadrature order must be at least 2")

    # dimension-dependent checks need the model; do them here so every caller gets them
    dimension = model_dimension(cfg.model)
    if cfg.model.dimension is not None and cfg.model.dimension != dimension:
        raise ConfigError(
            "model.dimension",
            f"declared dimension {cfg.model.dimension} conflicts with the model's {dimension}",
        )
    for index in cfg.marginal_overrides:
        if index >= dimension:
            raise ConfigError(
                f"space.{index + 1}", f"coordinate exceeds the model dimension {dimension}"
            )
    for group in cfg.groups:
        for i in group:
            if i >= dimension:
                raise ConfigError("groups", f"input index {i + 1} exceeds dimension {dimension}")
    if cfg.pairs is not None:
        for i, j in cfg.pairs:
            if i == j:
                raise ConfigError("pairs", "a pair needs two distinct inputs")
            if j >= dimension:
                raise ConfigError("pairs", f"input index {j + 1} exceeds dimension {dimension}")
    if "oracle" in cfg.analyses and dimension > 4:
        raise ConfigError("analyses", "the oracle reference supports dimension <= 4")
