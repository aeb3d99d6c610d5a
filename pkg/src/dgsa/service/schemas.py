"""Wire format of the analysis service.

The request models mirror :class:`~dgsa.config.AnalysisConfig`; the converters
below are the single source of truth for the mapping, shared by the server and
the thin CLI client.
"""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from ..config import (
    AnalysisConfig,
    ModelConfig,
    MorrisConfig,
    SamplerConfig,
    validate_config,
)
from ..distributions import (
    Exponential,
    Gumbel,
    InputDistribution,
    Normal,
    Truncated,
    Uniform,
    Weibull,
)
from ..errors import ConfigError


class MarginalSpec(BaseModel):
    """One input marginal: a kind plus its positional parameters.

    ``truncated`` uses ``params = [a, b]`` and carries the base marginal.
    """

    kind: Literal["uniform", "normal", "exponential", "gumbel", "weibull", "truncated"]
    params: List[float] = Field(default_factory=list)
    base: Optional["MarginalSpec"] = None


class ModelSpec(BaseModel):
    builtin: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    expression: Optional[str] = None
    dimension: Optional[int] = None
    gradient: Literal["fd", "analytic"] = "fd"


class SamplerSpec(BaseModel):
    kind: Literal["pseudo", "lowdiscrepancy"] = "lowdiscrepancy"
    seed: int = 0
    skip: int = 1
    n: int


class MorrisSpec(BaseModel):
    r: int = 10
    p: int = 4
    delta_levels: int = 0


class AnalyzeRequest(BaseModel):
    model: ModelSpec
    space: List[MarginalSpec] = Field(default_factory=list)
    default_marginal: Optional[MarginalSpec] = None
    sampler: SamplerSpec
    analyses: List[str]
    morris: MorrisSpec = Field(default_factory=MorrisSpec)
    fd_delta: float = 1e-5
    crossed_delta: float = 1e-4
    sobol_first_order: bool = True
    envelope: Optional[Tuple[float, float]] = None
    groups: List[List[int]] = Field(default_factory=list)  # 1-based input indices
    pairs: Optional[List[Tuple[int, int]]] = None  # 1-based input indices
    oracle_order: int = 32


class ConvergenceRequest(BaseModel):
    config: AnalyzeRequest
    n_list: List[int]


class ErrorInfo(BaseModel):
    kind: Literal["config", "degenerate"]
    key: Optional[str] = None
    message: str


class HealthResponse(BaseModel):
    status: str
    version: str


class PoincareResponse(BaseModel):
    spec: str
    kind: str
    constant: float


# Responses for /analyze and /convergence are the runner's report documents;
# they are returned verbatim (dict) so the JSON file a client writes matches
# the service payload byte for byte. Typed row models are provided for
# consumers that want validation.


class InputRow(BaseModel):
    input: str
    S: Optional[float] = None
    S_se: Optional[float] = None
    S_tot: Optional[float] = None
    S_tot_se: Optional[float] = None
    LB1: Optional[float] = None
    LB2: Optional[float] = None
    m_star: Optional[float] = None
    LB_star: Optional[float] = None
    UB1: Optional[float] = None
    UB2: Optional[float] = None
    UB_poincare: Optional[float] = None
    normal_LB: Optional[float] = None
    nu: Optional[float] = None
    nu_se: Optional[float] = None
    w: Optional[float] = None
    w_se: Optional[float] = None
    sigma_small: Optional[float] = None
    sigma_small_se: Optional[float] = None
    tau: Optional[float] = None
    tau_se: Optional[float] = None
    mu_star: Optional[float] = None
    mu_star_se: Optional[float] = None
    model_evals: Optional[int] = None

    model_config = {"extra": "allow"}


class ConvergenceRow(BaseModel):
    n: int
    input: str
    UB1: Optional[float] = None
    S_tot_ref: Optional[float] = None


def marginal_to_distribution(spec: MarginalSpec, key: str = "space") -> InputDistribution:
    try:
        if spec.kind == "uniform":
            return Uniform(*_nargs(spec, 2, key))
        if spec.kind == "normal":
            return Normal(*_nargs(spec, 2, key))
        if spec.kind == "exponential":
            return Exponential(*_nargs(spec, 1, key))
        if spec.kind == "gumbel":
            return Gumbel(*_nargs(spec, 2, key))
        if spec.kind == "weibull":
            return Weibull(*_nargs(spec, 2, key))
        if spec.kind == "truncated":
            if spec.base is None:
                raise ConfigError(key, "truncated marginal needs a base marginal")
            a, b = _nargs(spec, 2, key)
            return Truncated(marginal_to_distribution(spec.base, key), a, b)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    raise ConfigError(key, f"unknown marginal kind '{spec.kind}'")


def _nargs(spec: MarginalSpec, n: int, key: str) -> List[float]:
    if len(spec.params) != n:
        raise ConfigError(key, f"{spec.kind} takes {n} parameter(s), got {len(spec.params)}")
    return spec.params


def distribution_to_marginal(dist: InputDistribution) -> MarginalSpec:
    if isinstance(dist, Uniform):
        return MarginalSpec(kind="uniform", params=[dist.a, dist.b])
    if isinstance(dist, Normal):
        return MarginalSpec(kind="normal", params=[dist.mu, dist.sigma])
    if isinstance(dist, Exponential):
        return MarginalSpec(kind="exponential", params=[dist.lam])
    if isinstance(dist, Gumbel):
        return MarginalSpec(kind="gumbel", params=[dist.mu, dist.beta])
    if isinstance(dist, Weibull):
        return MarginalSpec(kind="weibull", params=[dist.k, dist.lam])
    if isinstance(dist, Truncated):
        return MarginalSpec(
            kind="truncated", params=[dist.a, dist.b], base=distribution_to_marginal(dist.base)
        )
    raise TypeError(f"unknown marginal type {type(dist)!r}")


def request_to_config(request: AnalyzeRequest) -> AnalysisConfig:
    cfg = AnalysisConfig(
        model=ModelConfig(
            builtin=request.model.builtin,
            params=dict(request.model.params),
            expression=request.model.expression,
            dimension=request.model.dimension,
            gradient=request.model.gradient,
        ),
        sampler=SamplerConfig(
            kind=request.sampler.kind,
            seed=request.sampler.seed,
            skip=request.sampler.skip,
            n=request.sampler.n,
        ),
        analyses=list(request.analyses),
        morris=MorrisConfig(
            r=request.morris.r, p=request.morris.p, delta_levels=request.morris.delta_levels
        ),
        fd_delta=request.fd_delta,
        crossed_delta=request.crossed_delta,
        sobol_first_order=request.sobol_first_order,
        envelope=request.envelope,
        groups=[[i - 1 for i in group] for group in request.groups],
        pairs=None
        if request.pairs is None
        else [(min(i, j) - 1, max(i, j) - 1) for i, j in request.pairs],
        oracle_order=request.oracle_order,
    )
    if request.default_marginal is not None:
        cfg.default_marginal = marginal_to_distribution(request.default_marginal, "default_marginal")
    for index, spec in enumerate(request.space):
        cfg.marginal_overrides[index] = marginal_to_distribution(spec, f"space.{index + 1}")
    for group in cfg.groups:
        if any(i < 0 for i in group):
            raise ConfigError("groups", "input indices are 1-based")
    if cfg.pairs is not None and any(i < 0 for i, _ in cfg.pairs):
        raise ConfigError("pairs", "input indices are 1-based")
    validate_config(cfg)
    return cfg


def config_to_request(cfg: AnalysisConfig) -> AnalyzeRequest:
    # resolve sparse overrides + default into the dense per-coordinate list
    from ..config import build_space, model_dimension

    dimension = model_dimension(cfg.model)
    space = build_space(cfg, dimension)
    return AnalyzeRequest(
        model=ModelSpec(
            builtin=cfg.model.builtin,
            params=dict(cfg.model.params),
            expression=cfg.model.expression,
            dimension=cfg.model.dimension,
            gradient=cfg.model.gradient,
        ),
        space=[distribution_to_marginal(m) for m in space.marginals],
        default_marginal=None,
        sampler=SamplerSpec(
            kind=cfg.sampler.kind, seed=cfg.sampler.seed, skip=cfg.sampler.skip, n=cfg.sampler.n
        ),
        analyses=list(cfg.analyses),
        morris=MorrisSpec(
            r=cfg.morris.r, p=cfg.morris.p, delta_levels=cfg.morris.delta_levels
        ),
        fd_delta=cfg.fd_delta,
        crossed_delta=cfg.crossed_delta,
        sobol_first_order=cfg.sobol_first_order,
        envelope=cfg.envelope,
        groups=[[i + 1 for i in group] for group in cfg.groups],
        pairs=None if cfg.pairs is None else [(i + 1, j + 1) for i, j in cfg.pairs],
        oracle_order=cfg.oracle_order,
    )
