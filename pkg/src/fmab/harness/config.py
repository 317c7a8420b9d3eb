"""Run configuration: the JSON config-file schema and its resolution into core objects."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fmab.agent import NavigationMode, SizingInputs, exploration_length_er, exploration_length_markov
from fmab.bandit import RewardKind, RewardModel
from fmab.graphs import (
    EdgeMarkovParams,
    ErHetParams,
    ErHomParams,
    Graph,
    sample_er_hom,
    stationary_density,
)


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ErHomSpec(_Strict):
    kind: Literal["er_hom"] = "er_hom"
    n: int = Field(ge=2)
    p: float = Field(ge=0.0, le=1.0)

    def params(self) -> ErHomParams:
        return ErHomParams(self.n, self.p)


class ErHetSpec(_Strict):
    kind: Literal["er_het"] = "er_het"
    p_matrix: list[list[float]]

    @property
    def n(self) -> int:
        return len(self.p_matrix)

    @model_validator(mode="after")
    def _check(self):
        try:
            self.params()
        except ValueError as exc:
            raise ValueError(f"p_matrix: {exc}") from None
        return self

    def params(self) -> ErHetParams:
        return ErHetParams(len(self.p_matrix), np.asarray(self.p_matrix, dtype=float))


class InitialGraphSpec(_Strict):
    """How G_0 is produced. ``er`` with ``p=None`` draws from the stationary density."""

    kind: Literal["empty", "complete", "er", "edges"] = "er"
    p: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    edges: Optional[list[tuple[int, int]]] = None

    def build(self, n: int, p_inf: float, rng: np.random.Generator) -> Graph:
        if self.kind == "empty":
            return Graph.empty(n)
        if self.kind == "complete":
            return Graph.complete(n)
        if self.kind == "edges":
            return Graph.from_edges(n, self.edges or [])
        return sample_er_hom(ErHomParams(n, p_inf if self.p is None else self.p), rng)


class EdgeMarkovSpec(_Strict):
    kind: Literal["edge_markov"] = "edge_markov"
    n: int = Field(ge=2)
    alpha: float = Field(gt=0.0, lt=1.0)
    beta: float = Field(gt=0.0, lt=1.0)
    initial: InitialGraphSpec = InitialGraphSpec()

    @property
    def p_inf(self) -> float:
        return stationary_density(self.alpha, self.beta)

    def params(self, rng: np.random.Generator) -> EdgeMarkovParams:
        g0 = self.initial.build(self.n, self.p_inf, rng)
        return EdgeMarkovParams(self.n, self.alpha, self.beta, g0)


GraphProcessSpec = Annotated[Union[ErHomSpec, ErHetSpec, EdgeMarkovSpec], Field(discriminator="kind")]


class RewardSpec(_Strict):
    kind: RewardKind = RewardKind.BERNOULLI
    means: list[float]
    halfwidth: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check(self):
        try:
            self.build()
        except ValueError as exc:
            raise ValueError(f"reward model: {exc}") from None
        return self

    def build(self) -> RewardModel:
        return RewardModel(np.asarray(self.means, dtype=float), self.kind, self.halfwidth)


class SizingSpec(_Strict):
    """Exploration-length constants; the defaults of 1.0 are a convention, not derived values."""

    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    c0: float = Field(default=1.0, gt=0.0)
    c1: float = Field(default=1.0, ge=0.0)
    c2: float = Field(default=1.0, ge=0.0)
    c3: float = Field(default=1.0, ge=0.0)
    kappa: float = Field(default=1.0, gt=0.0)

    def constants(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "c3": self.c3}


class PolicySpec(_Strict):
    t0: Optional[int] = Field(default=None, ge=1)
    navigation_mode: NavigationMode = NavigationMode.LAZY_WALK
    sizing: SizingSpec = SizingSpec()


class RunConfig(_Strict):
    graph_process: GraphProcessSpec
    reward_model: RewardSpec
    horizon: int = Field(ge=1)
    policy: PolicySpec = PolicySpec()
    seed: int = Field(default=0, ge=0, lt=2**64)
    record_trace: bool = False
    burn_in_behavior: Literal["include", "skip"] = "include"
    graph_mode: Literal["lazy", "full"] = "lazy"
    start_arm: Optional[int] = Field(default=None, ge=0)
    checkpoints: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _check(self):
        n = self.n
        if len(self.reward_model.means) != n:
            raise ValueError(f"reward_model.means has {len(self.reward_model.means)} entries, graph has n={n}")
        if self.start_arm is not None and self.start_arm >= n:
            raise ValueError(f"start_arm {self.start_arm} out of range for n={n}")
        t0, _ = self.resolve_t0()
        if t0 > self.horizon:
            raise ValueError(f"exploration length t0={t0} exceeds horizon T={self.horizon}")
        return self

    @property
    def n(self) -> int:
        return self.graph_process.n

    @property
    def is_markov(self) -> bool:
        return isinstance(self.graph_process, EdgeMarkovSpec)

    def sizing_inputs(self) -> SizingInputs:
        s = self.policy.sizing
        gp = self.graph_process
        return SizingInputs(
            n=self.n,
            T=self.horizon,
            delta=s.delta,
            delta_min=self.reward_model.build().delta_min,
            alpha=getattr(gp, "alpha", None),
            beta=getattr(gp, "beta", None),
            constants=s.constants(),
        )

    def resolve_t0(self) -> tuple[int, int]:
        """Return ``(t0, burn_in)``.

        ``burn_in`` is already part of ``t0`` when burn-in rounds are included
        in the horizon; with ``skip`` the graph is advanced ``burn_in`` rounds
        before round 1 instead.
        """
        inputs = self.sizing_inputs()
        burn = exploration_length_markov(inputs)[0] if self.is_markov else 0
        if self.policy.t0 is not None:
            return self.policy.t0, burn
        t_exp = exploration_length_er(inputs)
        if self.is_markov and self.burn_in_behavior == "include":
            return burn + t_exp, burn
        return t_exp, burn

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def parse_config(data: dict, source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{source}: field '{loc}': {err['msg']}")
        raise ConfigError("\n".join(lines)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return parse_config(data, str(path))
