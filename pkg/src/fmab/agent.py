"""Two-phase explore/navigate/commit learner and exploration-length sizing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from fmab.bandit import AvailabilitySet
from fmab.graphs import ceil_tol


class Phase(str, Enum):
    EXPLORE = "explore"
    NAVIGATE = "navigate"
    COMMIT = "commit"


_PHASE_ORDER = {Phase.EXPLORE: 0, Phase.NAVIGATE: 1, Phase.COMMIT: 2}


class NavigationMode(str, Enum):
    LAZY_WALK = "lazy_walk"
    GREEDY_FROZEN = "greedy_frozen"
    WAIT_AT_CURRENT = "wait_at_current"


@dataclass
class AgentState:
    position: int
    visits: np.ndarray
    reward_sums: np.ndarray
    phase: Phase = Phase.EXPLORE
    target: Optional[int] = None
    t: int = 0

    @classmethod
    def fresh(cls, n: int, position: int) -> "AgentState":
        return cls(position=position, visits=np.zeros(n, dtype=np.int64), reward_sums=np.zeros(n))

    @property
    def n(self) -> int:
        return self.visits.size

    def empirical_means(self) -> np.ndarray:
        out = np.zeros(self.n)
        seen = self.visits > 0
        out[seen] = self.reward_sums[seen] / self.visits[seen]
        return out

    def advance_phase(self, phase: Phase) -> None:
        if _PHASE_ORDER[phase] < _PHASE_ORDER[self.phase]:
            raise RuntimeError(f"phase cannot move from {self.phase.value} back to {phase.value}")
        self.phase = phase


@dataclass(frozen=True)
class PolicyConfig:
    t0: int
    navigation_mode: NavigationMode = NavigationMode.LAZY_WALK

    def __post_init__(self):
        if self.t0 < 1:
            raise ValueError(f"t0 must be >= 1, got {self.t0}")
        object.__setattr__(self, "navigation_mode", NavigationMode(self.navigation_mode))


@dataclass(frozen=True)
class SizingInputs:
    n: int
    T: int
    delta: float
    delta_min: float
    alpha: Optional[float] = None
    beta: Optional[float] = None
    constants: dict = field(default_factory=lambda: {"c0": 1.0, "c1": 1.0, "c2": 1.0, "c3": 1.0})

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.delta_min <= 1.0:
            raise ValueError(f"delta_min must lie in (0, 1], got {self.delta_min}")
        merged = {"c0": 1.0, "c1": 1.0, "c2": 1.0, "c3": 1.0}
        merged.update(self.constants)
        object.__setattr__(self, "constants", merged)


def explore_step(state: AgentState, avail: AvailabilitySet, rng: np.random.Generator) -> int:
    if state.phase is not Phase.EXPLORE:
        raise RuntimeError("explore_step called outside the exploration phase")
    return int(avail.members[rng.integers(avail.members.size)])


def update_trackers(state: AgentState, a: int, r: float) -> AgentState:
    """Record the pull of arm ``a`` with reward ``r``; mutates and returns ``state``."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {r}")
    state.visits[a] += 1
    state.reward_sums[a] += r
    state.position = a
    state.t += 1
    return state


def identify(state: AgentState) -> int:
    # np.argmax returns the first maximiser, i.e. lowest-index tie-break
    target = int(np.argmax(state.empirical_means()))
    state.target = target
    state.advance_phase(Phase.NAVIGATE)
    return target


def navigate_step(
    state: AgentState,
    avail: AvailabilitySet,
    mode: NavigationMode,
    rng: np.random.Generator,
    frozen_means: Optional[np.ndarray] = None,
) -> int:
    if state.phase is not Phase.NAVIGATE or state.target is None:
        raise RuntimeError("navigate_step needs an identified target in the navigation phase")
    members = avail.members
    if mode is NavigationMode.LAZY_WALK:
        a = int(members[rng.integers(members.size)])
    elif mode is NavigationMode.GREEDY_FROZEN:
        if frozen_means is None:
            raise ValueError("greedy navigation needs the frozen empirical means")
        a = int(members[np.argmax(frozen_means[members])])
    elif mode is NavigationMode.WAIT_AT_CURRENT:
        a = state.target if state.target in avail else avail.anchor
    else:
        raise ValueError(f"unknown navigation mode {mode!r}")
    if a == state.target:
        state.advance_phase(Phase.COMMIT)
    return a


def commit_step(state: AgentState) -> int:
    if state.phase is not Phase.COMMIT:
        raise RuntimeError("commit_step called before commitment")
    return int(state.target)


def _log_terms(inputs: SizingInputs) -> tuple[float, float]:
    n, T, d = inputs.n, inputs.T, inputs.delta
    return math.log(n * T / d), math.log(n / d)


def exploration_length_er(inputs: SizingInputs) -> int:
    c = inputs.constants
    l_mix, l_id = _log_terms(inputs)
    n = inputs.n
    return ceil_tol(c["c1"] * n * l_mix + c["c2"] * n * l_id / inputs.delta_min**2)


def exploration_length_markov(inputs: SizingInputs) -> tuple[int, int]:
    """Return ``(burn_in, t_exp)``; the total exploration length is their sum."""
    if inputs.alpha is None or inputs.beta is None:
        raise ValueError("edge-Markov sizing needs alpha and beta")
    l_mix, _ = _log_terms(inputs)
    burn = ceil_tol(inputs.constants["c0"] * l_mix / (inputs.alpha + inputs.beta))
    return burn, exploration_length_er(inputs)


def stickiness_check(n: int, alpha: float, beta: float, kappa: float = 1.0) -> bool:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return beta <= kappa / n
