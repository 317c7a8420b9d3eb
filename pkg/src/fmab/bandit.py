"""Arms, reward models and regret accounting."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from fmab.graphs import Graph


class RewardKind(str, Enum):
    BERNOULLI = "bernoulli"
    UNIFORM = "uniform"


@dataclass(frozen=True, eq=False)
class RewardModel:
    means: np.ndarray
    kind: RewardKind = RewardKind.BERNOULLI
    halfwidth: float = 0.0

    def __post_init__(self):
        mu = np.array(self.means, dtype=float)
        if mu.ndim != 1 or mu.size < 2:
            raise ValueError("need at least two arm means")
        if np.any((mu < 0) | (mu > 1)):
            raise ValueError("arm means must lie in [0, 1]")
        top = mu.max()
        if np.count_nonzero(mu == top) > 1:
            raise ValueError(f"optimal arm is not unique (mean {top} is tied)")
        kind = RewardKind(self.kind)
        if kind is RewardKind.UNIFORM and not self.halfwidth > 0:
            raise ValueError("uniform rewards need a positive halfwidth")
        mu.setflags(write=False)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "kind", kind)
        gaps = top - mu
        gaps.setflags(write=False)
        object.__setattr__(self, "gaps", gaps)

    @property
    def n(self) -> int:
        return self.means.size

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.means))

    @property
    def delta_min(self) -> float:
        return float(np.min(np.delete(self.gaps, self.optimal_arm)))


@dataclass(frozen=True, eq=False)
class AvailabilitySet:
    anchor: int
    members: np.ndarray

    def __contains__(self, a: int) -> bool:
        return bool(np.any(self.members == a))

    def __len__(self) -> int:
        return self.members.size


def available_set(g: Graph, a_prev: int) -> AvailabilitySet:
    if not 0 <= a_prev < g.n:
        raise ValueError(f"arm {a_prev} out of range for n={g.n}")
    row = g.adjacency[a_prev].copy()
    row[a_prev] = True
    return AvailabilitySet(a_prev, np.flatnonzero(row))


def sample_reward(model: RewardModel, a: int, rng: np.random.Generator) -> float:
    mu = model.means[a]
    if model.kind is RewardKind.BERNOULLI:
        return 1.0 if rng.random() < mu else 0.0
    w = model.halfwidth
    return float(min(1.0, max(0.0, mu + w * (2.0 * rng.random() - 1.0))))


def regret_increment(model: RewardModel, a_t: int) -> float:
    return float(model.gaps[a_t])
