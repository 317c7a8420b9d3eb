"""Single-episode execution of the explore / navigate / commit learner."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from fmab.agent import (
    AgentState,
    NavigationMode,
    Phase,
    commit_step,
    explore_step,
    identify,
    navigate_step,
    update_trackers,
)
from fmab.bandit import AvailabilitySet, sample_reward
from fmab.harness.config import RunConfig
from fmab.harness.environment import Environment, make_environment
from fmab.harness.export import TRACE_COLUMNS, Table

PHASE_NAMES = ("explore", "navigate", "commit")


def run_streams(seed: int, run_index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (environment, agent) generators for run ``run_index`` of master seed ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(run_index,))
    env_ss, agent_ss = ss.spawn(2)
    return np.random.default_rng(env_ss), np.random.default_rng(agent_ss)


def checkpoint_grid(T: int, points: int = 100) -> np.ndarray:
    grid = np.unique(np.round(np.logspace(0, np.log10(T), points)).astype(np.int64))
    grid = grid[(grid >= 1) & (grid <= T)]
    return np.union1d(grid, [T])


@dataclass
class RunResult:
    run_index: int
    n: int
    horizon: int
    t0: int
    burn_in: int
    optimal_arm: int
    identified_arm: int
    identification_round: int
    nav_time: int
    nav_censored: bool
    commit_round: Optional[int]
    checkpoints: np.ndarray
    cum_pseudo_regret: np.ndarray
    visits: np.ndarray
    total_pseudo_regret: float
    total_realized_regret: float
    positions: Optional[np.ndarray] = field(default=None, repr=False)
    actions: Optional[np.ndarray] = field(default=None, repr=False)
    rewards: Optional[np.ndarray] = field(default=None, repr=False)
    phases: Optional[np.ndarray] = field(default=None, repr=False)
    gaps: Optional[np.ndarray] = field(default=None, repr=False)
    optimal_mean: float = 1.0

    @property
    def identified_correctly(self) -> bool:
        return self.identified_arm == self.optimal_arm

    @property
    def avg_regret(self) -> np.ndarray:
        return self.cum_pseudo_regret / self.checkpoints

    def summary(self) -> dict:
        return {
            "run_id": self.run_index,
            "n": self.n,
            "T": self.horizon,
            "t0": self.t0,
            "burn_in": self.burn_in,
            "optimal_arm": self.optimal_arm,
            "identified_arm": self.identified_arm,
            "identified_correctly": self.identified_correctly,
            "identification_round": self.identification_round,
            "nav_time": self.nav_time,
            "nav_censored": self.nav_censored,
            "total_pseudo_regret": float(self.total_pseudo_regret),
            "total_realized_regret": float(self.total_realized_regret),
        }

    def trace_table(self) -> Table:
        if self.actions is None:
            raise ValueError("run was executed without record_trace")
        pseudo = self.gaps[self.actions]
        cum = np.cumsum(pseudo)
        realized = self.optimal_mean - self.rewards
        tab = Table(TRACE_COLUMNS)
        for k in range(self.horizon):
            tab.append(
                self.run_index, k + 1, int(self.positions[k]), int(self.actions[k]),
                float(self.rewards[k]), float(pseudo[k]), float(cum[k]),
                float(realized[k]), PHASE_NAMES[self.phases[k]],
            )
        return tab


def resolve_start(config: RunConfig, rng: np.random.Generator) -> int:
    if config.start_arm is not None:
        return config.start_arm
    return int(rng.integers(config.n))


def build_environment(config: RunConfig, env_rng: np.random.Generator, keep_history: bool = False) -> Environment:
    gp = config.graph_process
    process = gp.params(env_rng) if config.is_markov else gp.params()
    return make_environment(process, config.graph_mode, env_rng, keep_history=keep_history)


def run_episode(config: RunConfig, run_index: int = 0, env: Optional[Environment] = None) -> RunResult:
    """Play one episode of ``config.horizon`` rounds.

    Round order is fixed: advance the graph, read the availability set at the
    previous arm, act, draw the reward, update trackers.
    """
    env_rng, rng = run_streams(config.seed, run_index)
    model = config.reward_model.build()
    t0, burn = config.resolve_t0()
    if env is None:
        env = build_environment(config, env_rng)
    if config.is_markov and config.burn_in_behavior == "skip":
        env.skip(burn)

    n, T = config.n, config.horizon
    mode = NavigationMode(config.policy.navigation_mode)
    state = AgentState.fresh(n, resolve_start(config, rng))
    positions = np.empty(T, dtype=np.int32)
    actions = np.empty(T, dtype=np.int32)
    rewards = np.empty(T)
    phases = np.empty(T, dtype=np.int8)
    frozen = None
    commit_round = None
    identification_round = T

    for t in range(1, T + 1):
        pos = state.position
        positions[t - 1] = pos
        if state.phase is Phase.COMMIT:
            phases[t - 1] = 2
            a = commit_step(state)
            if config.graph_mode == "full":
                env.available(pos, t)
        else:
            members = env.available(pos, t)
            if state.phase is Phase.EXPLORE:
                phases[t - 1] = 0
                a = explore_step(state, AvailabilitySet(pos, members), rng)
            else:
                phases[t - 1] = 1
                a = navigate_step(state, AvailabilitySet(pos, members), mode, rng, frozen)
                if state.phase is Phase.COMMIT:
                    commit_round = t
        r = sample_reward(model, a, rng)
        update_trackers(state, a, r)
        actions[t - 1] = a
        rewards[t - 1] = r
        if t == t0:
            identify(state)
            identification_round = t
            frozen = state.empirical_means()

    nav_censored = commit_round is None
    nav_time = (T - t0) if nav_censored else commit_round - t0

    pseudo = model.gaps[actions]
    cum = np.cumsum(pseudo)
    grid = checkpoint_grid(T, config.checkpoints)
    keep = config.record_trace
    return RunResult(
        run_index=run_index,
        n=n,
        horizon=T,
        t0=t0,
        burn_in=burn,
        optimal_arm=model.optimal_arm,
        identified_arm=int(state.target),
        identification_round=identification_round,
        nav_time=int(nav_time),
        nav_censored=nav_censored,
        commit_round=commit_round,
        checkpoints=grid,
        cum_pseudo_regret=cum[grid - 1],
        visits=state.visits.copy(),
        total_pseudo_regret=float(cum[-1]),
        total_realized_regret=float(T * model.means.max() - rewards.sum()),
        positions=positions if keep else None,
        actions=actions if keep else None,
        rewards=rewards if keep else None,
        phases=phases if keep else None,
        gaps=model.gaps if keep else None,
        optimal_mean=float(model.means.max()),
    )
