"""Per-round availability oracles used by the episode loop.

Two realizations are provided for every graph process:

* ``full`` materializes the whole graph G_t each round through the samplers
  in :mod:`fmab.graphs`.
* ``lazy`` draws only the pairs incident to the agent's current arm.  Pairs
  are independent, so the law of every availability set (jointly over the
  episode) is the same as under ``full``.  For the edge-Markov process each
  pair remembers the last round it was observed and is advanced in one jump
  with the closed-form ``t``-step transition
  ``P(present) = p_inf + (1 - alpha - beta)^k (x - p_inf)``.
"""

from __future__ import annotations

import numpy as np

from fmab.bandit import available_set
from fmab.graphs import (
    EdgeMarkovParams,
    ErHetParams,
    ErHomParams,
    Graph,
    pair_ids,
    sample_er_het,
    sample_er_hom,
    step_edge_markov,
)


class Environment:
    n: int

    def available(self, position: int, t: int) -> np.ndarray:
        """Advance to round ``t`` and return ``L_t(position)`` as sorted arm ids."""
        raise NotImplementedError

    def skip(self, rounds: int) -> None:
        """Advance the graph process ``rounds`` steps without an observer."""


class LazyErHom(Environment):
    def __init__(self, params: ErHomParams, rng: np.random.Generator):
        self.n, self.p, self.rng = params.n, params.p, rng

    def available(self, position, t):
        row = self.rng.random(self.n) < self.p
        row[position] = True
        return np.flatnonzero(row)


class LazyErHet(Environment):
    def __init__(self, params: ErHetParams, rng: np.random.Generator):
        self.n, self.p, self.rng = params.n, params.p_matrix, rng

    def available(self, position, t):
        row = self.rng.random(self.n) < self.p[position]
        row[position] = True
        return np.flatnonzero(row)


class LazyEdgeMarkov(Environment):
    def __init__(self, params: EdgeMarkovParams, rng: np.random.Generator):
        self.n = params.n
        self.rng = rng
        self.p_inf = params.stationary_density
        self.lam = 1.0 - params.alpha - params.beta
        self.state = params.initial_graph.pairs.astype(np.float64)
        self.seen_at = np.zeros(self.state.size, dtype=np.int64)
        self.offset = 0
        self._ids: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _incident(self, i: int):
        cached = self._ids.get(i)
        if cached is None:
            others = np.delete(np.arange(self.n), i)
            cached = (others, pair_ids(self.n, i, others))
            self._ids[i] = cached
        return cached

    def skip(self, rounds):
        self.offset += rounds

    def available(self, position, t):
        t = t + self.offset
        others, ids = self._incident(position)
        k = t - self.seen_at[ids]
        x = self.state[ids]
        prob = self.p_inf + np.power(self.lam, k) * (x - self.p_inf)
        present = self.rng.random(ids.size) < prob
        self.state[ids] = present
        self.seen_at[ids] = t
        return np.sort(np.append(others[present], position))


class FullGraphEnv(Environment):
    """Materializes G_t once per round; ``graphs`` keeps the history when asked to."""

    def __init__(self, process, rng: np.random.Generator, keep_history: bool = False):
        self.process = process
        self.rng = rng
        self.n = process.n
        self.graph: Graph | None = process.initial_graph if isinstance(process, EdgeMarkovParams) else None
        self.history: list[Graph] | None = [] if keep_history else None
        self.t = 0

    def _advance(self):
        proc = self.process
        if isinstance(proc, ErHomParams):
            self.graph = sample_er_hom(proc, self.rng)
        elif isinstance(proc, ErHetParams):
            self.graph = sample_er_het(proc, self.rng)
        else:
            self.graph = step_edge_markov(self.graph, proc, self.rng)
        self.t += 1
        if self.history is not None:
            self.history.append(self.graph)

    def skip(self, rounds):
        for _ in range(rounds):
            self._advance()
        if self.history is not None:
            self.history.clear()

    def available(self, position, t):
        self._advance()
        return available_set(self.graph, position).members


def make_environment(process, mode: str, rng: np.random.Generator, keep_history: bool = False) -> Environment:
    if mode == "full":
        return FullGraphEnv(process, rng, keep_history=keep_history)
    if mode != "lazy":
        raise ValueError(f"unknown graph mode {mode!r}")
    if isinstance(process, ErHomParams):
        return LazyErHom(process, rng)
    if isinstance(process, ErHetParams):
        return LazyErHet(process, rng)
    if isinstance(process, EdgeMarkovParams):
        return LazyEdgeMarkov(process, rng)
    raise TypeError(f"unsupported graph process {type(process).__name__}")
