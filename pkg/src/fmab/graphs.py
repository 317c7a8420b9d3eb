"""Per-round availability graphs and the processes that generate them.

A graph over ``n`` arms is stored as a boolean vector with one entry per
unordered pair ``{i, j}`` (``i < j``), in ``numpy.triu_indices`` order.  Every
pair is therefore stored exactly once and self-loops cannot be represented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np


@lru_cache(maxsize=64)
def pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column arrays of the ``n(n-1)/2`` unordered pairs, ``i < j``."""
    iu, ju = np.triu_indices(n, k=1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def pair_ids(n: int, i: int, others: np.ndarray) -> np.ndarray:
    """Flat pair ids of ``{i, j}`` for each ``j`` in ``others`` (``j != i``)."""
    lo = np.minimum(i, others)
    hi = np.maximum(i, others)
    return lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)


class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``."""

    def __init__(self, n: int, pairs: np.ndarray):
        if n < 1:
            raise ValueError(f"node count must be positive, got {n}")
        pairs = np.asarray(pairs, dtype=bool)
        m = n * (n - 1) // 2
        if pairs.shape != (m,):
            raise ValueError(f"expected {m} pair flags for n={n}, got shape {pairs.shape}")
        pairs = pairs.copy()
        pairs.setflags(write=False)
        self.n = n
        self.pairs = pairs

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, np.zeros(n * (n - 1) // 2, dtype=bool))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, np.ones(n * (n - 1) // 2, dtype=bool))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        pairs = np.zeros(n * (n - 1) // 2, dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            pairs[pair_ids(n, i, np.array([j]))[0]] = True
        return cls(n, pairs)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if adj.diagonal().any():
            raise ValueError("adjacency has self-loops")
        n = adj.shape[0]
        iu, ju = pair_index(n)
        return cls(n, adj[iu, ju])

    @cached_property
    def adjacency(self) -> np.ndarray:
        iu, ju = pair_index(self.n)
        adj = np.zeros((self.n, self.n), dtype=bool)
        adj[iu, ju] = self.pairs
        adj |= adj.T
        adj.setflags(write=False)
        return adj

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = self.adjacency.sum(axis=1)
        deg.setflags(write=False)
        return deg

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(self.pairs))

    @property
    def edges(self) -> set[tuple[int, int]]:
        iu, ju = pair_index(self.n)
        mask = self.pairs
        return set(zip(iu[mask].tolist(), ju[mask].tolist()))

    @property
    def normalization(self) -> int:
        """``Z = 2|E| + n``, the lazy-walk normalizer."""
        return 2 * self.num_edges + self.n

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.pairs, other.pairs)

    def __hash__(self) -> int:
        return hash((self.n, self.pairs.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


@dataclass(frozen=True)
class ErHomParams:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True, eq=False)
class ErHetParams:
    n: int
    p_matrix: np.ndarray

    def __post_init__(self):
        p = np.array(self.p_matrix, dtype=float)
        if p.shape != (self.n, self.n):
            raise ValueError(f"p_matrix must be {self.n}x{self.n}, got {p.shape}")
        if not np.allclose(p, p.T, atol=0.0, rtol=0.0):
            raise ValueError("p_matrix must be symmetric")
        if np.any(np.diag(p) != 0):
            raise ValueError("p_matrix must have a zero diagonal")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("p_matrix entries must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p_matrix", p)

    @classmethod
    def homogeneous(cls, n: int, p: float) -> "ErHetParams":
        mat = np.full((n, n), float(p))
        np.fill_diagonal(mat, 0.0)
        return cls(n, mat)

    @property
    def expected_degrees(self) -> np.ndarray:
        return self.p_matrix.sum(axis=1)

    @property
    def sigma_min(self) -> float:
        return float(self.expected_degrees.min())

    @property
    def sigma_max(self) -> float:
        return float(self.expected_degrees.max())


@dataclass(frozen=True)
class EdgeMarkovParams:
    """Two-state edge chain: absent pairs appear w.p. ``alpha``, present ones vanish w.p. ``beta``.

    ``strict=False`` admits the boundary values 0 and 1, which are only
    useful for deterministic checks of the stepping rule.
    """

    n: int
    alpha: float
    beta: float
    initial_graph: Graph
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        lo_ok = (lambda x: 0.0 < x < 1.0) if self.strict else (lambda x: 0.0 <= x <= 1.0)
        if not lo_ok(self.alpha):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not lo_ok(self.beta):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.initial_graph.n != self.n:
            raise ValueError(
                f"initial graph has n={self.initial_graph.n}, expected {self.n}"
            )

    @property
    def stationary_density(self) -> float:
        return stationary_density(self.alpha, self.beta)


@dataclass(frozen=True, eq=False)
class TypicalityReport:
    degree_ok: np.ndarray
    edge_count_ok: bool
    min_stationary_mass: float
    normalization: float
    tolerance_eta: float

    @property
    def all_ok(self) -> bool:
        return bool(self.degree_ok.all()) and self.edge_count_ok


def sample_er_hom(params: ErHomParams, rng: np.random.Generator) -> Graph:
    m = params.n * (params.n - 1) // 2
    return Graph(params.n, rng.random(m) < params.p)


def sample_er_het(params: ErHetParams, rng: np.random.Generator) -> Graph:
    iu, ju = pair_index(params.n)
    probs = params.p_matrix[iu, ju]
    return Graph(params.n, rng.random(probs.size) < probs)


def step_edge_markov(g_prev: Graph, params: EdgeMarkovParams, rng: np.random.Generator) -> Graph:
    if g_prev.n != params.n:
        raise ValueError(f"graph has n={g_prev.n}, params expect {params.n}")
    u = rng.random(g_prev.pairs.size)
    # one uniform per pair: present pairs survive unless u < beta, absent ones appear if u < alpha
    nxt = np.where(g_prev.pairs, u >= params.beta, u < params.alpha)
    return Graph(params.n, nxt)


def edge_flip_count(g_a: Graph, g_b: Graph) -> int:
    if g_a.n != g_b.n:
        raise ValueError(f"node counts differ: {g_a.n} vs {g_b.n}")
    return int(np.count_nonzero(g_a.pairs ^ g_b.pairs))


def expected_flips_stationary(n: int, alpha: float, beta: float) -> float:
    if alpha + beta == 0:
        return 0.0
    return math.comb(n, 2) * 2.0 * alpha * beta / (alpha + beta)


def stationary_density(alpha: float, beta: float) -> float:
    if alpha + beta <= 0:
        raise ValueError("alpha + beta must be positive")
    return alpha / (alpha + beta)


def marginal_edge_prob(p0: float, alpha: float, beta: float, t: int) -> float:
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    p_inf = stationary_density(alpha, beta)
    return p_inf + (1.0 - alpha - beta) ** t * (p0 - p_inf)


def ceil_tol(x: float, tol: float = 1e-9) -> int:
    """Ceiling that ignores floating-point dust just above an integer."""
    r = round(x)
    if abs(x - r) <= tol * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def burn_in_length(n: int, alpha: float, beta: float, delta: float) -> int:
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if alpha + beta <= 0:
        raise ValueError("alpha + beta must be positive")
    return ceil_tol((2.0 * math.log(n) + math.log(1.0 / delta)) / (alpha + beta))


def typicality_check(
    g: Graph,
    p_inf: float,
    eta: float,
    log_term: float,
    c1: float = 1.0,
    c2: float = 1.0,
) -> TypicalityReport:
    """Evaluate the degree, edge-count and stationary-mass typicality conditions on ``g``.

    ``log_term`` is ``log(nT/delta)`` as computed by the caller.
    """
    if not 0.0 < eta < 0.5:
        raise ValueError(f"eta must lie in (0, 1/2), got {eta}")
    n = g.n
    deg = g.degrees
    deg_tol = c1 * math.sqrt(n * p_inf * log_term)
    degree_ok = np.abs(deg - (n - 1) * p_inf) <= deg_tol
    edge_tol = c2 * n * math.sqrt(p_inf * log_term)
    edge_ok = abs(g.num_edges - 0.5 * n * (n - 1) * p_inf) <= edge_tol
    z = g.normalization
    return TypicalityReport(
        degree_ok=degree_ok,
        edge_count_ok=bool(edge_ok),
        min_stationary_mass=float((deg.min() + 1) / z),
        normalization=float(z),
        tolerance_eta=eta,
    )


def flip_envelope(zeta: float, n: int, log_term: float, c: float = 1.0, c_prime: float = 1.0) -> float:
    # zeta is the per-edge normalised rate E[F_t] / n^2
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    n2 = float(n) ** 2
    return zeta + c * math.sqrt(zeta * log_term / n2) + c_prime * log_term / n2
