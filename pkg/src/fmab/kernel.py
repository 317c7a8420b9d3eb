"""Lazy-walk kernels on realized graphs and their spectral diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fmab.graphs import ErHetParams, Graph

ROW_SUM_TOL = 1e-12
BALANCE_TOL = 1e-8
MAX_ENUM_N = 24


class CapabilityError(RuntimeError):
    """Requested computation exceeds what the exact method supports."""


@dataclass(frozen=True, eq=False)
class Kernel:
    n: int
    rows: np.ndarray

    def __post_init__(self):
        w = np.array(self.rows, dtype=float)
        if w.shape != (self.n, self.n):
            raise ValueError(f"kernel must be {self.n}x{self.n}, got {w.shape}")
        if np.any(w < 0):
            raise ValueError("kernel has negative entries")
        err = np.max(np.abs(w.sum(axis=1) - 1.0))
        if err > ROW_SUM_TOL:
            raise ValueError(f"kernel rows do not sum to 1 (max error {err:.3e})")
        w.setflags(write=False)
        object.__setattr__(self, "rows", w)


@dataclass(frozen=True, eq=False)
class Distribution:
    n: int
    mass: np.ndarray

    def __post_init__(self):
        v = np.array(self.mass, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"distribution must have length {self.n}, got {v.shape}")
        if np.any(v < 0):
            raise ValueError("distribution has negative mass")
        if abs(v.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError(f"distribution sums to {v.sum()!r}, not 1")
        v.setflags(write=False)
        object.__setattr__(self, "mass", v)

    @classmethod
    def point(cls, n: int, i: int) -> "Distribution":
        v = np.zeros(n)
        v[i] = 1.0
        return cls(n, v)

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(n, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class DriftMetrics:
    kernel_drift: float
    stationary_drift: float
    spectral_gap_prev: float
    spectral_gap_next: float


def lazy_kernel(g: Graph) -> Kernel:
    w = g.adjacency.astype(float)
    np.fill_diagonal(w, 1.0)
    w /= (g.degrees + 1.0)[:, None]
    return Kernel(g.n, w)


def stationary_law(g: Graph) -> Distribution:
    return Distribution(g.n, (g.degrees + 1.0) / g.normalization)


def detailed_balance_residual(k: Kernel, pi: Distribution) -> float:
    flow = pi.mass[:, None] * k.rows
    return float(np.max(np.abs(flow - flow.T)))


def _check_same_n(a, b):
    if a.n != b.n:
        raise ValueError(f"node counts differ: {a.n} vs {b.n}")


def spectrum(k: Kernel, pi: Distribution) -> np.ndarray:
    """Eigenvalues of ``k`` in descending order, via the pi-symmetrized matrix."""
    _check_same_n(k, pi)
    resid = detailed_balance_residual(k, pi)
    if resid > BALANCE_TOL:
        raise ValueError(f"kernel is not reversible w.r.t. pi (residual {resid:.3e})")
    s = np.sqrt(pi.mass)
    sym = s[:, None] * k.rows / s[None, :]
    sym = 0.5 * (sym + sym.T)
    return np.linalg.eigvalsh(sym)[::-1]


def spectral_gap(k: Kernel, pi: Distribution) -> float:
    """``1 - lambda_2``; zero for reducible chains."""
    if k.n == 1:
        return 1.0
    ev = spectrum(k, pi)
    return float(min(2.0, max(0.0, 1.0 - ev[1])))


def smallest_eigenvalue(k: Kernel, pi: Distribution) -> float:
    return float(spectrum(k, pi)[-1])


def hom_expected_kernel(n: int, p: float) -> Kernel:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    q_n = (1.0 - p) ** n
    diag = (1.0 - q_n) / (n * p)
    off = (n * p - 1.0 + q_n) / (n * p * (n - 1))
    w = np.full((n, n), off)
    np.fill_diagonal(w, diag)
    return Kernel(n, w)


def hom_lambda2(n: int, p: float) -> float:
    if n < 2 or not 0.0 < p <= 1.0:
        raise ValueError(f"need n >= 2 and p in (0, 1], got n={n}, p={p}")
    return (1.0 - (1.0 - p) ** n - p) / (p * (n - 1))


def minorization_constant(n: int, p: float) -> float:
    if n < 2 or not 0.0 < p <= 1.0:
        raise ValueError(f"need n >= 2 and p in (0, 1], got n={n}, p={p}")
    return (n * p - 1.0 + (1.0 - p) ** n) / (p * (n - 1))


def kernel_drift(k_prev: Kernel, k_next: Kernel) -> float:
    """Frobenius norm of ``k_next - k_prev``.

    This upper-bounds the spectral norm; use :func:`kernel_drift_operator`
    for the exact operator norm.
    """
    _check_same_n(k_prev, k_next)
    return float(np.linalg.norm(k_next.rows - k_prev.rows, ord="fro"))


def kernel_drift_operator(k_prev: Kernel, k_next: Kernel) -> float:
    _check_same_n(k_prev, k_next)
    if k_prev.n > 500:
        raise CapabilityError("exact operator norm limited to n <= 500")
    return float(np.linalg.norm(k_next.rows - k_prev.rows, ord=2))


def tv_distance(a: Distribution, b: Distribution) -> float:
    _check_same_n(a, b)
    return float(min(1.0, 0.5 * np.abs(a.mass - b.mass).sum()))


def propagate_law(nu: Distribution, k: Kernel) -> Distribution:
    _check_same_n(nu, k)
    out = nu.mass @ k.rows
    out = np.clip(out, 0.0, None)
    return Distribution(nu.n, out / out.sum())


def drift_metrics(g_prev: Graph, g_next: Graph) -> DriftMetrics:
    k0, k1 = lazy_kernel(g_prev), lazy_kernel(g_next)
    pi0, pi1 = stationary_law(g_prev), stationary_law(g_next)
    return DriftMetrics(
        kernel_drift=kernel_drift(k0, k1),
        stationary_drift=tv_distance(pi0, pi1),
        spectral_gap_prev=spectral_gap(k0, pi0),
        spectral_gap_next=spectral_gap(k1, pi1),
    )


def _subset_bits(n: int, chunk: int = 1 << 15):
    """Yield boolean membership matrices for every nonempty proper subset mask."""
    total = 1 << n
    shifts = np.arange(n, dtype=np.int64)
    for start in range(1, total - 1, chunk):
        masks = np.arange(start, min(start + chunk, total - 1), dtype=np.int64)
        yield (masks[:, None] >> shifts) & 1


def cheeger_conductance(g: Graph) -> float:
    """Exact chain conductance ``min |dS| / sum_{i in S}(d(i)+1)`` over ``pi(S) <= 1/2``."""
    n = g.n
    if n > MAX_ENUM_N:
        raise CapabilityError(f"exact conductance enumerates 2^n subsets; n={n} exceeds {MAX_ENUM_N}")
    if n < 2:
        return 0.0
    adj = g.adjacency.astype(np.float64)
    weight = g.degrees.astype(np.float64) + 1.0
    deg = g.degrees.astype(np.float64)
    half = 0.5 * g.normalization
    best = np.inf
    for bits in _subset_bits(n):
        b = bits.astype(np.float64)
        vol = b @ weight
        ok = vol <= half + 1e-12
        if not ok.any():
            continue
        b = b[ok]
        internal = np.einsum("ij,ij->i", b @ adj, b)
        boundary = b @ deg - internal
        best = min(best, float(np.min(boundary / vol[ok])))
    return float(best)


def population_conductance(params: ErHetParams) -> float:
    """Exact ``min Phi_P(S) / Vol_P(S)`` over ``0 < Vol_P(S) <= Vol_P(A)/2``."""
    n = params.n
    if n > MAX_ENUM_N:
        raise CapabilityError(f"exact conductance enumerates 2^n subsets; n={n} exceeds {MAX_ENUM_N}")
    p = params.p_matrix
    d_star = params.expected_degrees
    half = 0.5 * d_star.sum()
    best = np.inf
    for bits in _subset_bits(n):
        b = bits.astype(np.float64)
        vol = b @ d_star
        ok = (vol > 0) & (vol <= half * (1 + 1e-12))
        if not ok.any():
            continue
        b = b[ok]
        internal = np.einsum("ij,ij->i", b @ p, b)
        cut = vol[ok] - internal
        best = min(best, float(np.min(cut / vol[ok])))
    if not np.isfinite(best):
        raise ValueError("no subset with positive population volume")
    return float(max(0.0, best))
