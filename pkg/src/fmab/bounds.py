"""Closed-form lower bounds and profile quantities.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fmab.graphs import ErHetParams


@dataclass(frozen=True)
class GapProfile:
    gaps: tuple[float, ...]
    delta: float

    def __post_init__(self):
        gaps = tuple(float(g) for g in self.gaps)
        if not gaps:
            raise ValueError("need at least one suboptimal arm")
        if any(not 0.0 < g <= 1.0 for g in gaps):
            raise ValueError("gaps must lie in (0, 1]")
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta}")
        object.__setattr__(self, "gaps", gaps)

    @classmethod
    def equal(cls, n: int, gap: float, delta: float) -> "GapProfile":
        return cls(tuple([gap] * (n - 1)), delta)


def bern_kl(p: float, q: float) -> float:
    """Binary relative entropy ``kl(p, q)``; returns ``math.inf`` when undefined."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise ValueError(f"kl arguments must lie in [0, 1], got p={p}, q={q}")
    if p == q:
        return 0.0
    if q in (0.0, 1.0):
        return math.inf
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return max(out, 0.0)


def per_arm_lower_bound(gap: float, delta: float, exact: bool = True) -> float:
    """Lower bound on expected pulls of a suboptimal arm for a delta-correct policy.

    The exact form uses the two-point Bernoulli instance with means
    ``1/2 - gap`` and ``1/2 + gap``; the clean form is its ``3/32`` relaxation.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    num = bern_kl(1.0 - delta, delta)
    if exact:
        if not 0.0 < gap < 0.5:
            raise ValueError(f"exact form needs gap in (0, 1/2), got {gap}")
        denom = 2.0 * gap * math.log((1.0 + 2.0 * gap) / (1.0 - 2.0 * gap))
        return num / denom
    if not 0.0 < gap <= 0.25:
        raise ValueError(f"clean form is valid only for gap in (0, 1/4], got {gap}")
    return 3.0 / 32.0 * num / gap**2


def identification_time_lower_bound(profile: GapProfile) -> float:
    clean = all(g <= 0.25 for g in profile.gaps)
    return float(sum(per_arm_lower_bound(g, profile.delta, exact=not clean) for g in profile.gaps))


def traversal_lower_bound(n: int) -> int:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return n - 1


def effective_size(params: ErHetParams) -> float:
    d_star = params.expected_degrees
    if np.any(d_star <= 0):
        raise ValueError("some arm has zero expected degree; effective size is undefined")
    return float((d_star.sum() + params.n) / d_star.min())


def pi_eff(pi0: float, eps_max: float, gamma0: float) -> float:
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    if pi0 < 0 or eps_max < 0:
        raise ValueError("pi0 and eps_max must be nonnegative")
    return pi0 - 2.0 * eps_max / gamma0


def visitation_lower_bound(t_exp: int, pi_eff: float, gamma0: float, n: int, delta: float) -> float:
    """Worst-arm visit-count floor after ``t_exp`` exploration rounds (may be negative).

    With ``pi_eff = 1/n_eff`` this is also the heterogeneous every-step
    contraction floor; callers fold any extra bias term in themselves.
    """
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    lg = math.log(5.0 * n / delta)
    return t_exp * pi_eff - 2.0 / gamma0 - (math.sqrt(2.0 * t_exp * lg) + 2.0 / 3.0 * lg)


def cheeger_gap_lower_bound(n: int, p_inf: float, eta: float) -> float:
    """``(1-eta)^2 / (8 (1 + 1/(n p_inf)))`` for typical edge-Markov graphs."""
    return (1.0 - eta) ** 2 / (8.0 * (1.0 + 1.0 / (n * p_inf)))


def constant_gap(eta: float) -> float:
    """Constant-gap regime ``(1-eta)^2 / 16`` valid once ``n p_inf >= 1``."""
    return (1.0 - eta) ** 2 / 16.0


def profile_spectral_gap_bound(eta: float, phi_star: float, sigma_min: float, c: float = 1.0) -> float:
    """Heterogeneous gap floor ``c ((1-eta)/(1+eta))^2 phi*^2 / (1 + 1/((1-eta) sigma_min))^2``."""
    if not 0.0 < eta < 0.5:
        raise ValueError(f"eta must lie in (0, 1/2), got {eta}")
    if sigma_min <= 0:
        raise ValueError("sigma_min must be positive")
    ratio = ((1.0 - eta) / (1.0 + eta)) ** 2
    return c * ratio * phi_star**2 / (1.0 + 1.0 / ((1.0 - eta) * sigma_min)) ** 2


def hoeffding_samples(n: int, gap: float, delta: float) -> int:
    """Per-arm sample count ``ceil(2 log(2n/delta) / gap^2)`` that makes every mean gap/2-accurate."""
    return math.ceil(2.0 * math.log(2.0 * n / delta) / gap**2)


def geometric_wait_bound(p: float, delta: float) -> float:
    """Rounds after which a Geometric(p) wait has finished with probability ``1 - delta``."""
    return math.log(1.0 / delta) / p
