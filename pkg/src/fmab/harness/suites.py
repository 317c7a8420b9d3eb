"""Experiment suites: regret curves, navigation sweeps, the disaster preset and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from fmab.agent import AgentState, NavigationMode, Phase, navigate_step, stickiness_check
from fmab.bandit import AvailabilitySet
from fmab.graphs import EdgeMarkovParams, ErHomParams, Graph, step_edge_markov
from fmab.harness.config import RunConfig, parse_config
from fmab.harness.environment import LazyErHom
from fmab.harness.episode import RunResult
from fmab.harness.export import NAV_SWEEP_COLUMNS, Table
from fmab.harness.montecarlo import run_batch, run_monte_carlo
from fmab.kernel import (
    CapabilityError,
    Distribution,
    kernel_drift,
    lazy_kernel,
    propagate_law,
    spectral_gap,
    stationary_law,
    tv_distance,
)

# Exploration constants fitted by `calibrate_c2` on the identification benchmark
# (n=20, equal gaps 0.2, ER p=0.5, delta=0.1); see README for the procedure.
CALIBRATED = {"c0": 0.1, "c1": 0.1, "c2": 0.6, "c3": 1.0}
DEFAULT_DELTA = 0.1


def hotspot_means(n: int, rng: np.random.Generator, best: float = 0.95, low: tuple[float, float] = (0.05, 0.35)) -> list[float]:
    """One hotspot arm at a random index, all others uniform on ``low``."""
    means = rng.uniform(*low, size=n)
    means[rng.integers(n)] = best
    return means.tolist()


def equal_gap_means(n: int, gap: float, top: float = 0.5) -> list[float]:
    """Arm 0 at ``top``, every other arm at ``top - gap``."""
    return [top] + [top - gap] * (n - 1)


def markov_rates(density: float, n: int, kappa: float = 1.0) -> tuple[float, float]:
    """``(alpha, beta)`` with stationary density ``density`` and ``beta = kappa / n``."""
    beta = kappa / n
    alpha = density * beta / (1.0 - density)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"density {density} with beta={beta} gives alpha={alpha} outside (0, 1)")
    return alpha, beta


def _sizing(constants: dict, delta: float) -> dict:
    return {"delta": delta, **{k: float(v) for k, v in constants.items() if k in ("c0", "c1", "c2", "c3")}}


def process_spec(model: str, n: int, p: float, kappa: float = 1.0) -> dict:
    if model == "er_hom":
        return {"kind": "er_hom", "n": n, "p": p}
    if model == "edge_markov":
        alpha, beta = markov_rates(p, n, kappa)
        return {"kind": "edge_markov", "n": n, "alpha": alpha, "beta": beta, "initial": {"kind": "er"}}
    raise ValueError(f"unknown graph model {model!r}")


# ---------------------------------------------------------------- regret curves

def regret_suite_config(
    model: str,
    n: int,
    p: float = 0.5,
    T: int = 10_000,
    seed: int = 0,
    constants: Optional[dict] = None,
    delta: float = DEFAULT_DELTA,
) -> RunConfig:
    means = hotspot_means(n, np.random.default_rng([seed, n]))
    return parse_config({
        "graph_process": process_spec(model, n, p),
        "reward_model": {"kind": "bernoulli", "means": means},
        "horizon": T,
        "policy": {"sizing": _sizing(constants or CALIBRATED, delta)},
        "seed": seed,
    })


def regret_curve_suite(
    n_list: Sequence[int] = (10, 50, 100),
    p: float = 0.5,
    T: int = 10_000,
    runs: int = 50,
    models: Sequence[str] = ("er_hom", "edge_markov"),
    seed: int = 0,
    constants: Optional[dict] = None,
    jobs: Optional[int] = None,
) -> Table:
    """Aggregate ``R(t)`` and ``R(t)/t`` series, one pair of series per (model, n)."""
    tab = None
    for model in models:
        for n in n_list:
            cfg = regret_suite_config(model, n, p, T, seed, constants)
            agg = run_monte_carlo(cfg, runs, jobs).aggregate(series_prefix=f"{model}/n={n}/")
            if tab is None:
                tab = agg
            else:
                tab.rows.extend(agg.rows)
    return tab


def nonincreasing_within(values: Sequence[float], band: float) -> bool:
    """True if no value exceeds any earlier value by more than ``band``."""
    running_min = np.inf
    for v in values:
        if v > running_min + band:
            return False
        running_min = min(running_min, v)
    return True


# ------------------------------------------------------------------- navigation

def navigation_config(
    n: int, p: float, t0: int = 5000, extra: int = 5000,
    mode: NavigationMode = NavigationMode.LAZY_WALK, seed: int = 0,
) -> RunConfig:
    means = hotspot_means(n, np.random.default_rng([seed, n]), best=0.9, low=(0.1, 0.6))
    return parse_config({
        "graph_process": {"kind": "er_hom", "n": n, "p": p},
        "reward_model": {"means": means},
        "horizon": t0 + extra,
        "policy": {"t0": t0, "navigation_mode": mode.value},
        "seed": seed,
    })


def navigation_sweep(
    p_list: Iterable[float] = (0.01, 0.1, 0.4, 0.8),
    n: int = 30,
    runs: int = 200,
    t0: int = 5000,
    extra: int = 5000,
    mode: NavigationMode = NavigationMode.LAZY_WALK,
    seed: int = 0,
    jobs: Optional[int] = None,
) -> Table:
    """Distribution of the Phase II hitting time of the identified arm, per edge probability."""
    tab = Table(NAV_SWEEP_COLUMNS)
    for p in p_list:
        cfg = navigation_config(n, p, t0, extra, NavigationMode(mode), seed)
        mc = run_monte_carlo(cfg, runs, jobs)
        nav = mc.nav_times
        q25, med, q75 = np.quantile(nav, [0.25, 0.5, 0.75])
        tab.append(float(p), n, runs, int(nav.min()), float(q25), float(med), float(q75), int(nav.max()), mc.censored_count)
    return tab


def navigation_trials(
    p: float, n: int, trials: int, mode: NavigationMode = NavigationMode.WAIT_AT_CURRENT,
    seed: int = 0, cap: int = 100_000,
) -> np.ndarray:
    """Phase II hitting times of arm 0 from arm 1 under i.i.d. ER availability.

    Trials that do not reach the target within ``cap`` rounds report ``cap``.
    """
    out = np.empty(trials, dtype=np.int64)
    mode = NavigationMode(mode)
    frozen = np.linspace(1.0, 0.0, n)  # arm 0 ranks first for greedy navigation
    for k in range(trials):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(k,))
        env_ss, agent_ss = ss.spawn(2)
        env = LazyErHom(ErHomParams(n, p), np.random.default_rng(env_ss))
        rng = np.random.default_rng(agent_ss)
        state = AgentState.fresh(n, 1)
        state.target = 0
        state.phase = Phase.NAVIGATE
        t = 0
        while state.phase is Phase.NAVIGATE and t < cap:
            t += 1
            members = env.available(state.position, t)
            state.position = navigate_step(state, AvailabilitySet(state.position, members), mode, rng, frozen)
        out[k] = t
    return out


# ---------------------------------------------------------------- identification

def identification_config(
    n: int = 20, gap: float = 0.2, p: float = 0.5, T: int = 10_000,
    constants: Optional[dict] = None, delta: float = DEFAULT_DELTA, seed: int = 0, top: float = 0.5,
) -> RunConfig:
    return parse_config({
        "graph_process": {"kind": "er_hom", "n": n, "p": p},
        "reward_model": {"means": equal_gap_means(n, gap, top)},
        "horizon": T,
        "policy": {"sizing": _sizing(constants or CALIBRATED, delta)},
        "seed": seed,
    })


def identification_run_config(config: RunConfig) -> RunConfig:
    """Same configuration truncated to stop right after identification."""
    t0, _ = config.resolve_t0()
    return config.model_copy(update={"horizon": t0, "policy": config.policy.model_copy(update={"t0": t0})})


def misidentification_rate(config: RunConfig, runs: int, jobs: Optional[int] = None) -> float:
    results = run_batch(identification_run_config(config), runs, jobs)
    return sum(not r.identified_correctly for r in results) / runs


def calibrate_c2(
    make_config,
    delta: float = DEFAULT_DELTA,
    runs: int = 200,
    grid: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.5, 2.0),
    jobs: Optional[int] = None,
) -> tuple[float, Table]:
    """Smallest ``c2`` on ``grid`` whose empirical misidentification rate is at most ``delta``.

    ``make_config(c2)`` must return the run configuration to evaluate.
    """
    tab = Table(("c2", "t0", "misidentification_rate", "runs"))
    for c2 in grid:
        cfg = make_config(c2)
        rate = misidentification_rate(cfg, runs, jobs)
        tab.append(float(c2), cfg.resolve_t0()[0], rate, runs)
        if rate <= delta:
            return float(c2), tab
    raise RuntimeError(f"no c2 on the grid reached a misidentification rate <= {delta}")


# ---------------------------------------------------------------- disaster preset

@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    config: RunConfig
    description: str

    @property
    def content_hash(self) -> str:
        return self.config.content_hash()


DISASTER_N = 500
DISASTER_T = 80_640


def disaster_preset(
    density: float = 0.1, kappa: float = 1.0, seed: int = 2025,
    constants: Optional[dict] = None, delta: float = DEFAULT_DELTA,
) -> ScenarioPreset:
    rng = np.random.default_rng(seed)
    n = DISASTER_N
    means = np.empty(n)
    means[0] = 0.95
    means[1:11] = rng.uniform(0.45, 0.65, size=10)
    means[11:] = rng.uniform(0.1, 0.4, size=n - 11)
    perm = rng.permutation(n)
    alpha, beta = markov_rates(density, n, kappa)
    if not stickiness_check(n, alpha, beta, kappa):
        raise ValueError(f"beta={beta} violates the stickiness condition beta <= {kappa}/{n}")
    cfg = parse_config({
        "graph_process": {
            "kind": "edge_markov", "n": n, "alpha": alpha, "beta": beta,
            "initial": {"kind": "er", "p": 0.05},
        },
        "reward_model": {"kind": "bernoulli", "means": means[np.argsort(perm)].tolist()},
        "horizon": DISASTER_T,
        "policy": {"sizing": {**_sizing(constants or CALIBRATED, delta), "kappa": kappa}},
        "seed": seed,
        "record_trace": True,
        "checkpoints": 100,
    })
    desc = (
        f"n={n} sites, hotspot 0.95, 10 moderate sites in [0.45,0.65], {n - 11} low sites in [0.1,0.4]; "
        f"edge-Markov with stationary density {density}, alpha={alpha:.6g}, beta={beta:.6g}; T={DISASTER_T}"
    )
    return ScenarioPreset("disaster", cfg, desc)


def phase_windows(T: int, t0: int, early: int = 500) -> list[tuple[int, int]]:
    """Early exploration, late exploration and exploitation windows (inclusive bounds)."""
    early = min(early, t0)
    wins = [(1, early)]
    if t0 > early:
        wins.append((early + 1, t0))
    if T > t0:
        wins.append((t0 + 1, T))
    return wins


def visitation_histogram_suite(
    config: RunConfig, windows: Sequence[tuple[int, int]], runs: int = 1, jobs: Optional[int] = None,
    results: Optional[list[RunResult]] = None,
) -> Table:
    """Per-window, per-arm visit counts (one block of rows per run)."""
    if not config.record_trace:
        raise ValueError("visitation histograms need record_trace enabled")
    results = results if results is not None else run_batch(config, runs, jobs)
    tab = Table(("run_id", "window", "start", "end", "arm", "visits"))
    for r in results:
        for w, (lo, hi) in enumerate(windows):
            counts = np.bincount(r.actions[lo - 1:hi], minlength=r.n)
            for arm in range(r.n):
                tab.append(r.run_index, w, lo, hi, arm, int(counts[arm]))
    return tab


def window_counts(tab: Table, window: int, run_id: Optional[int] = None) -> np.ndarray:
    sel = tab.where(window=window) if run_id is None else tab.where(window=window, run_id=run_id)
    arms = np.array(sel.column("arm"))
    visits = np.array(sel.column("visits"))
    return np.bincount(arms, weights=visits, minlength=arms.max() + 1)


# ------------------------------------------------------------------- TV diagnostics

TV_COLUMNS = ("t", "gamma", "eps", "kappa", "d", "d_next", "slack")


def tv_diag_from_graphs(graphs: Sequence[Graph], start: Optional[Distribution] = None) -> Table:
    """Exact walk-law propagation along a realized graph sequence ``G_0 .. G_T``.

    Row ``t`` reports the gap of ``W_t``, the stationary drift
    ``eps_t = tv(pi_{t+1}, pi_t)``, the Frobenius kernel drift, ``d_t = tv(nu_t, pi_t)``,
    ``d_{t+1}`` and the slack ``(1 - gamma_t) d_t + eps_t - d_{t+1}``.
    """
    if graphs[0].n > 500:
        raise CapabilityError(f"dense TV diagnostics limited to n <= 500, got n={graphs[0].n}")
    kernels = [lazy_kernel(g) for g in graphs]
    laws = [stationary_law(g) for g in graphs]
    nu = laws[0] if start is None else start
    tab = Table(TV_COLUMNS)
    for t in range(len(graphs) - 1):
        gamma = spectral_gap(kernels[t], laws[t])
        eps = tv_distance(laws[t + 1], laws[t])
        kap = kernel_drift(kernels[t], kernels[t + 1])
        d = tv_distance(nu, laws[t])
        nu = propagate_law(nu, kernels[t])
        d_next = tv_distance(nu, laws[t + 1])
        tab.append(t, gamma, eps, kap, d, d_next, (1.0 - gamma) * d + eps - d_next)
    return tab


def tv_diag_run(
    params: EdgeMarkovParams, T: int, start: Optional[Distribution] = None, seed: int = 0,
) -> Table:
    if params.n > 500:
        raise CapabilityError(f"dense TV diagnostics limited to n <= 500, got n={params.n}")
    rng = np.random.default_rng(seed)
    graphs = [params.initial_graph]
    for _ in range(T):
        graphs.append(step_edge_markov(graphs[-1], params, rng))
    return tv_diag_from_graphs(graphs, start)


def iterated_bound_excess(tab: Table) -> float:
    """Largest ``d_t - [(1-gamma0)^(t-1) + eps_max/gamma0]`` over the sequence (<= 0 when the bound holds)."""
    gamma0 = min(tab.column("gamma"))
    eps_max = max(tab.column("eps"))
    if gamma0 <= 0:
        return -np.inf
    d_next = tab.column("d_next")
    worst = -np.inf
    for k, d in enumerate(d_next):
        t = k + 1
        worst = max(worst, d - ((1.0 - gamma0) ** (t - 1) + eps_max / gamma0))
    return float(worst)


# ---------------------------------------------------------------- traversal floor

def line_cover_time(n: int, policy: str = "advance", rng: Optional[np.random.Generator] = None, cap: int = 10**6) -> int:
    """Rounds to visit every arm when only ``{i, i+1}`` is available from arm ``i``, starting at arm 0."""
    if policy not in ("advance", "lazy"):
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "lazy" and rng is None:
        raise ValueError("the lazy policy needs an rng")
    pos, t = 0, 0
    while pos < n - 1 and t < cap:
        t += 1
        if policy == "advance" or rng.random() < 0.5:
            pos += 1
    return t
