"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are the stated ones.  Lines are collected by
``conftest.py`` and repeated in the pytest terminal summary.
"""

import math
import time
from contextlib import contextmanager

import numpy as np

from conftest import ACCEPTANCE_LINES
from fmab.graphs import (
    EdgeMarkovParams,
    ErHomParams,
    Graph,
    edge_flip_count,
    expected_flips_stationary,
    marginal_edge_prob,
    sample_er_hom,
    step_edge_markov,
)
from fmab.bounds import GapProfile, identification_time_lower_bound, traversal_lower_bound
from fmab.harness import suites
from fmab.harness.montecarlo import run_batch, run_monte_carlo
from fmab.kernel import (
    detailed_balance_residual,
    hom_expected_kernel,
    hom_lambda2,
    lazy_kernel,
    minorization_constant,
    stationary_law,
)

P_GRID = [round(0.1 * k, 1) for k in range(1, 10)]
# identification bound for n=10, gap 0.2, delta 0.1 as stated in the criterion
STATED_ID_BOUND = 370.78


class Check:
    def __init__(self):
        self.failures = []
        self.detail = ""

    def expect(self, ok, msg):
        if not ok:
            self.failures.append(msg)


@contextmanager
def criterion(number, title, budget_s):
    chk = Check()
    start = time.perf_counter()
    try:
        yield chk
    except Exception as exc:  # a crash is a failure of the criterion, not a skip
        chk.failures.append(f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - start
    chk.expect(elapsed < budget_s, f"runtime {elapsed:.1f}s exceeds {budget_s}s")
    status = "PASS" if not chk.failures else "FAIL"
    line = f"criterion {number}: {status} {title} ({elapsed:.2f}s) {chk.detail}".rstrip()
    if chk.failures:
        line += " | " + "; ".join(chk.failures[:3])
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not chk.failures, line


def _binomial_diag(n, p):
    return sum(math.comb(n - 1, k) * p**k * (1 - p) ** (n - 1 - k) / (k + 1) for k in range(n))


def test_criterion_01_kernel_closed_form():
    with criterion(1, "expected-kernel diagonal equals enumerated expectation", 1.0) as c:
        worst = 0.0
        for n in range(2, 13):
            for p in P_GRID:
                worst = max(worst, abs(hom_expected_kernel(n, p).rows[0, 0] - _binomial_diag(n, p)))
        c.detail = f"max err {worst:.1e}"
        c.expect(worst <= 1e-12, f"max diagonal error {worst:.3e}")


def test_criterion_02_spectrum():
    with criterion(2, "expected-kernel spectrum is {1, lambda2 x (n-1)}", 5.0) as c:
        worst = 0.0
        for n in range(2, 51):
            for p in P_GRID:
                ev = np.sort(np.linalg.eigvalsh(hom_expected_kernel(n, p).rows))[::-1]
                worst = max(worst, abs(ev[0] - 1.0), float(np.max(np.abs(ev[1:] - hom_lambda2(n, p)))))
        c.detail = f"max err {worst:.1e}"
        c.expect(worst <= 1e-10, f"max eigenvalue error {worst:.3e}")


def test_criterion_03_minorization_identity():
    with criterion(3, "minorization constant equals 1 - lambda2", 1.0) as c:
        worst = max(
            abs(minorization_constant(n, p) - (1 - hom_lambda2(n, p))) for n in range(2, 51) for p in P_GRID
        )
        c.detail = f"max err {worst:.1e}"
        c.expect(worst <= 1e-12, f"max error {worst:.3e}")


def test_criterion_04_detailed_balance():
    with criterion(4, "stationarity and detailed balance on 1000 random graphs", 30.0) as c:
        rng = np.random.default_rng(404)
        worst_stat = worst_db = 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 51))
            g = sample_er_hom(ErHomParams(n, float(rng.uniform())), rng)
            k, pi = lazy_kernel(g), stationary_law(g)
            worst_stat = max(worst_stat, float(np.max(np.abs(pi.mass @ k.rows - pi.mass))))
            worst_db = max(worst_db, detailed_balance_residual(k, pi))
        c.detail = f"stationarity {worst_stat:.1e}, balance {worst_db:.1e}"
        c.expect(worst_stat <= 1e-12, f"stationarity residual {worst_stat:.3e}")
        c.expect(worst_db <= 1e-12, f"detailed-balance residual {worst_db:.3e}")


def test_criterion_05_edge_markov_marginals():
    with criterion(5, "single-edge marginals within 3 sigma", 10.0) as c:
        n = 448  # 100128 independent pair chains
        worst_z = 0.0
        for a, b in ((0.1, 0.3), (0.5, 0.5)):
            g = Graph.complete(n)
            params = EdgeMarkovParams(n, a, b, g)
            rng = np.random.default_rng(5)
            for t in range(1, 21):
                g = step_edge_markov(g, params, rng)
                if t in (1, 5, 20):
                    m = marginal_edge_prob(1.0, a, b, t)
                    freq = g.pairs.mean()
                    z = abs(freq - m) / math.sqrt(m * (1 - m) / g.pairs.size)
                    worst_z = max(worst_z, z)
                    c.expect(z <= 3, f"alpha={a} beta={b} t={t}: freq {freq:.5f} vs {m:.5f}")
        c.detail = f"max |z| {worst_z:.2f}"


def test_criterion_06_flip_rate():
    with criterion(6, "stationary flip count mean within 3 sigma of 4.5", 5.0) as c:
        n, a, b, steps = 10, 0.1, 0.1, 10_000
        rng = np.random.default_rng(6)
        g = sample_er_hom(ErHomParams(n, a / (a + b)), rng)
        params = EdgeMarkovParams(n, a, b, g)
        flips = np.empty(steps)
        for k in range(steps):
            nxt = step_edge_markov(g, params, rng)
            flips[k] = edge_flip_count(g, nxt)
            g = nxt
        target = expected_flips_stationary(n, a, b)
        # with alpha = beta every pair flips w.p. alpha regardless of state, so steps are independent
        sigma = math.sqrt(45 * a * (1 - a) / steps)
        c.detail = f"mean {flips.mean():.4f}, target {target}, sigma {sigma:.4f}"
        c.expect(abs(target - 4.5) < 1e-12, f"closed form {target}")
        c.expect(abs(flips.mean() - target) <= 3 * sigma, "mean outside 3 sigma")


def test_criterion_07_tv_recursion():
    with criterion(7, "TV recursion slack and iterated bound on 50 sequences", 120.0) as c:
        worst_slack, worst_excess = math.inf, -math.inf
        for seed in range(50):
            rng = np.random.default_rng([7, seed])
            g0 = sample_er_hom(ErHomParams(30, 0.5), rng)
            tab = suites.tv_diag_run(EdgeMarkovParams(30, 0.5, 0.5, g0), 200, None, seed=seed)
            worst_slack = min(worst_slack, min(tab.column("slack")))
            worst_excess = max(worst_excess, suites.iterated_bound_excess(tab))
        c.detail = f"min slack {worst_slack:.2e}, max bound excess {worst_excess:.2e}"
        c.expect(worst_slack >= -1e-10, f"recursion slack {worst_slack:.3e}")
        c.expect(worst_excess <= 1e-10, f"iterated bound excess {worst_excess:.3e}")


def test_criterion_08_geometric_navigation():
    with criterion(8, "wait-at-current navigation mean within 3 sigma of 1/p", 30.0) as c:
        parts = []
        for p in (0.1, 0.5):
            t = suites.navigation_trials(p, 20, 10_000, seed=8)
            sigma = math.sqrt((1 - p) / p**2 / t.size)
            parts.append(f"p={p}: {t.mean():.3f} vs {1 / p:.1f}")
            c.expect(abs(t.mean() - 1 / p) <= 3 * sigma, f"p={p} mean {t.mean():.4f}")
        c.detail = ", ".join(parts)


def test_criterion_09_regret_reproduction():
    with criterion(9, "calibrated regret R(T)/T <= 0.15 and nonincreasing after T0", 600.0) as c:
        runs, T, p = 50, 10_000, 0.5
        parts = []
        for model in ("er_hom", "edge_markov"):
            for n in (10, 50, 100):
                cfg = suites.regret_suite_config(model, n, p, T, seed=0)
                t0, _ = cfg.resolve_t0()
                agg = run_monte_carlo(cfg, runs).aggregate().where(series_id="avg_regret")
                ts = np.array(agg.column("t"))
                mean = np.array(agg.column("mean"))
                after = mean[ts >= t0]
                parts.append(f"{model}/n={n}: {mean[-1]:.3f}")
                c.expect(mean[-1] <= 0.15, f"{model} n={n} R(T)/T={mean[-1]:.4f}")
                c.expect(suites.nonincreasing_within(after, 0.01), f"{model} n={n} not nonincreasing after T0={t0}")
        c.detail = ", ".join(parts)


def test_criterion_10_navigation_sweep():
    with criterion(10, "navigation medians nonincreasing in p, ratio >= 3", 300.0) as c:
        tab = suites.navigation_sweep((0.01, 0.1, 0.4, 0.8), n=30, runs=200)
        med = tab.column("median")
        c.detail = "medians " + ", ".join(f"{m:g}" for m in med)
        c.expect(all(b <= a for a, b in zip(med, med[1:])), "medians increase somewhere")
        c.expect(med[-1] > 0 and med[0] / med[-1] >= 3, f"ratio {med[0] / max(med[-1], 1e-9):.2f}")


def test_criterion_11_identification_rate():
    with criterion(11, "misidentification rate <= 0.1 over 400 runs", 300.0) as c:
        cfg = suites.identification_config(n=20, gap=0.2, p=0.5)
        rate = suites.misidentification_rate(cfg, 400)
        c.detail = f"rate {rate:.4f} at t0={cfg.resolve_t0()[0]}"
        c.expect(rate <= 0.1, f"rate {rate:.4f}")


def test_criterion_12_lower_bound_consistency():
    with criterion(12, "mean identification time respects the lower bound", 300.0) as c:
        cfg = suites.identification_run_config(suites.identification_config(n=10, gap=0.2, p=0.5))
        mc = run_monte_carlo(cfg, 200)
        formula = identification_time_lower_bound(GapProfile.equal(10, 0.2, 0.1))
        mean_t = mc.mean_identification_time
        c.detail = (
            f"mean {mean_t:.1f} vs stated {STATED_ID_BOUND} (formula {formula:.2f}), "
            f"misidentification {mc.misidentification_rate:.3f}"
        )
        c.expect(mean_t >= STATED_ID_BOUND, f"mean identification time {mean_t}")
        c.expect(mean_t >= formula, f"mean identification time {mean_t} below formula {formula}")
        c.expect(mc.misidentification_rate <= 0.1, "agent is not delta-correct at this sizing")


def test_criterion_13_traversal_floor():
    with criterion(13, "line cover time >= n-1, advancing policy exactly n-1", 1.0) as c:
        rng = np.random.default_rng(13)
        for n in (2, 5, 10, 50, 200):
            c.expect(suites.line_cover_time(n, "advance") == n - 1 == traversal_lower_bound(n), f"advance n={n}")
            for _ in range(10):
                c.expect(suites.line_cover_time(n, "lazy", rng) >= n - 1, f"lazy n={n}")


def test_criterion_14_disaster_scenario():
    with criterion(14, "disaster preset commits to the hotspot with the phase signature", 1800.0) as c:
        preset = suites.disaster_preset()
        cfg = preset.config
        t0, _ = cfg.resolve_t0()
        results = run_batch(cfg, 20)
        wins = suites.phase_windows(cfg.horizon, t0)
        hist = suites.visitation_histogram_suite(cfg, wins, results=results)
        committed = sum(r.identified_correctly and r.commit_round is not None for r in results)
        supports, fracs = [], []
        for r in results:
            explore = sum(suites.window_counts(hist, w, r.run_index) for w in range(len(wins) - 1))
            exploit = suites.window_counts(hist, len(wins) - 1, r.run_index)
            supports.append(int(np.count_nonzero(explore)))
            fracs.append(exploit[r.identified_arm] / exploit.sum())
        c.detail = f"committed {committed}/20, min support {min(supports)}, min commit mass {min(fracs):.3f}"
        c.expect(committed >= 18, f"only {committed}/20 committed to the hotspot")
        c.expect(min(supports) >= 0.9 * cfg.n, f"exploration support {min(supports)}")
        c.expect(min(fracs) >= 0.9, f"commit-window mass {min(fracs):.3f}")
