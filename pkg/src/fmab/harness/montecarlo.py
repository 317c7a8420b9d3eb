"""Batches of independently seeded episodes and their aggregation."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from fmab.harness.config import RunConfig
from fmab.harness.episode import RunResult, run_episode
from fmab.harness.export import AGGREGATE_COLUMNS, Table


def default_jobs() -> int:
    raw = os.environ.get("FMAB_DEFAULT_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"FMAB_DEFAULT_JOBS must be an integer, got {raw!r}") from None


def _run(args):
    config, i = args
    return run_episode(config, i)


def run_batch(config: RunConfig, n_runs: int, jobs: int | None = None) -> list[RunResult]:
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = default_jobs() if jobs is None else max(1, jobs)
    tasks = [(config, i) for i in range(n_runs)]
    if jobs == 1 or n_runs == 1:
        return [_run(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so aggregation is independent of scheduling
        return list(pool.map(_run, tasks, chunksize=max(1, n_runs // (4 * jobs))))


def _quantiles(x: np.ndarray) -> tuple[float, float, float, float]:
    q25, med, q75 = np.quantile(x, [0.25, 0.5, 0.75], axis=0)
    return float(np.mean(x)), float(med), float(q25), float(q75)


@dataclass
class MonteCarloResult:
    config: RunConfig
    runs: list[RunResult]

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    @property
    def checkpoints(self) -> np.ndarray:
        return self.runs[0].checkpoints

    @property
    def misidentification_rate(self) -> float:
        return sum(not r.identified_correctly for r in self.runs) / self.n_runs

    @property
    def nav_times(self) -> np.ndarray:
        return np.array([r.nav_time for r in self.runs])

    @property
    def censored_count(self) -> int:
        return sum(r.nav_censored for r in self.runs)

    @property
    def mean_identification_time(self) -> float:
        return float(np.mean([r.identification_round for r in self.runs]))

    def regret_matrix(self, average: bool = False) -> np.ndarray:
        m = np.vstack([r.cum_pseudo_regret for r in self.runs])
        return m / self.checkpoints if average else m

    def aggregate(self, series_prefix: str = "") -> Table:
        tab = Table(AGGREGATE_COLUMNS)
        grid = self.checkpoints
        for name, mat in (("cum_pseudo_regret", self.regret_matrix()), ("avg_regret", self.regret_matrix(True))):
            sid = f"{series_prefix}{name}"
            for k, t in enumerate(grid):
                mean, med, q25, q75 = _quantiles(mat[:, k])
                tab.append(sid, int(t), mean, med, q25, q75, self.n_runs)
        return tab

    def summary(self) -> dict:
        nav = self.nav_times
        return {
            "n_runs": self.n_runs,
            "misidentification_rate": self.misidentification_rate,
            "mean_identification_time": self.mean_identification_time,
            "mean_total_pseudo_regret": float(np.mean([r.total_pseudo_regret for r in self.runs])),
            "mean_total_realized_regret": float(np.mean([r.total_realized_regret for r in self.runs])),
            "nav_min": int(nav.min()),
            "nav_q25": float(np.quantile(nav, 0.25)),
            "nav_median": float(np.median(nav)),
            "nav_q75": float(np.quantile(nav, 0.75)),
            "nav_max": int(nav.max()),
            "nav_censored": self.censored_count,
        }


def run_monte_carlo(config: RunConfig, n_runs: int, jobs: int | None = None) -> MonteCarloResult:
    return MonteCarloResult(config, run_batch(config, n_runs, jobs))
