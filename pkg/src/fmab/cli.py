"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime or capability error.
Flags override fields of a ``--config`` file.  ``FMAB_DEFAULT_JOBS`` sets the
default worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from fmab import __version__
from fmab.agent import NavigationMode
from fmab.bounds import (
    GapProfile,
    bern_kl,
    cheeger_gap_lower_bound,
    constant_gap,
    hoeffding_samples,
    identification_time_lower_bound,
    per_arm_lower_bound,
    pi_eff,
    traversal_lower_bound,
    visitation_lower_bound,
)
from fmab.graphs import EdgeMarkovParams, ErHomParams, burn_in_length, expected_flips_stationary, flip_envelope, sample_er_hom
from fmab.harness.config import ConfigError, load_config, parse_config
from fmab.harness.export import Table, export
from fmab.harness.montecarlo import default_jobs, run_monte_carlo
from fmab.harness import suites
from fmab.kernel import (
    CapabilityError,
    Distribution,
    cheeger_conductance,
    hom_expected_kernel,
    hom_lambda2,
    lazy_kernel,
    minorization_constant,
    spectral_gap,
    stationary_law,
)

CONSTANT_DEFAULTS = {"c0": 1.0, "c1": 1.0, "c2": 1.0, "c3": 1.0, "eta": 0.25, "kappa": 1.0, "C": 1.0, "C_prime": 1.0}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _constants_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group(
        "analysis constants",
        "Unspecified absolute constants of the regret analysis. Suites that were calibrated "
        f"(regret-suite, disaster) use c0={suites.CALIBRATED['c0']}, c1={suites.CALIBRATED['c1']}, "
        f"c2={suites.CALIBRATED['c2']}, c3={suites.CALIBRATED['c3']} unless overridden.",
    )
    g.add_argument("--c0", type=float, help="burn-in constant (default 1.0)")
    g.add_argument("--c1", type=float, help="mixing/coverage constant of T0 (default 1.0)")
    g.add_argument("--c2", type=float, help="identification constant of T0 (default 1.0)")
    g.add_argument("--c3", type=float, help="navigation constant (default 1.0)")
    g.add_argument("--eta", type=float, help="typicality tolerance in (0, 1/2) (default 0.25)")
    g.add_argument("--kappa", type=float, help="stickiness constant, beta <= kappa/n (default 1.0)")
    g.add_argument("--C", dest="C", type=float, help="flip-envelope constant C (default 1.0)")
    g.add_argument("--C-prime", dest="C_prime", type=float, help="flip-envelope constant C' (default 1.0)")
    return p


def _common_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON run configuration for simulate; flags override its fields")
    p.add_argument("--seed", type=int, help="master seed (default 0, or the config's seed)")
    p.add_argument("--out", type=Path, help="output directory (default: print only)")
    p.add_argument("--jobs", type=int, help="parallel workers (default $FMAB_DEFAULT_JOBS or 1)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format (default csv)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parents = [_common_parent(), _constants_parent()]
    parser = _Parser(prog="fmab", description="Flickering multi-armed bandit experiments and diagnostics.")
    parser.add_argument("--version", action="version", version=f"fmab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=parents, help="run episodes from a config file")
    p.add_argument("--runs", type=int, default=1, help="number of episodes (default 1)")
    p.add_argument("--T", dest="horizon", type=int, help="override the horizon")
    p.add_argument("--no-trace", dest="trace", action="store_false", help="skip the per-round trace (written by default)")

    p = sub.add_parser("sweep-nav", parents=parents, help="navigation time versus edge probability")
    p.add_argument("--n", type=int, default=30, help="arm count (default 30)")
    p.add_argument("--p-list", type=_floats, default=[0.01, 0.1, 0.4, 0.8], help="edge probabilities (default 0.01,0.1,0.4,0.8)")
    p.add_argument("--runs", type=int, default=200, help="episodes per p (default 200)")
    p.add_argument("--t0", type=int, default=5000, help="fixed exploration length (default 5000)")
    p.add_argument("--extra", type=int, default=5000, help="rounds after t0 before censoring (default 5000)")
    p.add_argument("--mode", choices=[m.value for m in NavigationMode], default="lazy_walk", help="navigation rule (default lazy_walk)")

    p = sub.add_parser("regret-suite", parents=parents, help="average-regret curves for both graph models")
    p.add_argument("--n-list", type=_ints, default=[10, 50, 100], help="arm counts (default 10,50,100)")
    p.add_argument("--p", type=float, default=0.5, help="(stationary) edge density (default 0.5)")
    p.add_argument("--T", dest="horizon", type=int, default=10_000, help="horizon (default 10000)")
    p.add_argument("--runs", type=int, default=50, help="episodes per series (default 50)")
    p.add_argument("--models", default="er_hom,edge_markov", help="graph models (default er_hom,edge_markov)")

    p = sub.add_parser("diag-kernel", parents=parents, help="expected-kernel closed forms and realized-graph spectra")
    p.add_argument("--n", type=int, required=True, help="arm count")
    p.add_argument("--p", type=float, required=True, help="edge probability")
    p.add_argument("--conductance", action="store_true", help="also sample G(n,p) and compute its exact conductance (n <= 24)")

    p = sub.add_parser("diag-tv", parents=parents, help="TV recursion along a realized edge-Markov sequence")
    p.add_argument("--n", type=int, default=30, help="arm count (default 30)")
    p.add_argument("--alpha", type=float, default=0.5, help="edge appearance probability (default 0.5)")
    p.add_argument("--beta", type=float, default=0.5, help="edge disappearance probability (default 0.5)")
    p.add_argument("--T", dest="horizon", type=int, default=200, help="sequence length (default 200)")
    p.add_argument("--start", default="stationary", help="'stationary' or 'point:<arm>' (default stationary)")

    p = sub.add_parser("bounds", parents=parents, help="table of lower bounds and sizing quantities")
    p.add_argument("--n", type=int, required=True, help="arm count")
    p.add_argument("--gap", type=float, required=True, help="common suboptimality gap")
    p.add_argument("--delta", type=float, default=0.1, help="confidence parameter (default 0.1)")
    p.add_argument("--T", dest="horizon", type=int, default=10_000, help="horizon used in log(nT/delta) (default 10000)")
    p.add_argument("--alpha", type=float, help="edge-Markov appearance probability (optional)")
    p.add_argument("--beta", type=float, help="edge-Markov disappearance probability (optional)")
    p.add_argument("--gamma0", type=float, help="spectral-gap floor for visitation bounds (default: constant-gap regime)")
    p.add_argument("--pi0", type=float, help="stationary-mass floor (default 1/n)")
    p.add_argument("--eps-max", type=float, default=0.0, help="stationary drift ceiling (default 0)")
    p.add_argument("--t-exp", type=int, help="exploration length for the visitation bound (default: sized T0)")

    p = sub.add_parser("disaster", parents=parents, help="the n=500 disaster-response scenario")
    p.add_argument("--runs", type=int, default=20, help="missions (default 20)")
    p.add_argument("--density", type=float, default=0.1, help="stationary edge density (default 0.1)")
    return parser


def _constants(args, base: dict) -> dict:
    out = dict(base)
    for k in ("c0", "c1", "c2", "c3"):
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _const(args, name: str) -> float:
    v = getattr(args, name, None)
    return CONSTANT_DEFAULTS[name] if v is None else v


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else default_jobs()


class _Output:
    def __init__(self, args, command: str, argv: Sequence[str]):
        self.dir: Optional[Path] = args.out
        self.format = args.format
        self.command = command
        self.argv = list(argv)
        self.files: list[Path] = []
        self.resolved: dict = {}

    def table(self, name: str, tab: Table) -> None:
        if self.dir is not None:
            self.files.append(export(tab, self.dir / f"{name}.{self.format}", self.format))

    def json(self, name: str, doc) -> None:
        if self.dir is not None:
            path = self.dir / f"{name}.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(doc, indent=1, sort_keys=True))
            self.files.append(path)

    def finish(self) -> None:
        if self.dir is None:
            return
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "version": __version__,
            "resolved": self.resolved,
            "files": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in self.files},
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))


def _print_table(tab: Table, limit: int = 40) -> None:
    print(",".join(tab.columns))
    for row in tab.rows[:limit]:
        print(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))
    if len(tab) > limit:
        print(f"... ({len(tab) - limit} more rows)")


def cmd_simulate(args, out: _Output) -> None:
    if args.config is None:
        raise ConfigError("simulate: --config is required")
    cfg = load_config(args.config)
    data = cfg.model_dump(mode="json")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.horizon is not None:
        data["horizon"] = args.horizon
    data["record_trace"] = bool(args.trace)
    data["policy"]["sizing"].update(_constants(args, {}))
    if args.kappa is not None:
        data["policy"]["sizing"]["kappa"] = args.kappa
    cfg = parse_config(data, str(args.config))
    out.resolved = cfg.model_dump(mode="json")
    mc = run_monte_carlo(cfg, args.runs, _jobs(args))
    out.json("summary", {"aggregate": mc.summary(), "runs": [r.summary() for r in mc.runs], "config_hash": cfg.content_hash()})
    out.table("aggregate", mc.aggregate())
    if cfg.record_trace:
        trace = mc.runs[0].trace_table()
        for r in mc.runs[1:]:
            trace.rows.extend(r.trace_table().rows)
        out.table("trace", trace)
    print(json.dumps(mc.summary(), indent=1))


def cmd_sweep_nav(args, out: _Output) -> None:
    seed = args.seed or 0
    out.resolved = {"n": args.n, "p_list": args.p_list, "runs": args.runs, "t0": args.t0, "extra": args.extra, "mode": args.mode, "seed": seed}
    tab = suites.navigation_sweep(args.p_list, args.n, args.runs, args.t0, args.extra, NavigationMode(args.mode), seed, _jobs(args))
    out.table("nav_sweep", tab)
    _print_table(tab)


def cmd_regret_suite(args, out: _Output) -> None:
    seed = args.seed or 0
    consts = _constants(args, suites.CALIBRATED)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    out.resolved = {"n_list": args.n_list, "p": args.p, "T": args.horizon, "runs": args.runs, "models": models, "constants": consts, "seed": seed}
    tab = suites.regret_curve_suite(args.n_list, args.p, args.horizon, args.runs, models, seed, consts, _jobs(args))
    out.table("regret_suite", tab)
    for sid in dict.fromkeys(tab.column("series_id")):
        if sid.endswith("avg_regret"):
            final = tab.where(series_id=sid).rows[-1]
            print(f"{sid}: R(T)/T mean={final[2]:.6f} median={final[3]:.6f}")


def cmd_diag_kernel(args, out: _Output) -> None:
    n, p = args.n, args.p
    k = hom_expected_kernel(n, p)
    lam2 = hom_lambda2(n, p)
    gamma = spectral_gap(k, Distribution.uniform(n))
    doc = {
        "n": n, "p": p,
        "diagonal": float(k.rows[0, 0]),
        "off_diagonal": float(k.rows[0, 1]) if n > 1 else 0.0,
        "lambda2": lam2,
        "gamma": gamma,
        "minorization": minorization_constant(n, p),
    }
    print(f"diagonal {doc['diagonal']:.6f}")
    print(f"off-diagonal {doc['off_diagonal']:.6f}")
    print(f"lambda2 {lam2:.6f}")
    print(f"gamma {gamma:.6f}")
    print(f"minorization {doc['minorization']:.6f}")
    if args.conductance:
        g = sample_er_hom(ErHomParams(n, p), np.random.default_rng(args.seed or 0))
        h = cheeger_conductance(g)
        gap = spectral_gap(lazy_kernel(g), stationary_law(g))
        doc.update({"sampled_edges": g.num_edges, "conductance": h, "sampled_gamma": gap, "cheeger_floor": h * h / 2})
        print(f"sampled conductance {h:.6f}, gamma {gap:.6f}, h^2/2 {h * h / 2:.6f}")
    out.resolved = {"n": n, "p": p, "seed": args.seed or 0}
    out.json("diag_kernel", doc)


def cmd_diag_tv(args, out: _Output) -> None:
    seed = args.seed or 0
    rng = np.random.default_rng(seed)
    p_inf = args.alpha / (args.alpha + args.beta)
    g0 = sample_er_hom(ErHomParams(args.n, p_inf), rng)
    params = EdgeMarkovParams(args.n, args.alpha, args.beta, g0)
    if args.start == "stationary":
        start = None
    elif args.start.startswith("point:"):
        start = Distribution.point(args.n, int(args.start.split(":", 1)[1]))
    else:
        raise ConfigError(f"diag-tv: --start must be 'stationary' or 'point:<arm>', got {args.start!r}")
    tab = suites.tv_diag_run(params, args.horizon, start, seed=seed + 1)
    out.resolved = {"n": args.n, "alpha": args.alpha, "beta": args.beta, "T": args.horizon, "start": args.start, "seed": seed}
    out.table("tv_diag", tab)
    print(f"min recursion slack {min(tab.column('slack')):.3e}")
    print(f"gamma0 {min(tab.column('gamma')):.6f}, eps_max {max(tab.column('eps')):.6f}")
    print(f"iterated-bound excess {suites.iterated_bound_excess(tab):.3e}")


def cmd_bounds(args, out: _Output) -> None:
    n, gap, delta, T = args.n, args.gap, args.delta, args.horizon
    eta = _const(args, "eta")
    consts = _constants(args, {"c0": 1.0, "c1": 1.0, "c2": 1.0, "c3": 1.0})
    from fmab.agent import SizingInputs, exploration_length_er, exploration_length_markov

    inputs = SizingInputs(n, T, delta, min(gap, 1.0), args.alpha, args.beta, consts)
    t_exp = args.t_exp if args.t_exp is not None else exploration_length_er(inputs)
    gamma0 = args.gamma0 if args.gamma0 is not None else constant_gap(eta)
    pi0 = args.pi0 if args.pi0 is not None else 1.0 / n
    log_term = float(np.log(n * T / delta))
    rows = [
        ("kl_confidence", bern_kl(1 - delta, delta)),
        ("identification_time_lower_bound", identification_time_lower_bound(GapProfile.equal(n, gap, delta))),
        ("traversal_lower_bound", float(traversal_lower_bound(n))),
        ("hoeffding_samples_per_arm", float(hoeffding_samples(n, gap, delta))),
        ("exploration_length_er", float(exploration_length_er(inputs))),
        ("gamma0_constant_regime", constant_gap(eta)),
        ("pi_eff", pi_eff(pi0, args.eps_max, gamma0)),
        ("visitation_lower_bound", visitation_lower_bound(t_exp, pi_eff(pi0, args.eps_max, gamma0), gamma0, n, delta)),
    ]
    if gap < 0.5:
        rows.insert(1, ("per_arm_lower_bound_exact", per_arm_lower_bound(gap, delta, exact=True)))
    if gap <= 0.25:
        rows.insert(2, ("per_arm_lower_bound_clean", per_arm_lower_bound(gap, delta, exact=False)))
    if args.alpha is not None and args.beta is not None:
        burn, _ = exploration_length_markov(inputs)
        p_inf = args.alpha / (args.alpha + args.beta)
        zeta = expected_flips_stationary(n, args.alpha, args.beta) / n**2
        rows += [
            ("stationary_density", p_inf),
            ("burn_in_length", float(burn_in_length(n, args.alpha, args.beta, delta))),
            ("burn_in_sizing", float(burn)),
            ("expected_flips_stationary", expected_flips_stationary(n, args.alpha, args.beta)),
            ("flip_envelope", flip_envelope(zeta, n, log_term, _const(args, "C"), _const(args, "C_prime"))),
            ("cheeger_gap_lower_bound", cheeger_gap_lower_bound(n, p_inf, eta)),
        ]
    tab = Table(("quantity", "value"), [(k, float(v)) for k, v in rows])
    out.resolved = {"n": n, "gap": gap, "delta": delta, "T": T, "alpha": args.alpha, "beta": args.beta, "eta": eta, "constants": consts}
    out.table("bounds", tab)
    for k, v in tab.rows:
        print(f"{k},{v:.6f}")


def cmd_disaster(args, out: _Output) -> None:
    seed = 2025 if args.seed is None else args.seed
    consts = _constants(args, suites.CALIBRATED)
    preset = suites.disaster_preset(args.density, _const(args, "kappa"), seed, consts)
    cfg = preset.config
    t0, burn = cfg.resolve_t0()
    out.resolved = {"preset": preset.name, "content_hash": preset.content_hash, "config": cfg.model_dump(mode="json")}
    mc = run_monte_carlo(cfg, args.runs, _jobs(args))
    wins = suites.phase_windows(cfg.horizon, t0)
    hist = suites.visitation_histogram_suite(cfg, wins, results=mc.runs)
    out.table("aggregate", mc.aggregate())
    out.table("visitation", hist)
    out.json("summary", {"aggregate": mc.summary(), "runs": [r.summary() for r in mc.runs], "t0": t0, "burn_in": burn, "windows": wins})
    print(preset.description)
    print(f"t0={t0} (burn-in {burn}), content hash {preset.content_hash[:16]}")
    print(json.dumps(mc.summary(), indent=1))


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-nav": cmd_sweep_nav,
    "regret-suite": cmd_regret_suite,
    "diag-kernel": cmd_diag_kernel,
    "diag-tv": cmd_diag_tv,
    "bounds": cmd_bounds,
    "disaster": cmd_disaster,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.config is not None and args.command != "simulate":
            raise ConfigError(f"{args.command}: --config is only read by simulate")
        out = _Output(args, args.command, argv)
        COMMANDS[args.command](args, out)
        out.finish()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surfaced as runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
