"""Command-line surface: solve, simulate, study, export.

Every subcommand reads a JSON config (keys documented in its ``--help``),
writes deterministic artifacts into the output directory, and exits 0 on
success, 1 on a domain error (machine-readable JSON on stderr), 2 on a
usage error. All randomness flows from the single configured seed,
overridable with ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from . import core, epidemic, grid, mfg, scenario, stationary, swarm
from .errors import MfgnetError, NoConvergence

CONFIG_KEYS: dict[str, dict[str, str]] = {
    "mfg-solve": {
        "x0": "initial distribution [x1, x2, x3]",
        "horizon": "time horizon T (default 10.0)",
        "dt": "integration step (default 1e-3)",
        "relaxation": "Picard damping in (0, 1] (default 0.5)",
        "tolerance": "sup-norm stopping tolerance (default 1e-9)",
        "max_iterations": "Picard iteration budget (default 200)",
        "weights": "cost weights {q, gamma13, gamma23, r31, r32}",
    },
    "stationary": {
        "coefficients": "reduced coefficients {a11, a12, a21, a22, c1, c2}",
        "weights": "cost weights (joint solve mode, used when no coefficients)",
    },
    "convergence": {
        "x0": "initial distribution [x1, x2, x3]",
        "horizons": "increasing list of horizons T",
        "weights": "cost weights {q, gamma13, gamma23, r31, r32}",
        "dt": "integration step (default 1e-2)",
        "relaxation": "Picard damping (default 0.5)",
        "tolerance": "stopping tolerance (default 1e-9)",
        "max_iterations": "Picard iteration budget (default 400)",
    },
    "swarm-sim": {
        "graph_path": "edge-list file (omit to use the bundled Walpole graph)",
        "prime": "neighbour-mediated rates {b13, b31, b23, b32}",
        "doubleprime": "spontaneous rates {b13, b31, b23, b32}",
        "initial": "per-node [s, z, r] triples",
        "uniform_initial": "single [s, z, r] applied to every node",
        "horizon": "time horizon (default 50.0)",
        "dt": "integration step (default 1e-2)",
    },
    "virus-sim": {
        "preset": "initial-condition preset, e.g. walpole-node11",
        "graph_path": "edge-list file (when no preset)",
        "initial": "per-node [s, z, r] triples (when no preset)",
        "epidemic": "rates {beta13, beta23, beta31, beta32}",
        "schedule": "attack schedule {kind, base_rates, ...} or omitted",
        "horizon": "time horizon (default 200.0)",
        "dt": "integration step (default 0.01)",
    },
    "grid-sim": {
        "infection": "per-node steady-state infection probabilities",
        "infection_path": "steady_state.json produced by virus-sim/scenario",
        "oscillator": "parameters {omega, inertia, damping, coupling, adjacency_weighted}",
        "graph_path": "edge-list file (needed for adjacency_weighted coupling)",
        "schedule": "attack schedule {kind, k_hat, omega_hat, sample_interval, ...}",
        "iterations": "number of RK4 steps (default 1000)",
        "dt": "step length (default 0.01)",
        "seed": "disturbance seed (default 0)",
    },
    "scenario": {
        "preset": "walpole-node11, or give graph_path + initial",
        "graph_path": "edge-list file (when no preset)",
        "initial": "per-node [s, z, r] triples (when no preset)",
        "epidemic": "rates {beta13, beta23, beta31, beta32}",
        "schedule": "attack schedule {kind, base_rates, burst_multiplier, burst_period, sample_interval, k_hat, omega_hat}",
        "oscillator": "oscillator parameters (see grid-sim)",
        "report_horizon": "histogram horizon (default 50.0)",
        "steady_horizon": "steady-state horizon (default 200.0)",
        "epidemic_dt": "propagation step (default 0.01)",
        "grid_iterations": "oscillator steps (default 1000)",
        "grid_dt": "oscillator step length (default 0.01)",
        "seed": "scenario seed (default 0)",
        "replication_seeds": "optional list of seeds, one bundle each",
    },
    "buckets": {
        "infection": "per-node infection probabilities",
        "infection_path": "steady_state.json to read instead of inline values",
    },
}


def _fmt(x: float) -> float:
    """Round-trip a float through 12 significant digits for stable output."""
    return float(f"{x:.11e}")


def _weights_from_config(raw: dict[str, Any] | None) -> core.CostWeights:
    raw = raw or {}
    return core.default_weights(
        q=raw.get("q", (1.0, 1.0, 2.0)),
        gamma13=raw.get("gamma13", 0.5),
        gamma23=raw.get("gamma23", 0.5),
        r31=raw.get("r31", 1.0),
        r32=raw.get("r32", 1.0),
    )


def _graph_from_config(cfg: dict[str, Any]) -> core.Graph:
    path = cfg.get("graph_path")
    return core.read_graph(path) if path else core.walpole_graph()


def _triple_from_config(cfg: dict[str, Any], n: int) -> swarm.NodeTriple:
    if cfg.get("preset") == scenario.WALPOLE_PRESET:
        return scenario.walpole_node11_initial(n)
    if "initial" in cfg:
        t = np.asarray(cfg["initial"], dtype=float)
        return swarm.NodeTriple(t[:, 0], t[:, 1], t[:, 2])
    if "uniform_initial" in cfg:
        s, z, r = cfg["uniform_initial"]
        return swarm.uniform_triple(n, s, z, r)
    raise ValueError("config needs 'preset', 'initial' or 'uniform_initial'")


def _schedule_from_config(raw: dict[str, Any] | None) -> grid.AttackSchedule | None:
    if raw is None:
        return None
    return grid.AttackSchedule(
        kind=raw.get("kind", grid.LOW_RATE),
        base_rates=tuple(raw.get("base_rates", (0.13, 0.13))),
        burst_multiplier=raw.get("burst_multiplier", 5.0),
        burst_period=raw.get("burst_period", 5),
        sample_interval=raw.get("sample_interval"),
        k_hat=raw.get("k_hat", 0.5),
        omega_hat=raw.get("omega_hat", 0.5),
    )


def _infection_from_config(cfg: dict[str, Any]) -> np.ndarray:
    if "infection" in cfg:
        return np.asarray(cfg["infection"], dtype=float)
    if "infection_path" in cfg:
        entries = json.loads(Path(cfg["infection_path"]).read_text(encoding="utf-8"))
        entries = sorted(entries, key=lambda e: e["node"])
        return np.array([e["infection"] for e in entries])
    raise ValueError("config needs 'infection' or 'infection_path'")


def _cmd_mfg_solve(cfg: dict[str, Any], out: Path, args) -> int:
    x0 = core.make_simplex(*cfg["x0"])
    weights = _weights_from_config(cfg.get("weights"))
    itvp = mfg.ItvpConfig(horizon=cfg.get("horizon", 10.0),
                          dt=cfg.get("dt", 1e-3),
                          relaxation=cfg.get("relaxation", 0.5),
                          tolerance=cfg.get("tolerance", 1e-9),
                          max_iterations=cfg.get("max_iterations", 200))
    traj = mfg.solve_itvp(x0, weights, itvp)
    traj.to_csv(out / "trajectory.csv")
    summary = {"converged": traj.converged, "iterations": traj.iterations,
               "residual": _fmt(traj.residual),
               "x_final": [_fmt(v) for v in traj.x[-1]],
               "v_initial": [_fmt(v) for v in traj.v[0]]}
    (out / "solve.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")
    if not traj.converged:
        raise NoConvergence(
            f"ITVP stopped after {traj.iterations} iterations, residual {traj.residual:.2e}")
    if args.verbose:
        print(f"converged in {traj.iterations} iterations, residual {traj.residual:.2e}")
    return 0


def _cmd_stationary(cfg: dict[str, Any], out: Path, args) -> int:
    payload: dict[str, Any]
    if "coefficients" in cfg:
        c = cfg["coefficients"]
        coeffs = stationary.ReducedCoefficients(a11=c["a11"], a12=c["a12"],
                                                a21=c["a21"], a22=c["a22"],
                                                c1=c["c1"], c2=c["c2"])
        y = stationary.stationary_y(coeffs)
        tag = stationary.classify_equilibrium(y, coeffs)
        payload = {"y_star": [_fmt(y.y1), _fmt(y.y2)], "stability": tag}
    else:
        weights = _weights_from_config(cfg.get("weights"))
        sol = stationary.stationary_equilibrium(weights)
        payload = {"y_star": [_fmt(sol.y_star.y1), _fmt(sol.y_star.y2)],
                   "x_hat": [_fmt(v) for v in sol.x_hat.as_array()],
                   "kappa": _fmt(sol.kappa),
                   "stability": sol.stability}
    (out / "stationary.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"y* = ({payload['y_star'][0]:.6g}, {payload['y_star'][1]:.6g}), "
          f"classification: {payload['stability']}")
    return 0


def _cmd_convergence(cfg: dict[str, Any], out: Path, args) -> int:
    x0 = core.make_simplex(*cfg["x0"])
    weights = _weights_from_config(cfg.get("weights"))
    records = stationary.convergence_study(
        x0, weights, cfg["horizons"],
        dt=cfg.get("dt", 1e-2),
        relaxation=cfg.get("relaxation", 0.5),
        tolerance=cfg.get("tolerance", 1e-9),
        max_iterations=cfg.get("max_iterations", 400),
        jobs=args.jobs)
    stationary.study_to_csv(records, out / "study.csv")
    if args.verbose:
        for rec in records:
            print(f"T={rec.horizon:g}: dx={rec.dx_sup:.3e} dv={rec.dv_sharp:.3e}")
    return 0


def _cmd_swarm_sim(cfg: dict[str, Any], out: Path, args) -> int:
    g = _graph_from_config(cfg)
    params = swarm.NetworkSwarmParams(
        prime=swarm.ArcRates(**cfg["prime"]),
        doubleprime=swarm.ArcRates(**cfg["doubleprime"]),
        graph=g)
    state0 = _triple_from_config(cfg, g.n)
    traj = swarm.simulate_swarm(state0, params, cfg.get("horizon", 50.0),
                                cfg.get("dt", 1e-2))
    traj.to_csv(out / "swarm.csv")
    return 0


def _cmd_virus_sim(cfg: dict[str, Any], out: Path, args) -> int:
    g = _graph_from_config(cfg)
    ep = cfg.get("epidemic", {})
    params = epidemic.EpidemicParams(
        beta13=ep.get("beta13", 0.13), beta23=ep.get("beta23", 0.13),
        beta31=ep.get("beta31", 0.1), beta32=ep.get("beta32", 0.1), graph=g)
    state0 = _triple_from_config(cfg, g.n)
    sched = _schedule_from_config(cfg.get("schedule"))
    traj, steady = epidemic.simulate_epidemic(state0, params, sched,
                                              cfg.get("horizon", 200.0),
                                              cfg.get("dt", 0.01))
    traj.to_csv(out / "virus.csv")
    epidemic.steady_state_to_json(steady, out / "steady_state.json")
    return 0


def _cmd_grid_sim(cfg: dict[str, Any], out: Path, args) -> int:
    infection = _infection_from_config(cfg)
    osc = cfg.get("oscillator", {})
    adjacency = None
    if osc.get("adjacency_weighted", False):
        adjacency = _graph_from_config(cfg).adjacency
    params = grid.OscillatorParams(
        n=len(infection), omega=osc.get("omega", 0.0),
        inertia=osc.get("inertia", 1.0), damping=osc.get("damping", 0.1),
        coupling=osc.get("coupling", 10.0), adjacency=adjacency)
    sched = _schedule_from_config(cfg.get("schedule", {})) or grid.AttackSchedule()
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    traj = grid.simulate_grid(infection, params, sched,
                              cfg.get("iterations", 1000), cfg.get("dt", 0.01),
                              seed=seed)
    traj.to_csv(out / "frequencies.csv")
    grid.excursions_to_json(traj, out / "excursions.json")
    return 0


def _cmd_scenario(cfg: dict[str, Any], out: Path, args) -> int:
    if args.seed is not None:
        cfg = dict(cfg, seed=args.seed)
    seeds = cfg.get("replication_seeds") or [cfg.get("seed", 0)]

    def run_one(seed: int) -> None:
        sc = scenario.scenario_from_dict(dict(cfg, seed=seed))
        dest = out if len(seeds) == 1 else out / f"seed-{seed}"
        scenario.run_scenario(sc, dest)

    if args.jobs > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(run_one, seeds))
    else:
        for s in seeds:
            run_one(s)
    if args.verbose:
        print(f"wrote {len(seeds)} scenario bundle(s) under {out}")
    return 0


def _cmd_buckets(cfg: dict[str, Any], out: Path, args) -> int:
    infection = _infection_from_config(cfg)
    hist = scenario.bucket_histogram(infection)
    payload = {"buckets": ["[0,0.25)", "[0.25,0.5)", "[0.5,0.75)", "[0.75,1]"],
               "counts": list(hist.counts)}
    (out / "histogram.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


_HANDLERS = {
    "mfg-solve": _cmd_mfg_solve,
    "stationary": _cmd_stationary,
    "convergence": _cmd_convergence,
    "swarm-sim": _cmd_swarm_sim,
    "virus-sim": _cmd_virus_sim,
    "grid-sim": _cmd_grid_sim,
    "scenario": _cmd_scenario,
    "buckets": _cmd_buckets,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfgnet",
        description="Three-state mean-field games, propagation networks and "
                    "grid-frequency attack simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in CONFIG_KEYS.items():
        epilog = "config keys:\n" + "\n".join(
            f"  {key:<18} {desc}" for key, desc in keys.items())
        p = sub.add_parser(name, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter,
                           help=f"run the {name} pipeline")
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None,
                       help="output directory (default $MFGNET_OUT or '.')")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="bound on concurrent replications")
        p.add_argument("--verbose", action="store_true")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    """Run the parsed command; 0 on success, 1 on a domain error."""
    out = Path(args.out or os.environ.get("MFGNET_OUT") or ".")
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        return _HANDLERS[args.command](cfg, out, args)
    except MfgnetError as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}),
              file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError, TypeError) as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}),
              file=sys.stderr)
        return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
