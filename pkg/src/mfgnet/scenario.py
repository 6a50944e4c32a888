"""End-to-end attack experiments.

A scenario integrates the propagation model on a graph, buckets the
infection probabilities into the four-category histogram at the report
mid-horizon and final time, extends the integration to a steady state,
drives the oscillator model with that steady state, and writes every
artifact plus a hashed manifest. Outputs carry no timestamps, so a run is
byte-reproducible from its config and seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import Graph, read_graph, walpole_graph
from .epidemic import (EpidemicParams, EpidemicState, simulate_epidemic,
                       steady_state_to_json)
from .errors import OutOfRange
from .grid import (AttackSchedule, OscillatorParams, excursions_to_json,
                   simulate_grid)
from .swarm import NodeTriple

BUCKET_EDGES = (0.25, 0.5, 0.75)
WALPOLE_PRESET = "walpole-node11"


@dataclass(frozen=True)
class InfectionHistogram:
    """Counts in the four infection categories
    [0, .25), [.25, .5), [.5, .75), [.75, 1]."""

    counts: tuple[int, int, int, int]

    @property
    def n(self) -> int:
        return sum(self.counts)

    def cumulative_at_least(self) -> tuple[int, int, int]:
        """Nodes at or above each nonzero category boundary."""
        c = self.counts
        return (c[1] + c[2] + c[3], c[2] + c[3], c[3])


def bucket_histogram(infection: np.ndarray) -> InfectionHistogram:
    """Bucket per-node probabilities; 0.25 goes to the second bucket
    (half-open convention), the top bucket is closed at 1."""
    v = np.asarray(infection, dtype=float)
    if np.any(v < -1e-9) or np.any(v > 1.0 + 1e-9):
        raise OutOfRange(f"infection values outside [0, 1]: {v.min()}..{v.max()}")
    v = np.clip(v, 0.0, 1.0)
    counts = (int(np.sum(v < 0.25)),
              int(np.sum((v >= 0.25) & (v < 0.5))),
              int(np.sum((v >= 0.5) & (v < 0.75))),
              int(np.sum(v >= 0.75)))
    return InfectionHistogram(counts)


def walpole_node11_initial(n: int = 11) -> EpidemicState:
    """The published initial condition: node 11 infected at (0, 1, 0), the
    first five nodes at (0, 0, 1), the remaining ones at (1, 0, 0)."""
    s = np.zeros(n)
    z = np.zeros(n)
    r = np.zeros(n)
    r[:5] = 1.0
    s[5:n - 1] = 1.0
    z[n - 1] = 1.0
    return NodeTriple(s, z, r)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a reproducible scenario run needs."""

    graph: Graph
    initial: EpidemicState
    epidemic: EpidemicParams
    schedule: AttackSchedule
    oscillator: OscillatorParams
    report_horizon: float = 50.0
    steady_horizon: float = 200.0
    epidemic_dt: float = 0.01
    grid_iterations: int = 1000
    grid_dt: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.report_horizon <= 0.0 or self.steady_horizon < self.report_horizon:
            raise ValueError("need 0 < report_horizon <= steady_horizon")


def scenario_from_dict(raw: dict[str, Any]) -> ScenarioConfig:
    """Build a config from parsed JSON; see the README for the schema."""
    preset = raw.get("preset")
    if preset is not None:
        if preset != WALPOLE_PRESET:
            raise ValueError(f"unknown preset {preset!r}")
        graph = walpole_graph()
        initial = walpole_node11_initial(graph.n)
    else:
        graph = read_graph(raw["graph_path"])
        triples = np.asarray(raw["initial"], dtype=float)
        initial = NodeTriple(triples[:, 0], triples[:, 1], triples[:, 2])
    ep = raw.get("epidemic", {})
    sched_raw = raw.get("schedule", {})
    schedule = AttackSchedule(
        kind=sched_raw.get("kind", "continuous-low-rate"),
        base_rates=tuple(sched_raw.get("base_rates", (0.13, 0.13))),
        burst_multiplier=sched_raw.get("burst_multiplier", 5.0),
        burst_period=sched_raw.get("burst_period", 5),
        sample_interval=sched_raw.get("sample_interval"),
        k_hat=sched_raw.get("k_hat", 0.5),
        omega_hat=sched_raw.get("omega_hat", 0.5),
    )
    params = EpidemicParams(
        beta13=ep.get("beta13", schedule.base_rates[0]),
        beta23=ep.get("beta23", schedule.base_rates[1]),
        beta31=ep.get("beta31", 0.1),
        beta32=ep.get("beta32", 0.1),
        graph=graph,
    )
    osc_raw = raw.get("oscillator", {})
    oscillator = OscillatorParams(
        n=graph.n,
        omega=osc_raw.get("omega", 0.0),
        inertia=osc_raw.get("inertia", 1.0),
        damping=osc_raw.get("damping", 0.1),
        coupling=osc_raw.get("coupling", 10.0),
        adjacency=graph.adjacency if osc_raw.get("adjacency_weighted", False) else None,
    )
    return ScenarioConfig(
        graph=graph, initial=initial, epidemic=params, schedule=schedule,
        oscillator=oscillator,
        report_horizon=raw.get("report_horizon", 50.0),
        steady_horizon=raw.get("steady_horizon", 200.0),
        epidemic_dt=raw.get("epidemic_dt", 0.01),
        grid_iterations=raw.get("grid_iterations", 1000),
        grid_dt=raw.get("grid_dt", 0.01),
        seed=raw.get("seed", 0),
    )


@dataclass(frozen=True)
class ScenarioReport:
    """Run summary: produced files and the two histogram snapshots."""

    out_dir: Path
    files: tuple[str, ...]
    histogram_mid: InfectionHistogram
    histogram_final: InfectionHistogram
    steady_infection: np.ndarray


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, names: Sequence[str], partial: bool) -> None:
    entries = [{"name": name,
                "sha256": _sha256(out_dir / name),
                "bytes": (out_dir / name).stat().st_size}
               for name in names]
    payload = {"partial": partial, "files": entries}
    (out_dir / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _histogram_json(h: InfectionHistogram) -> dict[str, Any]:
    return {"buckets": ["[0,0.25)", "[0.25,0.5)", "[0.5,0.75)", "[0.75,1]"],
            "counts": list(h.counts)}


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path) -> ScenarioReport:
    """Run the full pipeline and write the report bundle.

    Emits six data files plus ``manifest.json``:
    epidemic_trajectory.csv, steady_state.json, histogram_mid.json,
    histogram_final.json, grid_frequencies.csv, excursion_stats.json.
    On failure the manifest still lists whatever was produced, flagged
    partial, and the error propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced: list[str] = []
    try:
        traj, steady = simulate_epidemic(cfg.initial, cfg.epidemic, cfg.schedule,
                                         cfg.steady_horizon, cfg.epidemic_dt)
        traj.to_csv(out / "epidemic_trajectory.csv")
        produced.append("epidemic_trajectory.csv")
        steady_state_to_json(steady, out / "steady_state.json")
        produced.append("steady_state.json")

        steps_per_unit = (len(traj.times) - 1) / cfg.steady_horizon
        mid_idx = round(0.5 * cfg.report_horizon * steps_per_unit)
        final_idx = round(cfg.report_horizon * steps_per_unit)
        hist_mid = bucket_histogram(traj.z[mid_idx])
        hist_final = bucket_histogram(traj.z[final_idx])
        for name, h, idx in (("histogram_mid.json", hist_mid, mid_idx),
                             ("histogram_final.json", hist_final, final_idx)):
            payload = _histogram_json(h)
            payload["t"] = float(f"{traj.times[idx]:.11e}")
            (out / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")
            produced.append(name)

        freq = simulate_grid(np.clip(steady, 0.0, 1.0), cfg.oscillator,
                             cfg.schedule, cfg.grid_iterations, cfg.grid_dt,
                             seed=cfg.seed)
        freq.to_csv(out / "grid_frequencies.csv")
        produced.append("grid_frequencies.csv")
        excursions_to_json(freq, out / "excursion_stats.json")
        produced.append("excursion_stats.json")
    except BaseException:
        _write_manifest(out, produced, partial=True)
        raise
    _write_manifest(out, produced, partial=False)
    return ScenarioReport(out_dir=out, files=tuple(produced),
                          histogram_mid=hist_mid, histogram_final=hist_final,
                          steady_infection=steady)
