"""Virus / failure propagation on a network.

The swarm model with the cross-inhibitory interaction removed: per-node
probabilities (s, z, r) where z is the infected (uncommitted) state,
beta13/beta23 are infection rates mediated by infected neighbours and
beta31/beta32 the curing rates. Includes the componentwise stability
threshold for the infection-free equilibria and the SIR limit reached as
beta32, beta13 -> 0.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Graph
from .errors import DegenerateMapping
from .grid import AttackSchedule, schedule_rates
from .stationary import ReducedValue
from .swarm import NetworkTrajectory, NodeTriple, _integrate_sr

STEADY_STATE_HORIZON = 200.0
STALENESS_TOL = 1e-6

# EpidemicState shares every invariant with the swarm node state
EpidemicState = NodeTriple


@dataclass(frozen=True)
class EpidemicParams:
    """Infection (beta13, beta23) and curing (beta31, beta32) rates over a
    strongly connected graph. The threshold results assume all rates
    positive; zero infection rates are accepted for baseline runs."""

    beta13: float
    beta23: float
    beta31: float
    beta32: float
    graph: Graph

    def __post_init__(self):
        if any(v < 0.0 for v in (self.beta13, self.beta23, self.beta31, self.beta32)):
            raise ValueError("epidemic rates must be nonnegative")
        if not self.graph.is_strongly_connected:
            raise ValueError("graph must be strongly connected")


def virus_network_rhs(state: EpidemicState, p: EpidemicParams
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node derivatives (ds, dz, dr); components sum to 0 exactly."""
    a_z = p.graph.adjacency @ state.z
    ds = -p.beta23 * state.s * a_z + p.beta32 * state.z
    dr = -p.beta13 * state.r * a_z + p.beta31 * state.z
    return ds, -(ds + dr), dr


def mfg_to_virus_map(p: EpidemicParams, x3: float) -> tuple[ReducedValue, float]:
    """Identify the game quantities that reproduce the virus rates.

    Returns y* = (-beta31, -beta32) and the disturbance weight
    Gamma13 = beta31 / (beta13 x3), chosen so that the worst-case
    disturbance Gamma13^{-1} (v3 - v1)^+ equals the infection rate
    beta13 x3 while (with R31 = R32 = 1) the optimal control recovers the
    curing rates.
    """
    if p.beta31 <= 0.0:
        raise DegenerateMapping("virus map needs beta31 > 0")
    if x3 <= 0.0 or p.beta13 <= 0.0:
        raise DegenerateMapping(
            f"virus map needs a positive infection pressure, got beta13 x3 = "
            f"{p.beta13 * x3}")
    return ReducedValue(-p.beta31, -p.beta32), p.beta31 / (p.beta13 * x3)


def stability_condition(s_star: np.ndarray, p: EpidemicParams
                        ) -> tuple[bool, np.ndarray]:
    """Componentwise threshold for the infection-free equilibria.

    Evaluates beta23 diag(s*) A 1 + beta13 diag(1 - s*) A 1 <
    (beta32 + beta31) 1 and returns the verdict together with the margin
    vector (right side minus left side, per node).
    """
    s_star = np.asarray(s_star, dtype=float)
    if np.any(s_star < -1e-12) or np.any(s_star > 1.0 + 1e-12):
        raise ValueError("s* must lie in [0, 1]^n")
    deg = p.graph.degrees()
    lhs = p.beta23 * s_star * deg + p.beta13 * (1.0 - s_star) * deg
    margin = (p.beta32 + p.beta31) - lhs
    return bool(np.all(margin > 0.0)), margin


def sir_limit_rhs(state: EpidemicState, beta23: float, beta31: float,
                  g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The SIR network dynamics reached as beta32, beta13 -> 0."""
    flow = beta23 * state.s * (g.adjacency @ state.z)
    recover = beta31 * state.z
    return -flow, -(-flow + recover), recover


def simulate_epidemic(state0: EpidemicState, p: EpidemicParams,
                      schedule: AttackSchedule | None, horizon: float,
                      dt: float = 1e-2
                      ) -> tuple[NetworkTrajectory, np.ndarray]:
    """Integrate the attack-driven propagation and report the final
    infection vector.

    When a schedule is given, its effective (beta13, beta23) replace the
    parameter values step by step (held constant within each RK4 step);
    the curing rates and graph always come from ``p``. The returned final
    z is the steady-state proxy fed to the grid stage; a warning is issued
    if it is still moving faster than 1e-6 per time unit.
    """
    a = p.graph.adjacency
    b31, b32 = p.beta31, p.beta32

    def rates_at(step: int) -> tuple[float, float]:
        if schedule is None:
            return p.beta13, p.beta23
        return schedule_rates(schedule, step)

    current = list(rates_at(0))

    def on_step(k: int) -> None:
        current[0], current[1] = rates_at(k)

    def rhs(_t, s, r):
        b13, b23 = current
        z = 1.0 - s - r
        a_z = a @ z
        ds = -b23 * s * a_z + b32 * z
        dr = -b13 * r * a_z + b31 * z
        return ds, dr

    times, s, r = _integrate_sr(state0.s, state0.r, rhs, horizon, dt,
                                on_step=on_step)
    z = 1.0 - s - r
    traj = NetworkTrajectory(times=times, s=s, z=z, r=r)
    if len(times) > 1:
        final = NodeTriple(np.clip(s[-1], 0, 1), np.clip(z[-1], 0, 1),
                           np.clip(r[-1], 0, 1))
        b13, b23 = rates_at(max(len(times) - 2, 0))
        frozen = EpidemicParams(b13, b23, b31, b32, p.graph)
        _, dz, _ = virus_network_rhs(final, frozen)
        if np.max(np.abs(dz)) >= STALENESS_TOL:
            warnings.warn(
                f"infection still moving at {np.max(np.abs(dz)):.2e}/unit at "
                f"t={horizon:g}; extend the horizon for a cleaner steady state",
                stacklevel=2)
    return traj, z[-1].copy()


def steady_state_to_json(z: np.ndarray, path: str | Path) -> None:
    """Node-id keyed array of per-node infection probabilities."""
    payload = [{"node": i + 1, "infection": float(f"{v:.11e}")}
               for i, v in enumerate(np.asarray(z, dtype=float))]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
