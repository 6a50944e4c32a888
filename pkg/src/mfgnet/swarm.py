"""Honeybee collective decision-making.

Mean-field evolutionary dynamics for the committed/uncommitted populations,
the reduction map that realizes them as a special case of the robust
mean-field game, and the finite-N network model where per-node commitment
probabilities evolve under neighbour-mediated (primed) and spontaneous
(double-primed) rates.

Node state convention throughout: r_i, s_i, z_i are the probabilities of
node i being committed to option 1, committed to option 2, and
uncommitted, respectively; triples are passed around as (s, z, r).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Graph, SimplexState
from .errors import DegenerateMapping, HypothesisViolated, StepTooLarge
from .stationary import ReducedValue

UNIT_LEAVE_TOL = 1e-6       # beyond this an integration step is rejected
EQUILIBRIUM_TOL = 1e-12


@dataclass(frozen=True)
class SwarmParams:
    """Mean-field honeybee rates.

    gamma: spontaneous commitment, r: waggle-dance recruitment,
    sigma: cross-inhibition, alpha: spontaneous abandonment. Index 1/2 is
    the option the bees are committed to.
    """

    gamma1: float
    gamma2: float
    r1: float
    r2: float
    sigma1: float
    sigma2: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        vals = (self.gamma1, self.gamma2, self.r1, self.r2,
                self.sigma1, self.sigma2, self.alpha1, self.alpha2)
        if any(v < 0.0 for v in vals):
            raise ValueError("swarm rates must be nonnegative")


@dataclass(frozen=True)
class ArcRates:
    """Per-arc rates of the chain, one value per live arc."""

    b13: float
    b31: float
    b23: float
    b32: float

    def __post_init__(self):
        if any(v < 0.0 for v in (self.b13, self.b31, self.b23, self.b32)):
            raise ValueError("arc rates must be nonnegative")


@dataclass(frozen=True)
class NetworkSwarmParams:
    """Finite-network swarm rates over a strongly connected graph.

    ``prime`` rates multiply neighbour-mediated interactions, the
    ``doubleprime`` rates are spontaneous. The consensus results require
    all rates positive; the spontaneous abandonment rates (b23'', b13'')
    must vanish for full commitment to be an exact equilibrium, so zero is
    accepted here.
    """

    prime: ArcRates
    doubleprime: ArcRates
    graph: Graph

    def __post_init__(self):
        if not self.graph.is_strongly_connected:
            raise ValueError("interaction graph must be strongly connected")


@dataclass(frozen=True)
class NodeTriple:
    """Per-node state probabilities (s, z, r), each in [0, 1]^n."""

    s: np.ndarray
    z: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        z = np.asarray(self.z, dtype=float)
        r = np.asarray(self.r, dtype=float)
        n = len(s)
        if len(z) != n or len(r) != n:
            raise ValueError("s, z, r must share a length")
        stacked = np.stack([s, z, r])
        if np.any(stacked < -1e-9) or np.any(stacked > 1.0 + 1e-9):
            raise ValueError("probabilities must lie in [0, 1]")
        if np.any(np.abs(s + z + r - 1.0) > 1e-9):
            raise ValueError("per-node probabilities must sum to 1")
        for arr in (s, z, r):
            arr.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.s)


def uniform_triple(n: int, s: float, z: float, r: float) -> NodeTriple:
    return NodeTriple(np.full(n, s), np.full(n, z), np.full(n, r))


def honeybee_meanfield_rhs(x: SimplexState, p: SwarmParams) -> np.ndarray:
    """Mean-field commitment dynamics; components sum to 0 exactly."""
    d1 = x.x3 * (x.x1 * p.r1 + p.gamma1) - x.x1 * (x.x2 * p.sigma2 + p.alpha1)
    d2 = x.x3 * (x.x2 * p.r2 + p.gamma2) - x.x2 * (x.x1 * p.sigma1 + p.alpha2)
    return np.array([d1, d2, -(d1 + d2)])


def mfg_to_swarm_map(p: SwarmParams, x: SimplexState) -> tuple[ReducedValue, float]:
    """Identify the game quantities that reproduce the swarm rates.

    Returns the stationary value differences y* = (-gamma1 - r1 x1,
    -gamma2 - r2 x2) and the disturbance weight Gamma13 =
    (gamma1 + r1 x1) / (alpha1 + sigma2 x2). With R31 = R32 = 1, feeding
    these through the game's best responses recovers the recruitment rates
    as controls and the abandonment rate as the worst-case disturbance.
    """
    recruit = p.gamma1 + p.r1 * x.x1
    abandon = p.alpha1 + p.sigma2 * x.x2
    if abandon <= 0.0 or recruit <= 0.0:
        raise DegenerateMapping(
            f"swarm map needs positive rates, got 3->1 {recruit}, 1->3 {abandon}")
    y = ReducedValue(-recruit, -(p.gamma2 + p.r2 * x.x2))
    return y, recruit / abandon


def swarm_network_rhs(state: NodeTriple, p: NetworkSwarmParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node derivatives (ds, dz, dr); each node's components sum to 0 exactly."""
    a = p.graph.adjacency
    bp, bpp = p.prime, p.doubleprime
    s, z, r = state.s, state.z, state.r
    a_s = a @ s
    a_r = a @ r
    ds = -bp.b23 * s * a_r + bp.b32 * z * a_s - bpp.b23 * s + bpp.b32 * z
    dr = -bp.b13 * r * a_s + bp.b31 * z * a_r - bpp.b13 * r + bpp.b31 * z
    return ds, -(ds + dr), dr


def _consensus_verdict(j11: np.ndarray, j12: np.ndarray,
                       j21: np.ndarray, j22: np.ndarray) -> str:
    """Stability test used in the consensus proofs: negative trace plus
    row diagonal dominance of the per-node 2x2 blocks."""
    trace_ok = np.all(j11 + j22 < 0.0)
    dominant = np.all(np.abs(j11) > np.abs(j12)) and np.all(np.abs(j22) > np.abs(j21))
    if trace_ok and dominant:
        return "stable"
    return "saddle"


@dataclass(frozen=True)
class SwarmEquilibrium:
    """A candidate equilibrium with its residual and stability verdict.

    ``is_equilibrium`` is the residual test at 1e-12; the consensus pairs
    only pass it when the spontaneous abandonment rates vanish.
    """

    state: NodeTriple
    residual: float
    is_equilibrium: bool
    stability: str
    label: str


def _residual(state: NodeTriple, p: NetworkSwarmParams) -> float:
    ds, dz, dr = swarm_network_rhs(state, p)
    return float(max(np.max(np.abs(ds)), np.max(np.abs(dz)), np.max(np.abs(dr))))


def swarm_equilibria(p: NetworkSwarmParams, k: float | None = None) -> list[SwarmEquilibrium]:
    """Consensus equilibria, plus the symmetric deadlock when the
    connectivity-proportional rate hypothesis holds.

    With ``k`` given, the hypothesis b23' = k b32', b23'' = k b32'' (and its
    mirror for the 1<->3 arcs, needed for the committed-to-1 balance) is
    checked to 1e-12 and ``HypothesisViolated`` raised on failure. The
    symmetric equilibrium puts mass 1/(2+k) on each committed state per
    node, leaving uncommitted mass k/(2+k).

    Stability verdicts come from the trace/diagonal-dominance test on the
    per-node 2x2 blocks of the linearization; residuals are reported, not
    asserted.
    """
    n = p.graph.n
    d = p.graph.degrees()
    bp, bpp = p.prime, p.doubleprime
    out = []

    state10 = uniform_triple(n, s=1.0, z=0.0, r=0.0)
    verdict = _consensus_verdict(
        j11=np.full(n, -(bpp.b23 + bpp.b32)),
        j12=-(bp.b23 + bp.b32) * d - bpp.b32,
        j21=np.full(n, -bpp.b31),
        j22=-bp.b13 * d - bpp.b13 - bpp.b31,
    )
    res = _residual(state10, p)
    out.append(SwarmEquilibrium(state10, res, res < EQUILIBRIUM_TOL, verdict,
                                "consensus-option-2"))

    state01 = uniform_triple(n, s=0.0, z=0.0, r=1.0)
    verdict = _consensus_verdict(
        j11=-bp.b23 * d - bpp.b23 - bpp.b32,
        j12=np.full(n, -bpp.b32),
        j21=-(bp.b13 + bp.b31) * d - bpp.b31,
        j22=np.full(n, -(bpp.b13 + bpp.b31)),
    )
    res = _residual(state01, p)
    out.append(SwarmEquilibrium(state01, res, res < EQUILIBRIUM_TOL, verdict,
                                "consensus-option-1"))

    if k is not None:
        if k <= 0.0:
            raise ValueError("k must be positive")
        pairs = [(bp.b23, k * bp.b32), (bpp.b23, k * bpp.b32),
                 (bp.b13, k * bp.b31), (bpp.b13, k * bpp.b31)]
        for got, want in pairs:
            if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                raise HypothesisViolated(
                    f"rates are not k-proportional: {got} != {want} for k={k}")
        c = 1.0 / (2.0 + k)
        sym = uniform_triple(n, s=c, z=1.0 - 2.0 * c, r=c)
        j_s = -bp.b32 * d - bpp.b32
        j_r = -bp.b31 * d - bpp.b31
        # determinant of each block is exactly zero; the proof's criterion
        # reduces to the sign of the trace
        verdict = "stable" if np.all(j_s + j_r < 0.0) else "unstable"
        res = _residual(sym, p)
        out.append(SwarmEquilibrium(sym, res, res < EQUILIBRIUM_TOL, verdict,
                                    f"symmetric-k={k:g}"))
    return out


@dataclass(frozen=True)
class NetworkTrajectory:
    """Per-node trajectory of a (s, z, r) network model."""

    times: np.ndarray
    s: np.ndarray
    z: np.ndarray
    r: np.ndarray

    def state(self, k: int) -> NodeTriple:
        return NodeTriple(self.s[k].copy(), self.z[k].copy(), self.r[k].copy())

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def to_csv(self, path: str | Path) -> None:
        """Write ``t,s_1..s_n,z_1..z_n,r_1..r_n`` rows at 12 significant digits."""
        n = self.s.shape[1]
        header = (["t"] + [f"s_{i}" for i in range(1, n + 1)]
                  + [f"z_{i}" for i in range(1, n + 1)]
                  + [f"r_{i}" for i in range(1, n + 1)])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, sr, zr, rr in zip(self.times, self.s, self.z, self.r):
                writer.writerow([f"{val:.11e}" for val in (t, *sr, *zr, *rr)])


def _integrate_sr(s0: np.ndarray, r0: np.ndarray, rhs_sr, horizon: float,
                  dt: float, on_step=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shared fixed-step RK4 for (s, r) network systems with z = 1 - s - r.

    ``on_step(k)`` runs before step k; it lets callers freeze step-indexed
    inputs (attack rates) across the four stages.
    """
    steps = max(1, round(horizon / dt)) if horizon > 0 else 0
    h = horizon / steps if steps else 0.0
    times = np.linspace(0.0, horizon, steps + 1)
    s_out = np.empty((steps + 1, len(s0)))
    r_out = np.empty_like(s_out)
    s, r = s0.astype(float).copy(), r0.astype(float).copy()
    s_out[0], r_out[0] = s, r
    for k in range(steps):
        if on_step is not None:
            on_step(k)
        t = times[k]
        k1s, k1r = rhs_sr(t, s, r)
        k2s, k2r = rhs_sr(t + 0.5 * h, s + 0.5 * h * k1s, r + 0.5 * h * k1r)
        k3s, k3r = rhs_sr(t + 0.5 * h, s + 0.5 * h * k2s, r + 0.5 * h * k2r)
        k4s, k4r = rhs_sr(t + h, s + h * k3s, r + h * k3r)
        s = s + h * (k1s + 2.0 * (k2s + k3s) + k4s) / 6.0
        r = r + h * (k1r + 2.0 * (k2r + k3r) + k4r) / 6.0
        z = 1.0 - s - r
        low = min(s.min(), r.min(), z.min())
        high = max(s.max(), r.max(), z.max())
        if low < -UNIT_LEAVE_TOL or high > 1.0 + UNIT_LEAVE_TOL:
            raise StepTooLarge(f"state left [0,1]^n at t={times[k + 1]:.6g}")
        s_out[k + 1], r_out[k + 1] = s, r
    return times, s_out, r_out


def simulate_swarm(state0: NodeTriple, p: NetworkSwarmParams, horizon: float,
                   dt: float = 1e-2) -> NetworkTrajectory:
    """RK4 trajectory of the network swarm model; [0,1]^n is invariant."""
    a = p.graph.adjacency
    bp, bpp = p.prime, p.doubleprime

    def rhs(_t, s, r):
        z = 1.0 - s - r
        a_s = a @ s
        a_r = a @ r
        ds = -bp.b23 * s * a_r + bp.b32 * z * a_s - bpp.b23 * s + bpp.b32 * z
        dr = -bp.b13 * r * a_s + bp.b31 * z * a_r - bpp.b13 * r + bpp.b31 * z
        return ds, dr

    times, s, r = _integrate_sr(state0.s, state0.r, rhs, horizon, dt)
    return NetworkTrajectory(times=times, s=s, z=1.0 - s - r, r=r)
