"""Second-order Kuramoto model of grid bus frequencies under attack.

Buses are homogeneous coupled oscillators in a frame rotating at the
nominal 50 Hz; theta_dot is the angular-frequency deviation from that
frame. The adversarial disturbance is a per-node kick of magnitude
k_hat * omega_hat whose presence is Bernoulli in the node's infection
probability, resampled every ``sample_interval`` integration steps and
held constant in between.

Coupling is all-to-all as in the source model; an adjacency-weighted
variant is available behind ``OscillatorParams.adjacency`` for topology
experiments, default off.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

NOMINAL_HZ = 50.0
DEFAULT_BAND = (49.5, 50.5)

SEQUENTIAL = "sequential"
LOW_RATE = "continuous-low-rate"


@dataclass(frozen=True)
class OscillatorParams:
    """Homogeneous oscillator parameters; K/n is the coupling strength.

    ``adjacency`` switches on the adjacency-weighted coupling variant.
    """

    n: int
    omega: float = 0.0
    inertia: float = 1.0
    damping: float = 0.1
    coupling: float = 10.0
    adjacency: np.ndarray | None = None

    def __post_init__(self):
        if self.inertia <= 0.0:
            raise ValueError("inertia must be positive")
        if self.damping < 0.0 or self.coupling < 0.0:
            raise ValueError("damping and coupling must be nonnegative")
        if self.adjacency is not None:
            a = np.asarray(self.adjacency, dtype=float)
            if a.shape != (self.n, self.n):
                raise ValueError("adjacency must be n x n")
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, "adjacency", a)


@dataclass(frozen=True)
class OscillatorState:
    """Phases and frequency deviations, one entry per bus."""

    theta: np.ndarray
    theta_dot: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        td = np.asarray(self.theta_dot, dtype=float)
        if th.shape != td.shape or th.ndim != 1:
            raise ValueError("theta and theta_dot must be equal-length vectors")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(td))):
            raise ValueError("oscillator state must be finite")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "theta_dot", td)


@dataclass(frozen=True)
class AttackSchedule:
    """Cyber-attack parameterization shared by the epidemic and grid stages.

    ``sequential`` bursts the infection rates by ``burst_multiplier`` on
    every iteration divisible by ``burst_period``; ``continuous-low-rate``
    keeps the base rates throughout. ``sample_interval`` defaults to 150
    iterations for the low-rate attack and 100 for the sequential one;
    ``k_hat * omega_hat`` is the disturbance magnitude.
    """

    kind: str = LOW_RATE
    base_rates: tuple[float, float] = (0.13, 0.13)
    burst_multiplier: float = 5.0
    burst_period: int = 5
    sample_interval: int | None = None
    k_hat: float = 0.5
    omega_hat: float = 0.5

    def __post_init__(self):
        if self.kind not in (SEQUENTIAL, LOW_RATE):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.burst_multiplier < 1.0:
            raise ValueError("burst multiplier must be >= 1")
        if self.burst_period < 1:
            raise ValueError("burst period must be >= 1")
        if self.sample_interval is None:
            object.__setattr__(self, "sample_interval",
                               100 if self.kind == SEQUENTIAL else 150)
        if self.sample_interval < 1:
            raise ValueError("sample interval must be >= 1")


def schedule_rates(sched: AttackSchedule, iteration: int) -> tuple[float, float]:
    """Effective (beta13, beta23) at an integration step."""
    if iteration < 0:
        raise ValueError("iteration must be nonnegative")
    b13, b23 = sched.base_rates
    if sched.kind == SEQUENTIAL and iteration % sched.burst_period == 0:
        return b13 * sched.burst_multiplier, b23 * sched.burst_multiplier
    return b13, b23


def kuramoto_rhs(state: OscillatorState, p: OscillatorParams,
                 zeta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(theta_dot, theta_ddot) under disturbance zeta."""
    theta, theta_dot = state.theta, state.theta_dot
    if len(zeta) != p.n:
        raise ValueError("zeta must have one entry per bus")
    if p.adjacency is None:
        # sum_j sin(theta_i - theta_j) = sin(theta_i) sum cos - cos(theta_i) sum sin
        sin_t, cos_t = np.sin(theta), np.cos(theta)
        coup = sin_t * cos_t.sum() - cos_t * sin_t.sum()
    else:
        coup = (p.adjacency * np.sin(theta[:, None] - theta[None, :])).sum(axis=1)
    acc = (p.omega / p.inertia
           - p.coupling / (p.n * p.inertia) * coup
           - p.damping / p.inertia * theta_dot
           + zeta)
    return theta_dot, acc


def sample_disturbance(infection: np.ndarray, sched: AttackSchedule,
                       rng_seed) -> np.ndarray:
    """Per-node disturbance draw: attacked ~ Bernoulli(infection_i), sign
    uniform, magnitude k_hat * omega_hat. Deterministic given the seed."""
    infection = np.asarray(infection, dtype=float)
    if np.any(infection < -1e-12) or np.any(infection > 1.0 + 1e-12):
        raise ValueError("infection probabilities must lie in [0, 1]")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) \
        else np.random.default_rng(rng_seed)
    attacked = rng.random(len(infection)) < infection
    signs = 2.0 * rng.integers(0, 2, len(infection)) - 1.0
    return attacked * signs * (sched.k_hat * sched.omega_hat)


@dataclass(frozen=True)
class FrequencyTrajectory:
    """Per-bus reported frequencies (Hz) over the integration grid."""

    times: np.ndarray
    freq: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    dt: float
    out_of_band: np.ndarray = field(default=None)  # per-node excursion flag

    def __post_init__(self):
        if self.out_of_band is None:
            low, high = DEFAULT_BAND
            flags = np.any((self.freq < low) | (self.freq > high), axis=0)
            object.__setattr__(self, "out_of_band", flags)

    def to_csv(self, path: str | Path) -> None:
        """Write ``t,f_1..f_n`` rows at 12 significant digits."""
        n = self.freq.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"f_{i}" for i in range(1, n + 1)])
            for t, row in zip(self.times, self.freq):
                writer.writerow([f"{val:.11e}" for val in (t, *row)])


def simulate_grid(infection: np.ndarray, p: OscillatorParams, sched: AttackSchedule,
                  iterations: int, dt: float = 0.01, seed: int = 0,
                  state0: OscillatorState | None = None) -> FrequencyTrajectory:
    """Integrate the disturbed oscillators driven by steady-state infection.

    One iteration is one RK4 step of length ``dt``. The disturbance is
    redrawn on every step divisible by ``sched.sample_interval`` and held
    constant in between. Reported per-bus frequency is
    50 Hz + theta_dot / (2 pi).
    """
    infection = np.asarray(infection, dtype=float)
    if len(infection) != p.n:
        raise ValueError("infection vector length must match bus count")
    if state0 is None:
        state0 = OscillatorState(np.zeros(p.n), np.zeros(p.n))
    rng = np.random.default_rng(seed)
    theta = state0.theta.copy()
    theta_dot = state0.theta_dot.copy()
    thetas = np.empty((iterations + 1, p.n))
    dots = np.empty_like(thetas)
    thetas[0], dots[0] = theta, theta_dot
    zeta = np.zeros(p.n)

    def acc(th, td, z):
        st = OscillatorState(th, td)
        return kuramoto_rhs(st, p, z)[1]

    for step in range(iterations):
        if step % sched.sample_interval == 0:
            zeta = sample_disturbance(infection, sched, rng)
        k1v = theta_dot
        k1a = acc(theta, theta_dot, zeta)
        k2v = theta_dot + 0.5 * dt * k1a
        k2a = acc(theta + 0.5 * dt * k1v, k2v, zeta)
        k3v = theta_dot + 0.5 * dt * k2a
        k3a = acc(theta + 0.5 * dt * k2v, k3v, zeta)
        k4v = theta_dot + dt * k3a
        k4a = acc(theta + dt * k3v, k4v, zeta)
        theta = theta + dt * (k1v + 2.0 * (k2v + k3v) + k4v) / 6.0
        theta_dot = theta_dot + dt * (k1a + 2.0 * (k2a + k3a) + k4a) / 6.0
        thetas[step + 1], dots[step + 1] = theta, theta_dot
    times = dt * np.arange(iterations + 1)
    freq = NOMINAL_HZ + dots / (2.0 * np.pi)
    return FrequencyTrajectory(times=times, freq=freq, theta=thetas,
                               theta_dot=dots, dt=dt)


def frequency_excursion_stats(traj: FrequencyTrajectory,
                              band: tuple[float, float] = DEFAULT_BAND
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Per-node (peak |f - 50|, total time outside the band).

    Every sample outside the band contributes one ``dt`` of dwell time.
    """
    low, high = band
    if low >= high:
        raise ValueError("band must satisfy low < high")
    peak = np.max(np.abs(traj.freq - NOMINAL_HZ), axis=0)
    outside = (traj.freq < low) | (traj.freq > high)
    return peak, outside.sum(axis=0) * traj.dt


def excursions_to_json(traj: FrequencyTrajectory, path: str | Path,
                       band: tuple[float, float] = DEFAULT_BAND) -> None:
    peak, dwell = frequency_excursion_stats(traj, band)
    payload = [{"node": i + 1,
                "peak_hz": float(f"{p:.11e}"),
                "time_outside_s": float(f"{d:.11e}")}
               for i, (p, d) in enumerate(zip(peak, dwell))]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
