"""The 3-state robust mean-field game.

Forward piece: Kolmogorov dynamics of the population distribution under
given transition rates. Backward piece: Hamilton-Jacobi ODEs for the value
of the reference player facing an adversarial disturbance. The two are
coupled through the closed-form best responses

    rho_i* = -R_i^{-1} [Delta_i v]^-      (control, nonnegative rates)
    w_i*   =  Gamma_i^{-1} [Delta_i v]^+  (worst-case disturbance)

and the coupled initial-terminal value problem is solved by damped Picard
iteration on the distribution trajectory.

Inner integration loops run on plain floats: the state is tiny (two to
three scalars) and array overhead would dominate at the default step.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import CostWeights, RateMatrix, SimplexState, ValueVector, make_rate_matrix, make_simplex
from .errors import RegimeViolation, StepTooLarge

SIMPLEX_LEAVE_TOL = 1e-6    # beyond this an integration step is rejected
_REGIME_GUARD = 1e-12


@dataclass(frozen=True)
class Trajectory:
    """Time grid with distribution states and (optionally) values.

    ``x`` has one row (x1, x2, x3) per grid point; ``v`` one row
    (v1, v2, v3) or None for forward-only runs. ITVP output carries the
    convergence tag and the fixed-point residual.
    """

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray | None = None
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or (len(t) > 1 and np.any(np.diff(t) <= 0.0)):
            raise ValueError("times must be strictly increasing")
        for arr in (self.x, self.v):
            if arr is not None and arr.shape != (len(t), 3):
                raise ValueError("state arrays must be (len(times), 3)")

    def state(self, k: int) -> SimplexState:
        return make_simplex(*self.x[k])

    def value(self, k: int) -> ValueVector:
        if self.v is None:
            raise ValueError("trajectory carries no values")
        return ValueVector(*self.v[k])

    def to_csv(self, path: str | Path) -> None:
        """Write ``t,x1,x2,x3,v1,v2,v3`` rows at 12 significant digits."""
        v = self.v if self.v is not None else np.full_like(self.x, np.nan)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x1", "x2", "x3", "v1", "v2", "v3"])
            for t, xr, vr in zip(self.times, self.x, v):
                writer.writerow([f"{val:.11e}" for val in (t, *xr, *vr)])


@dataclass(frozen=True)
class ItvpConfig:
    """Solver parameters for the coupled forward-backward problem."""

    horizon: float
    dt: float = 1e-3
    relaxation: float = 0.5
    tolerance: float = 1e-9
    max_iterations: int = 200

    def __post_init__(self):
        if self.horizon < 0.0:
            raise ValueError("horizon must be nonnegative")
        if self.horizon > 0.0 and not 0.0 < self.dt <= self.horizon:
            raise ValueError("need 0 < dt <= horizon")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must be in (0, 1]")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class AgentPath:
    """One sampled agent: visited states and the times they were entered.

    ``states[0]`` is the initial state at ``jump_times[0]`` (the start of
    the horizon); every later entry is an actual jump.
    """

    jump_times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.jump_times) != len(self.states):
            raise ValueError("jump_times and states must align")
        if np.any(np.diff(self.jump_times) < 0.0):
            raise ValueError("jump times must be increasing")
        if np.any(self.states[1:] == self.states[:-1]):
            raise ValueError("consecutive states must differ")


def difference_operator(v: ValueVector, i: int) -> np.ndarray:
    """Delta_i v = (v1 - v_i, v2 - v_i, v3 - v_i); the i-th entry is 0."""
    if i not in (1, 2, 3):
        raise ValueError("state index must be in {1, 2, 3}")
    vi = v.component(i)
    return np.array([v.v1 - vi, v.v2 - vi, v.v3 - vi], dtype=float)


def _chain_difference(v: ValueVector, i: int) -> np.ndarray:
    """Delta_i v with the forbidden 1<->2 arc masked out.

    The prohibitive cross cost is realized in its exact limit: the 1->2 and
    2->1 components of every control, disturbance and Hamiltonian are zero,
    whatever finite value the weight matrices store there.
    """
    d = difference_operator(v, i)
    if i == 1:
        d[1] = 0.0
    elif i == 2:
        d[0] = 0.0
    return d


def optimal_control(v: ValueVector, i: int, w: CostWeights) -> np.ndarray:
    """Optimal transition rates out of state i, rho_i* = -R_i^{-1}[Delta_i v]^-.

    The i-th component of the result is 0; the bookkeeping diagonal value
    rho_ii = -sum_{j != i} rho_ij is a convention the forward dynamics
    never read. The 1<->2 component is exactly 0 (infinite-cost limit).
    """
    d = _chain_difference(v, i)
    return -np.minimum(d, 0.0) / w.r[i - 1] + 0.0


def worst_disturbance(v: ValueVector, i: int, w: CostWeights) -> np.ndarray:
    """Worst-case disturbance rates out of state i, Gamma_i^{-1}[Delta_i v]^+.

    Same 1<->2 convention as ``optimal_control``.
    """
    d = _chain_difference(v, i)
    return np.maximum(d, 0.0) / w.gamma[i - 1]


def hamiltonian(x: SimplexState, v: ValueVector, i: int, w: CostWeights) -> float:
    """Closed-form robust Hamiltonian at state i.

    Equals the saddle value g(i, x_i, rho*) - (1/2)||w*||^2_Gamma
    + (rho* + w*)' Delta_i v of the inner min-max, with the forbidden
    1<->2 arc contributing nothing.
    """
    d = _chain_difference(v, i)
    neg = np.minimum(d, 0.0)
    pos = np.maximum(d, 0.0)
    quad = -0.5 * float(neg @ (neg / w.r[i - 1])) + 0.5 * float(pos @ (pos / w.gamma[i - 1]))
    return quad + w.congestion(i, x.component(i))


def kolmogorov_rhs(x: SimplexState, beta: RateMatrix) -> np.ndarray:
    """Time derivative of the distribution; components sum to 0 exactly."""
    b = beta.beta
    d1 = x.x3 * b[2, 0] - x.x1 * b[0, 2]
    d2 = x.x3 * b[2, 1] - x.x2 * b[1, 2]
    return np.array([d1, d2, -(d1 + d2)])


def _hjb_rhs_scalar(x1: float, x2: float, x3: float,
                    v1: float, v2: float, v3: float,
                    w: CostWeights) -> tuple[float, float, float]:
    """Specialized value dynamics for the v1, v2 < v3 regime.

    The prohibitive 1<->2 entries are dropped exactly (the zero-rate limit
    used everywhere else in the package).
    """
    g = w.gamma
    r = w.r
    y1 = v1 - v3
    y2 = v2 - v3
    f1, f2, f3 = w.f
    dv1 = -0.5 * y1 * y1 / g[0, 2] - f1(x1)
    dv2 = -0.5 * y2 * y2 / g[1, 2] - f2(x2)
    dv3 = 0.5 * (y1 * y1 / r[2, 0] + y2 * y2 / r[2, 1]) - f3(x3)
    return dv1, dv2, dv3


def hjb_rhs(x: SimplexState, v: ValueVector, w: CostWeights) -> np.ndarray:
    """Time derivative of the value vector, dv_i/dt = -H_i.

    In the v1, v2 < v3 regime the specialized quadratic form applies; if
    the regime is violated a ``RegimeViolation`` warning is emitted and the
    general closed-form Hamiltonian is evaluated instead.
    """
    if v.v1 - v.v3 > _REGIME_GUARD or v.v2 - v.v3 > _REGIME_GUARD:
        warnings.warn(f"value vector {v} violates v1, v2 < v3", RegimeViolation,
                      stacklevel=2)
        return np.array([-hamiltonian(x, v, i, w) for i in (1, 2, 3)])
    return np.array(_hjb_rhs_scalar(x.x1, x.x2, x.x3, v.v1, v.v2, v.v3, w))


def rate_matrix_from_values(v: ValueVector, w: CostWeights) -> RateMatrix:
    """Chain rates beta* = rho* + w* induced by a value vector."""
    rho3 = optimal_control(v, 3, w) + worst_disturbance(v, 3, w)
    out1 = optimal_control(v, 1, w) + worst_disturbance(v, 1, w)
    out2 = optimal_control(v, 2, w) + worst_disturbance(v, 2, w)
    return make_rate_matrix(beta31=rho3[0], beta32=rho3[1],
                            beta13=out1[2], beta23=out2[2])


def _grid(horizon: float, dt: float) -> tuple[np.ndarray, float, int]:
    """Uniform grid covering [0, horizon]; dt is nudged to divide evenly."""
    if horizon == 0.0:
        return np.zeros(1), 0.0, 0
    steps = max(1, round(horizon / dt))
    h = horizon / steps
    return np.linspace(0.0, horizon, steps + 1), h, steps


def _check_inside(x1: float, x2: float, where: str) -> None:
    x3 = 1.0 - x1 - x2
    if min(x1, x2, x3) < -SIMPLEX_LEAVE_TOL or max(x1, x2, x3) > 1.0 + SIMPLEX_LEAVE_TOL:
        raise StepTooLarge(f"state ({x1}, {x2}, {x3}) left the simplex {where}")


def integrate_forward(x0: SimplexState, beta_of_t, horizon: float, dt: float) -> Trajectory:
    """RK4 trajectory of the mass-conserving Kolmogorov dynamics.

    ``beta_of_t`` is a ``RateMatrix`` or a callable t -> RateMatrix. x3 is
    reconstructed as 1 - x1 - x2 at every step so the mass stays exact.
    """
    if callable(beta_of_t):
        rates = beta_of_t
    else:
        const = beta_of_t
        rates = lambda t: const
    times, h, steps = _grid(horizon, dt)

    def slopes(t: float, x1: float, x2: float) -> tuple[float, float]:
        b = rates(t).beta
        x3 = 1.0 - x1 - x2
        return x3 * b[2, 0] - x1 * b[0, 2], x3 * b[2, 1] - x2 * b[1, 2]

    xs = np.empty((steps + 1, 3))
    x1, x2 = x0.x1, x0.x2
    xs[0] = (x1, x2, 1.0 - x1 - x2)
    for k in range(steps):
        t = times[k]
        k1a, k1b = slopes(t, x1, x2)
        k2a, k2b = slopes(t + 0.5 * h, x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b)
        k3a, k3b = slopes(t + 0.5 * h, x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b)
        k4a, k4b = slopes(t + h, x1 + h * k3a, x2 + h * k3b)
        x1 += h * (k1a + 2.0 * (k2a + k3a) + k4a) / 6.0
        x2 += h * (k1b + 2.0 * (k2b + k3b) + k4b) / 6.0
        _check_inside(x1, x2, f"at t={times[k + 1]:.6g}")
        # clip integrator dust so stored states satisfy the simplex invariants
        x1 = min(max(x1, 0.0), 1.0)
        x2 = min(max(x2, 0.0), 1.0)
        xs[k + 1] = (x1, x2, 1.0 - x1 - x2)
    return Trajectory(times=times, x=xs)


def terminal_values(x_T: SimplexState, w: CostWeights) -> np.ndarray:
    """Terminal condition psi(i, x_i) = f_i(x_i(T))."""
    return np.array([w.congestion(i, x_T.component(i)) for i in (1, 2, 3)])


def integrate_backward(psi: Sequence[float], x_traj: Trajectory, w: CostWeights) -> Trajectory:
    """Backward RK4 of the value dynamics from v(T) = psi along ``x_traj``.

    The distribution is interpolated linearly for the half steps.
    """
    times = x_traj.times
    xs = x_traj.x
    m = len(times)
    vs = np.empty((m, 3))
    vs[-1] = np.asarray(psi, dtype=float)
    v1, v2, v3 = vs[-1]
    warned = False

    def rhs(x1: float, x2: float, x3: float, a: float, b: float, c: float):
        nonlocal warned
        if a - c > _REGIME_GUARD or b - c > _REGIME_GUARD:
            if not warned:
                warnings.warn("value trajectory left the v1, v2 < v3 regime",
                              RegimeViolation, stacklevel=2)
                warned = True
            x = make_simplex(max(x1, 0.0), max(x2, 0.0), max(x3, 0.0))
            vv = ValueVector(a, b, c)
            return tuple(-hamiltonian(x, vv, i, w) for i in (1, 2, 3))
        return _hjb_rhs_scalar(x1, x2, x3, a, b, c, w)

    for k in range(m - 2, -1, -1):
        h = times[k + 1] - times[k]
        xa1, xa2, xa3 = xs[k + 1]
        xb1, xb2, xb3 = 0.5 * (xs[k] + xs[k + 1])
        xc1, xc2, xc3 = xs[k]
        k1 = rhs(xa1, xa2, xa3, v1, v2, v3)
        k2 = rhs(xb1, xb2, xb3, v1 - 0.5 * h * k1[0], v2 - 0.5 * h * k1[1], v3 - 0.5 * h * k1[2])
        k3 = rhs(xb1, xb2, xb3, v1 - 0.5 * h * k2[0], v2 - 0.5 * h * k2[1], v3 - 0.5 * h * k2[2])
        k4 = rhs(xc1, xc2, xc3, v1 - h * k3[0], v2 - h * k3[1], v3 - h * k3[2])
        v1 -= h * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]) / 6.0
        v2 -= h * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]) / 6.0
        v3 -= h * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]) / 6.0
        if not (math.isfinite(v1) and math.isfinite(v2) and math.isfinite(v3)):
            raise StepTooLarge(f"value blew up at t={times[k]:.6g}")
        vs[k] = (v1, v2, v3)
    return Trajectory(times=times, x=xs.copy(), v=vs)


def _rates_from_value_grid(vs: np.ndarray, w: CostWeights) -> np.ndarray:
    """Per-grid-point chain rates (beta31, beta32, beta13, beta23)."""
    g = w.gamma
    r = w.r
    y1 = vs[:, 0] - vs[:, 2]
    y2 = vs[:, 1] - vs[:, 2]
    b31 = np.maximum(-y1, 0.0) / r[2, 0] + np.maximum(y1, 0.0) / g[2, 0]
    b32 = np.maximum(-y2, 0.0) / r[2, 1] + np.maximum(y2, 0.0) / g[2, 1]
    b13 = np.maximum(-y1, 0.0) / g[0, 2] + np.maximum(y1, 0.0) / r[0, 2]
    b23 = np.maximum(-y2, 0.0) / g[1, 2] + np.maximum(y2, 0.0) / r[1, 2]
    return np.stack([b31, b32, b13, b23], axis=1)


def _forward_with_rate_grid(x0: SimplexState, rates: np.ndarray,
                            times: np.ndarray) -> np.ndarray:
    """Forward RK4 with rates given on the grid (linear midpoints)."""
    m = len(times)
    xs = np.empty((m, 3))
    x1, x2 = x0.x1, x0.x2
    xs[0] = (x1, x2, 1.0 - x1 - x2)
    for k in range(m - 1):
        h = times[k + 1] - times[k]
        b31a, b32a, b13a, b23a = rates[k]
        b31c, b32c, b13c, b23c = rates[k + 1]
        b31b, b32b, b13b, b23b = 0.5 * (rates[k] + rates[k + 1])

        def f(x1v, x2v, b31, b32, b13, b23):
            x3v = 1.0 - x1v - x2v
            return x3v * b31 - x1v * b13, x3v * b32 - x2v * b23

        k1a, k1b = f(x1, x2, b31a, b32a, b13a, b23a)
        k2a, k2b = f(x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b, b31b, b32b, b13b, b23b)
        k3a, k3b = f(x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b, b31b, b32b, b13b, b23b)
        k4a, k4b = f(x1 + h * k3a, x2 + h * k3b, b31c, b32c, b13c, b23c)
        x1 += h * (k1a + 2.0 * (k2a + k3a) + k4a) / 6.0
        x2 += h * (k1b + 2.0 * (k2b + k3b) + k4b) / 6.0
        _check_inside(x1, x2, f"at t={times[k + 1]:.6g}")
        x1 = min(max(x1, 0.0), 1.0)
        x2 = min(max(x2, 0.0), 1.0)
        xs[k + 1] = (x1, x2, 1.0 - x1 - x2)
    return xs


def solve_itvp(x0: SimplexState, w: CostWeights, cfg: ItvpConfig) -> Trajectory:
    """Damped Picard iteration for the coupled initial-terminal problem.

    Each sweep integrates the value backward along the current distribution
    iterate, derives the induced rates, integrates the distribution forward
    and relaxes:  x <- lam * x_new + (1 - lam) * x.  The terminal condition
    is re-evaluated at the current iterate's x(T) every sweep. Convergence
    is sup-norm change below ``cfg.tolerance``; the returned trajectory is
    additionally tagged with the forward fixed-point residual, required to
    stay below 10x the tolerance.

    On iteration exhaustion the last iterate is returned tagged
    ``converged=False`` rather than raised.
    """
    times, h, steps = _grid(cfg.horizon, cfg.dt)
    m = len(times)
    xs = np.tile([x0.x1, x0.x2, x0.x3], (m, 1))
    vs = None
    iterations = 0
    delta = math.inf
    for iterations in range(1, cfg.max_iterations + 1):
        x_traj = Trajectory(times=times, x=xs)
        psi = terminal_values(make_simplex(*xs[-1]), w)
        vs = integrate_backward(psi, x_traj, w).v
        if steps == 0:
            delta = 0.0
            break
        rates = _rates_from_value_grid(vs, w)
        x_new = _forward_with_rate_grid(x0, rates, times)
        delta = float(np.max(np.abs(x_new - xs)))
        xs = cfg.relaxation * x_new + (1.0 - cfg.relaxation) * xs
        xs[:, 2] = 1.0 - xs[:, 0] - xs[:, 1]
        if delta < cfg.tolerance:
            break
    # fixed-point residual: run the forward map once more, undamped
    if steps > 0:
        psi = terminal_values(make_simplex(*xs[-1]), w)
        vs = integrate_backward(psi, Trajectory(times=times, x=xs), w).v
        rates = _rates_from_value_grid(vs, w)
        residual = float(np.max(np.abs(_forward_with_rate_grid(x0, rates, times) - xs)))
    else:
        residual = 0.0
    converged = delta < cfg.tolerance and residual < 10.0 * cfg.tolerance
    return Trajectory(times=times, x=xs, v=vs, converged=converged,
                      iterations=iterations, residual=residual)


def sample_agent_path(x_traj: Trajectory, v_traj: Trajectory, w: CostWeights,
                      i0: int, seed) -> AgentPath:
    """Exact thinning sample of the agent chain along a solved trajectory.

    The time-inhomogeneous rates are beta* = rho* + w* evaluated from the
    value trajectory; candidate event times come from a homogeneous
    dominating process at the grid's maximal total exit rate.
    """
    if v_traj.v is None:
        raise ValueError("v_traj must carry values")
    if len(x_traj.times) != len(v_traj.times) or np.any(x_traj.times != v_traj.times):
        raise ValueError("trajectories must share one grid")
    if i0 not in (1, 2, 3):
        raise ValueError("i0 must be in {1, 2, 3}")
    times = x_traj.times
    rates = _rates_from_value_grid(v_traj.v, w)   # columns: b31 b32 b13 b23
    # total exit rate per state on the grid: state1 -> b13, state2 -> b23, state3 -> b31+b32
    exit_total = np.stack([rates[:, 2], rates[:, 3], rates[:, 0] + rates[:, 1]], axis=1)
    lam_bar = float(exit_total.max())
    rng = np.random.default_rng(seed)
    t0, t_end = float(times[0]), float(times[-1])
    jump_times = [t0]
    states = [i0]
    if lam_bar <= 0.0:
        return AgentPath(np.array(jump_times), np.array(states))
    i = i0
    t = t0
    dt_grid = times[1] - times[0] if len(times) > 1 else 1.0
    while True:
        t += rng.exponential(1.0 / lam_bar)
        if t >= t_end:
            break
        # linear interpolation of the rate columns at t
        pos = (t - t0) / dt_grid
        k = min(int(pos), len(times) - 2)
        frac = pos - k
        row = (1.0 - frac) * rates[k] + frac * rates[k + 1]
        if i == 1:
            out = {3: row[2]}
        elif i == 2:
            out = {3: row[3]}
        else:
            out = {1: row[0], 2: row[1]}
        total = sum(out.values())
        if rng.random() * lam_bar < total:
            u = rng.random() * total
            acc = 0.0
            for j, rate in out.items():
                acc += rate
                if u <= acc:
                    i = j
                    break
            jump_times.append(t)
            states.append(i)
    return AgentPath(np.array(jump_times), np.array(states))


def sample_agent_paths(x_traj: Trajectory, v_traj: Trajectory, w: CostWeights,
                       x0: SimplexState, n: int, seed: int) -> list[AgentPath]:
    """Sample ``n`` independent agents with initial states drawn from ``x0``.

    Each agent gets its own deterministic stream derived from
    (seed, agent index), so batches are reproducible and order-independent.
    """
    probs = x0.as_array()
    paths = []
    for idx in range(n):
        rng = np.random.default_rng([seed, idx])
        i0 = 1 + int(np.searchsorted(np.cumsum(probs), rng.random()))
        paths.append(sample_agent_path(x_traj, v_traj, w, min(i0, 3), [seed, idx, 1]))
    return paths


def empirical_distribution(paths: Sequence[AgentPath], t: float) -> np.ndarray:
    """Fraction of agents in each state at time t."""
    counts = np.zeros(3)
    for p in paths:
        k = int(np.searchsorted(p.jump_times, t, side="right")) - 1
        counts[int(p.states[max(k, 0)]) - 1] += 1.0
    return counts / max(len(paths), 1)
