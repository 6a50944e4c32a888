"""Stationary mean-field equilibria and their stability.

Working variables are the value differences y1 = v1 - v3, y2 = v2 - v3,
whose stationarity conditions

    (1/2) a11 y1^2 + (1/2) a12 y2^2 = c1
    (1/2) a21 y1^2 + (1/2) a22 y2^2 = c2

describe two ellipses. Substituting (u, w) = (y1^2, y2^2) turns the
intersection into a 2x2 linear solve, which is exact and branch-free; the
third-quadrant root (-sqrt(u), -sqrt(w)) is the one in the admissible
v1, v2 < v3 regime.

Stability is judged on the Jacobian of the backward-time value flow (the
direction in which the value ODE is actually integrated); its sign
convention is what makes the third-quadrant root the stable node.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import CostWeights, SimplexState, ValueVector, make_simplex
from .errors import Degenerate, NoConvergence, NoRealEquilibrium, NoRoot, NotAnEquilibrium
from .mfg import ItvpConfig, hamiltonian, rate_matrix_from_values, solve_itvp

EQUILIBRIUM_RESIDUAL_TOL = 1e-10
CLASSIFY_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ReducedValue:
    """Value differences (y1, y2) = (v1 - v3, v2 - v3)."""

    y1: float
    y2: float

    def __post_init__(self):
        if not (math.isfinite(self.y1) and math.isfinite(self.y2)):
            raise ValueError(f"reduced value must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.y1, self.y2])

    def as_value_vector(self) -> ValueVector:
        """The representative value vector with v3 = 0."""
        return ValueVector(self.y1, self.y2, 0.0)


@dataclass(frozen=True)
class ReducedCoefficients:
    """Coefficients of the reduced quadratic dynamics.

    a11 = 1/Gamma13 + 1/R31, a12 = 1/R32, a21 = 1/R31,
    a22 = 1/Gamma23 + 1/R32, c1 = f3(x3) - f1(x1), c2 = f3(x3) - f2(x2).
    """

    a11: float
    a12: float
    a21: float
    a22: float
    c1: float
    c2: float

    def __post_init__(self):
        if not (self.a11 > self.a21 >= 0.0):
            raise ValueError("need a11 > a21 >= 0")
        if not (self.a22 > self.a12 >= 0.0):
            raise ValueError("need a22 > a12 >= 0")


def coefficients_from_weights(w: CostWeights, x: SimplexState) -> ReducedCoefficients:
    """Reduced coefficients at a frozen distribution x."""
    return ReducedCoefficients(
        a11=1.0 / w.gamma[0, 2] + 1.0 / w.r[2, 0],
        a12=1.0 / w.r[2, 1],
        a21=1.0 / w.r[2, 0],
        a22=1.0 / w.gamma[1, 2] + 1.0 / w.r[2, 1],
        c1=w.congestion(3, x.x3) - w.congestion(1, x.x1),
        c2=w.congestion(3, x.x3) - w.congestion(2, x.x2),
    )


@dataclass(frozen=True)
class StationarySolution:
    """A stationary mean-field equilibrium: distribution, value differences,
    the constant Hamiltonian level kappa, and the stability tag."""

    x_hat: SimplexState
    y_star: ReducedValue
    kappa: float
    stability: str


def reduced_rhs(y: ReducedValue, coeffs: ReducedCoefficients) -> np.ndarray:
    """(dy1/dt, dy2/dt) of the reduced value dynamics."""
    c = coeffs
    return np.array([
        -0.5 * c.a11 * y.y1 ** 2 - 0.5 * c.a12 * y.y2 ** 2 + c.c1,
        -0.5 * c.a21 * y.y1 ** 2 - 0.5 * c.a22 * y.y2 ** 2 + c.c2,
    ])


def stationary_y(coeffs: ReducedCoefficients) -> ReducedValue:
    """Third-quadrant stationary value differences.

    Solves the linear system in the squared variables (u, w) = (y1^2, y2^2)
    and takes the negative square roots. Raises ``Degenerate`` when the
    ellipse pair is (near) parallel and ``NoRealEquilibrium`` when the
    intersection has no real third-quadrant representative.
    """
    c = coeffs
    det = 0.25 * (c.a11 * c.a22 - c.a12 * c.a21)
    scale = 0.25 * max(c.a11 * c.a22, c.a12 * c.a21, 1e-300)
    if abs(det) < 1e-12 * scale:
        raise Degenerate(f"ellipse system is singular (det={det})")
    u = (0.5 * c.a22 * c.c1 - 0.5 * c.a12 * c.c2) / det
    v = (0.5 * c.a11 * c.c2 - 0.5 * c.a21 * c.c1) / det
    if u < 0.0 or v < 0.0:
        raise NoRealEquilibrium(f"squared solution ({u}, {v}) is not nonnegative")
    return ReducedValue(-math.sqrt(u), -math.sqrt(v))


def classify_equilibrium(y: ReducedValue, coeffs: ReducedCoefficients) -> str:
    """Classify a root of the reduced dynamics.

    Uses the backward-time Jacobian J = [[a11 y1, a12 y2], [a21 y1, a22 y2]];
    trace T and determinant D give: stable node (D > 0, T < 0, T^2 > 4D),
    unstable node (D > 0, T > 0, T^2 > 4D), saddle (D < 0), otherwise
    center/degenerate.
    """
    residual = float(np.max(np.abs(reduced_rhs(y, coeffs))))
    if residual >= CLASSIFY_RESIDUAL_TOL:
        raise NotAnEquilibrium(f"residual {residual} at {y}")
    c = coeffs
    tr = c.a11 * y.y1 + c.a22 * y.y2
    det = (c.a11 * c.a22 - c.a12 * c.a21) * y.y1 * y.y2
    if det < 0.0:
        return "saddle"
    if det > 0.0 and tr < 0.0 and tr * tr > 4.0 * det:
        return "stable node"
    if det > 0.0 and tr > 0.0 and tr * tr > 4.0 * det:
        return "unstable node"
    return "center/degenerate"


def backward_jacobian(y: ReducedValue, coeffs: ReducedCoefficients) -> np.ndarray:
    """The classification Jacobian as a matrix (for eigenvalue cross-checks)."""
    c = coeffs
    return np.array([[c.a11 * y.y1, c.a12 * y.y2],
                     [c.a21 * y.y1, c.a22 * y.y2]])


def stationary_distribution(w: CostWeights, y: ReducedValue) -> SimplexState:
    """Stationary distribution under the rates induced by y.

    Damped Newton on the reduced Kolmogorov equations in the (x1, x2)
    square, with a bisection sweep as fallback; the accepted root must have
    residual below 1e-10.
    """
    beta = rate_matrix_from_values(y.as_value_vector(), w).beta
    b31, b32, b13, b23 = beta[2, 0], beta[2, 1], beta[0, 2], beta[1, 2]
    if b31 + b32 + b13 + b23 == 0.0:
        # no transitions at all: every distribution is stationary
        return make_simplex(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def rhs(x1: float, x2: float) -> tuple[float, float]:
        x3 = 1.0 - x1 - x2
        return x3 * b31 - x1 * b13, x3 * b32 - x2 * b23

    x1, x2 = 1.0 / 3.0, 1.0 / 3.0
    jac = np.array([[-b31 - b13, -b31], [-b32, -b32 - b23]])
    ok = False
    if abs(np.linalg.det(jac)) > 1e-14:
        for _ in range(50):
            f1, f2 = rhs(x1, x2)
            if max(abs(f1), abs(f2)) < EQUILIBRIUM_RESIDUAL_TOL:
                ok = True
                break
            step = np.linalg.solve(jac, [-f1, -f2])
            lam = 1.0
            while lam > 1e-6:
                n1, n2 = x1 + lam * step[0], x2 + lam * step[1]
                if 0.0 <= n1 <= 1.0 and 0.0 <= n2 <= 1.0 and n1 + n2 <= 1.0 + 1e-12:
                    x1, x2 = n1, n2
                    break
                lam *= 0.5
            else:
                break
    if not ok:
        x1, x2 = _bisection_sweep(rhs, b31, b13)
    f1, f2 = rhs(x1, x2)
    if max(abs(f1), abs(f2)) >= EQUILIBRIUM_RESIDUAL_TOL:
        raise NoRoot(f"stationary distribution residual {max(abs(f1), abs(f2))}")
    return make_simplex(min(max(x1, 0.0), 1.0), min(max(x2, 0.0), 1.0),
                        min(max(1.0 - x1 - x2, 0.0), 1.0))


def _bisection_sweep(rhs, b31: float, b13: float) -> tuple[float, float]:
    """Sweep x2 in [0, 1], eliminating x1 from the first balance equation."""
    denom = b31 + b13

    def x1_of(x2: float) -> float:
        return b31 * (1.0 - x2) / denom if denom > 0.0 else 0.0

    def g(x2: float) -> float:
        return rhs(x1_of(x2), x2)[1]

    grid = np.linspace(0.0, 1.0, 2001)
    vals = np.array([g(t) for t in grid])
    sign_change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0.0)[0]
    if len(sign_change) == 0:
        raise NoRoot("bisection sweep found no sign change in [0, 1]")
    lo, hi = grid[sign_change[0]], grid[sign_change[0] + 1]
    flo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = g(mid)
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
        if hi - lo < 1e-16:
            break
    x2 = 0.5 * (lo + hi)
    return x1_of(x2), x2


def seminorm_sharp(v: ValueVector, v_ref: ValueVector) -> float:
    """Shift-invariant distance inf_lambda ||v - v_ref + lambda 1||_2.

    For the Euclidean norm the minimizing shift is minus the mean.
    """
    d = v.as_array() - v_ref.as_array()
    d = d - d.mean()
    return float(np.linalg.norm(d))


def stationary_equilibrium(w: CostWeights, x_init: SimplexState | None = None,
                           tol: float = 1e-13, max_iterations: int = 200) -> StationarySolution:
    """Jointly stationary pair: distribution fixed under the rates induced
    by the value differences that are themselves stationary at that
    distribution.

    Fixed-point iteration over the distribution; for weights with
    state-independent R and Gamma the distribution map is constant in y and
    the loop converges immediately.
    """
    x_hat = x_init if x_init is not None else make_simplex(1 / 3, 1 / 3, 1 / 3)
    y = None
    for _ in range(max_iterations):
        coeffs = coefficients_from_weights(w, x_hat)
        y = stationary_y(coeffs)
        x_new = stationary_distribution(w, y)
        change = float(np.max(np.abs(x_new.as_array() - x_hat.as_array())))
        x_hat = x_new
        if change < tol:
            break
    else:
        raise NoConvergence("stationary fixed point did not settle")
    coeffs = coefficients_from_weights(w, x_hat)
    y = stationary_y(coeffs)
    v_bar = y.as_value_vector()
    levels = [hamiltonian(x_hat, v_bar, i, w) for i in (1, 2, 3)]
    kappa = float(np.mean(levels))
    stability = classify_equilibrium(y, coeffs)
    return StationarySolution(x_hat=x_hat, y_star=y, kappa=kappa, stability=stability)


@dataclass(frozen=True)
class HorizonRecord:
    """Midpoint deviations of one finite-horizon solve."""

    horizon: float
    dx_sup: float
    dv_sharp: float


def convergence_study(x0: SimplexState, w: CostWeights, horizons: Sequence[float],
                      dt: float = 1e-2, relaxation: float = 0.5,
                      tolerance: float = 1e-9, max_iterations: int = 400,
                      jobs: int = 1) -> list[HorizonRecord]:
    """Asymptotics of the finite-horizon solution toward the stationary one.

    Each horizon T is solved on a window of length 2T (the initial
    condition sits at -T, the terminal one at +T) and the solution is
    sampled at the window midpoint, which plays the role of t = 0. Records
    the sup-norm distribution deviation and the shift-invariant value
    deviation from the stationary pair.
    """
    if list(horizons) != sorted(horizons):
        raise ValueError("horizons must be increasing")
    bar = stationary_equilibrium(w)
    x_bar = bar.x_hat.as_array()
    v_bar = bar.y_star.as_value_vector()

    def run(T: float) -> HorizonRecord:
        cfg = ItvpConfig(horizon=2.0 * T, dt=min(dt, 2.0 * T) if T > 0 else dt,
                         relaxation=relaxation, tolerance=tolerance,
                         max_iterations=max_iterations)
        traj = solve_itvp(x0, w, cfg)
        if not traj.converged:
            raise NoConvergence(f"ITVP did not converge for horizon {T}")
        mid = (len(traj.times) - 1) // 2
        dx = float(np.max(np.abs(traj.x[mid] - x_bar)))
        dv = seminorm_sharp(ValueVector(*traj.v[mid]), v_bar)
        return HorizonRecord(horizon=T, dx_sup=dx, dv_sharp=dv)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, horizons))
    return [run(T) for T in horizons]


def study_to_csv(records: Sequence[HorizonRecord], path: str | Path) -> None:
    """Write ``T,dx_sup,dv_sharp`` rows at 12 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "dx_sup", "dv_sharp"])
        for rec in records:
            writer.writerow([f"{val:.11e}" for val in
                             (rec.horizon, rec.dx_sup, rec.dv_sharp)])
