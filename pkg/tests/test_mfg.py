import math
import warnings

import numpy as np
import pytest

from mfgnet import (ItvpConfig, RegimeViolation, StepTooLarge, ValueVector,
                    default_weights, difference_operator, empirical_distribution,
                    hamiltonian, hjb_rhs, integrate_backward, integrate_forward,
                    kolmogorov_rhs, make_rate_matrix, make_simplex,
                    optimal_control, rate_matrix_from_values, sample_agent_path,
                    sample_agent_paths, solve_itvp, terminal_values,
                    worst_disturbance)
from mfgnet.core import CostWeights, linear_congestion


def weights(q=(1.0, 1.0, 1.0), gamma13=1.0, gamma23=1.0, r31=1.0, r32=1.0,
            r13=1.0, r23=1.0, gamma31=1.0, gamma32=1.0):
    r = np.ones((3, 3))
    g = np.ones((3, 3))
    r[0, 1] = r[1, 0] = g[0, 1] = g[1, 0] = 1e6
    r[2, 0], r[2, 1], r[0, 2], r[1, 2] = r31, r32, r13, r23
    g[0, 2], g[1, 2], g[2, 0], g[2, 1] = gamma13, gamma23, gamma31, gamma32
    return CostWeights(r=r, gamma=g, f=linear_congestion(q))


# ---------------------------------------------------------------- operators

def test_difference_operator_constant_vector():
    assert np.array_equal(difference_operator(ValueVector(1, 1, 1), 2), np.zeros(3))


def test_difference_operator_direct():
    assert np.array_equal(difference_operator(ValueVector(0, 2, 3), 3), [-3, -1, 0])
    assert np.array_equal(difference_operator(ValueVector(5, 5, 7), 1), [0, 0, 2])


def test_optimal_control_constant_value():
    assert np.array_equal(optimal_control(ValueVector(2, 2, 2), 1, weights()), np.zeros(3))


def test_optimal_control_direct():
    rho = optimal_control(ValueVector(0, 2, 3), 3, weights())
    assert np.allclose(rho, [3.0, 1.0, 0.0], atol=0)


def test_optimal_control_honeybee_regime():
    gamma1, gamma2, r, x1, x2 = 0.2, 0.3, 1.5, 0.4, 0.1
    v = ValueVector(-(gamma1 + r * x1), -(gamma2 + r * x2), 0.0)
    rho3 = optimal_control(v, 3, weights())
    assert np.array_equal(rho3, [gamma1 + r * x1, gamma2 + r * x2, 0.0])


def test_worst_disturbance_constant_value():
    assert np.array_equal(worst_disturbance(ValueVector(1, 1, 1), 2, weights()), np.zeros(3))


def test_worst_disturbance_honeybee_identification():
    gamma1, r, x1 = 0.2, 1.5, 0.4
    alpha, sigma, x2 = 0.6, 0.8, 0.25
    recruit = gamma1 + r * x1
    w = weights(gamma13=recruit / (alpha + sigma * x2))
    out = worst_disturbance(ValueVector(-recruit, -0.9 * recruit, 0.0), 1, w)
    assert out[0] == 0.0 and out[1] == 0.0
    assert out[2] == pytest.approx(alpha + sigma * x2, abs=1e-15)


def test_worst_disturbance_virus_identification():
    # Gamma13 chosen so the disturbance reproduces the infection pressure
    beta31, beta13, x3 = 0.1, 0.13, 0.5
    w = weights(gamma13=beta31 / (beta13 * x3))
    out = worst_disturbance(ValueVector(-beta31, -beta31, 0.0), 1, w)
    assert out[2] == pytest.approx(beta13 * x3, abs=1e-16)


def test_controls_nonnegative_property():
    rng = np.random.default_rng(7)
    w = weights(gamma13=0.7, gamma23=1.3, r31=0.5, r32=2.0)
    for _ in range(300):
        v = ValueVector(*rng.normal(0.0, 3.0, 3))
        for i in (1, 2, 3):
            assert np.all(optimal_control(v, i, w) >= 0.0)
            assert np.all(worst_disturbance(v, i, w) >= 0.0)
            beta = rate_matrix_from_values(v, w).beta
            assert np.all(beta[~np.eye(3, dtype=bool)] >= 0.0)


# -------------------------------------------------------------- Hamiltonian

def test_hamiltonian_trivial_cases():
    w = weights()
    x = make_simplex(0.2, 0.3, 0.5)
    assert hamiltonian(x, ValueVector(1, 1, 1), 2, weights(q=(0, 0, 0))) == 0.0
    h = hamiltonian(x, ValueVector(0, 0, 2), 3, weights(q=(0, 0, 0)))
    assert h == pytest.approx(-4.0, abs=1e-15)
    # regime form: i = 1 with v1, v2 < v3 matches (1/2) Gamma13^-1 (v3-v1)^2 + f1
    w2 = weights(q=(2.0, 0.5, 1.0), gamma13=0.8)
    v = ValueVector(-0.6, -0.3, 0.0)
    expect = 0.5 / 0.8 * 0.36 + 2.0 * x.x1
    assert hamiltonian(x, v, 1, w2) == pytest.approx(expect, rel=1e-14)


def test_hamiltonian_consistency_with_controls():
    # H equals g(rho*) - 0.5 ||w*||^2_Gamma + (rho* + w*)' Delta_i v
    rng = np.random.default_rng(11)
    w = weights(q=(0.7, -0.4, 1.2), gamma13=0.7, gamma23=1.3, r31=0.5, r32=2.0)
    for _ in range(200):
        x = make_simplex(*rng.dirichlet([1, 1, 1]))
        v = ValueVector(*rng.normal(0.0, 2.0, 3))
        for i in (1, 2, 3):
            rho = optimal_control(v, i, w)
            dist = worst_disturbance(v, i, w)
            d = difference_operator(v, i)
            g_run = 0.5 * float(rho @ (w.r[i - 1] * rho)) + w.congestion(i, x.component(i))
            pen = 0.5 * float(dist @ (w.gamma[i - 1] * dist))
            saddle = g_run - pen + float((rho + dist) @ d)
            assert hamiltonian(x, v, i, w) == pytest.approx(saddle, abs=1e-12)


def test_first_order_optimality_of_controls():
    # perturbing rho* never decreases the minimand, perturbing w* never
    # increases the maximand
    rng = np.random.default_rng(13)
    w = weights(gamma13=0.7, gamma23=1.3, r31=0.5, r32=2.0)
    eps = 1e-4
    for _ in range(100):
        v = ValueVector(*rng.normal(0.0, 2.0, 3))
        for i in (1, 2, 3):
            rho = optimal_control(v, i, w)
            dist = worst_disturbance(v, i, w)
            d = difference_operator(v, i)

            def minimand(r_vec):
                return 0.5 * float(r_vec @ (w.r[i - 1] * r_vec)) + float(r_vec @ d)

            def maximand(w_vec):
                return -0.5 * float(w_vec @ (w.gamma[i - 1] * w_vec)) + float(w_vec @ d)

            base_min = minimand(rho)
            base_max = maximand(dist)
            for j in range(3):
                if j == i - 1:
                    continue
                for sign in (+1.0, -1.0):
                    r_pert = rho.copy()
                    r_pert[j] += sign * eps
                    if r_pert[j] >= 0.0:
                        assert minimand(r_pert) >= base_min - 1e-15
                    w_pert = dist.copy()
                    w_pert[j] += sign * eps
                    if w_pert[j] >= 0.0:
                        assert maximand(w_pert) <= base_max + 1e-15


# --------------------------------------------------------------- Kolmogorov

def test_kolmogorov_symmetric_fixed_point():
    beta = make_rate_matrix(beta31=0.7, beta32=0.7, beta13=0.7, beta23=0.7)
    # at the uniform distribution inflow 3->1 equals outflow 1->3 and so on
    out = kolmogorov_rhs(make_simplex(1 / 3, 1 / 3, 1 / 3), beta)
    assert np.allclose(out, 0.0, atol=1e-16)


def test_kolmogorov_direct_substitution():
    beta = make_rate_matrix(beta31=2.0, beta32=1.0)
    out = kolmogorov_rhs(make_simplex(0.0, 0.0, 1.0), beta)
    assert np.array_equal(out, [2.0, 1.0, -3.0])


def test_kolmogorov_mass_conserved_exactly():
    rng = np.random.default_rng(3)
    for _ in range(300):
        beta = make_rate_matrix(*rng.uniform(0.0, 5.0, 4))
        x = make_simplex(*rng.dirichlet([1, 1, 1]))
        assert kolmogorov_rhs(x, beta).sum() == 0.0


def _nested_grid_root(b31, b32, b13, b23, levels=4):
    """Independent nested grid search for the stationary distribution."""
    lo1, hi1, lo2, hi2 = 0.0, 1.0, 0.0, 1.0
    best = (0.5, 0.5)
    for _ in range(levels):
        g1 = np.linspace(lo1, hi1, 101)
        g2 = np.linspace(lo2, hi2, 101)
        xx1, xx2 = np.meshgrid(g1, g2, indexing="ij")
        x3 = 1.0 - xx1 - xx2
        f1 = x3 * b31 - xx1 * b13
        f2 = x3 * b32 - xx2 * b23
        bad = x3 < 0.0
        score = np.hypot(f1, f2) + np.where(bad, 1e9, 0.0)
        k = np.unravel_index(np.argmin(score), score.shape)
        best = (g1[k[0]], g2[k[1]])
        span1, span2 = (hi1 - lo1) / 10, (hi2 - lo2) / 10
        lo1, hi1 = max(best[0] - span1, 0.0), min(best[0] + span1, 1.0)
        lo2, hi2 = max(best[1] - span2, 0.0), min(best[1] + span2, 1.0)
    return best


def test_kolmogorov_equilibrium_from_reduced_form():
    from mfgnet import stationary_distribution
    from mfgnet.stationary import ReducedValue
    w = weights(gamma13=0.5, gamma23=0.8, r31=1.0, r32=1.5)
    y = ReducedValue(-0.4, -0.7)
    x_hat = stationary_distribution(w, y)
    beta = rate_matrix_from_values(ValueVector(y.y1, y.y2, 0.0), w)
    assert np.max(np.abs(kolmogorov_rhs(x_hat, beta))) < 1e-10
    b = beta.beta
    ref = _nested_grid_root(b[2, 0], b[2, 1], b[0, 2], b[1, 2])
    assert x_hat.x1 == pytest.approx(ref[0], abs=2e-4)
    assert x_hat.x2 == pytest.approx(ref[1], abs=2e-4)


# ---------------------------------------------------------------------- HJB

def test_hjb_constant_value_gives_congestion_only():
    w = weights(q=(0.3, 0.7, -0.2))
    x = make_simplex(0.5, 0.25, 0.25)
    out = hjb_rhs(x, ValueVector(1.0, 1.0, 1.0), w)
    assert np.allclose(out, [-0.3 * 0.5, -0.7 * 0.25, 0.2 * 0.25], atol=1e-15)


def test_hjb_direct_substitution():
    w = weights(q=(0.0, 0.0, 0.0))
    out = hjb_rhs(make_simplex(1 / 3, 1 / 3, 1 / 3), ValueVector(0.0, 0.0, 1.0), w)
    assert out[0] == pytest.approx(-0.5)
    assert out[1] == pytest.approx(-0.5)


def test_hjb_regime_violation_warns_but_evaluates():
    w = weights(q=(0.0, 0.0, 0.0))
    x = make_simplex(1 / 3, 1 / 3, 1 / 3)
    with pytest.warns(RegimeViolation):
        out = hjb_rhs(x, ValueVector(2.0, 0.0, 1.0), w)
    # general form: H1 = -(1/2)(v3-v1)^2/R13, H3 = (1/2)(v1-v3)^2/Gamma31 - (1/2)(v2-v3)^2/R32... check v2 row
    assert out[1] == pytest.approx(-0.5)   # still 3->2 gap of 1


def test_hjb_stationary_residual():
    from mfgnet import stationary_equilibrium
    w = default_weights()
    sol = stationary_equilibrium(w)
    v_bar = ValueVector(sol.y_star.y1, sol.y_star.y2, 0.0)
    out = hjb_rhs(sol.x_hat, v_bar, w)
    assert abs(out[0] - out[2]) < 1e-10
    assert abs(out[1] - out[2]) < 1e-10


# --------------------------------------------------------------- integrators

def test_forward_zero_rates_constant():
    x0 = make_simplex(0.2, 0.3, 0.5)
    traj = integrate_forward(x0, make_rate_matrix(), 1.0, 0.01)
    assert np.allclose(traj.x, traj.x[0], atol=0)


def test_forward_symmetric_rates_uniform_constant():
    x0 = make_simplex(1 / 3, 1 / 3, 1 / 3)
    beta = make_rate_matrix(0.5, 0.5, 0.5, 0.5)
    traj = integrate_forward(x0, beta, 2.0, 0.01)
    assert np.max(np.abs(traj.x - 1 / 3)) < 1e-13


def test_forward_exponential_decay_oracle():
    # beta13 = beta23 = 1 empties states 1 and 2: x1(t) = 0.5 exp(-t)
    x0 = make_simplex(0.5, 0.5, 0.0)
    beta = make_rate_matrix(beta13=1.0, beta23=1.0)
    traj = integrate_forward(x0, beta, 5.0, 1e-3)
    exact = 0.5 * np.exp(-traj.times)
    assert np.max(np.abs(traj.x[:, 0] - exact)) < 1e-12
    assert np.all(np.diff(traj.x[:, 2]) > 0.0)          # x3 grows monotonically
    assert traj.x[-1, 2] == pytest.approx(1.0, abs=1e-2)


def test_forward_rk4_order():
    x0 = make_simplex(0.5, 0.5, 0.0)
    beta = make_rate_matrix(beta13=1.0, beta23=1.0)

    def err(dt):
        traj = integrate_forward(x0, beta, 1.0, dt)
        return abs(traj.x[-1, 0] - 0.5 * math.exp(-1.0))

    ratio = err(0.02) / err(0.01)
    assert 12.0 < ratio < 22.0


def test_forward_mass_exact_over_long_run():
    x0 = make_simplex(0.3, 0.3, 0.4)
    beta = make_rate_matrix(0.8, 0.3, 0.5, 0.2)
    traj = integrate_forward(x0, beta, 10.0, 1e-3)
    assert np.max(np.abs(traj.x.sum(axis=1) - 1.0)) < 1e-10


def test_backward_zero_congestion_zero_values():
    w = weights(q=(0.0, 0.0, 0.0))
    x_traj = integrate_forward(make_simplex(0.3, 0.3, 0.4), make_rate_matrix(), 1.0, 0.01)
    v_traj = integrate_backward([0.0, 0.0, 0.0], x_traj, w)
    assert np.allclose(v_traj.v, 0.0, atol=0)


def test_backward_empty_horizon_returns_terminal():
    w = weights()
    x_traj = integrate_forward(make_simplex(0.3, 0.3, 0.4), make_rate_matrix(), 0.0, 0.01)
    psi = terminal_values(x_traj.state(0), w)
    v_traj = integrate_backward(psi, x_traj, w)
    assert np.array_equal(v_traj.v[0], psi)


def _euler_backward_oracle(psi, x_traj, w, refine=10):
    """Independent explicit-Euler re-integration on a refined grid."""
    g13, g23 = w.gamma[0, 2], w.gamma[1, 2]
    r31, r32 = w.r[2, 0], w.r[2, 1]
    f1, f2, f3 = w.f
    v1, v2, v3 = psi
    times = x_traj.times
    for k in range(len(times) - 2, -1, -1):
        h = (times[k + 1] - times[k]) / refine
        for m in range(refine):
            # linear interpolation of x inside the coarse cell
            frac = (m + 0.5) / refine
            x = (1.0 - frac) * x_traj.x[k + 1] + frac * x_traj.x[k]
            y1, y2 = v1 - v3, v2 - v3
            v1 -= h * (-0.5 * y1 * y1 / g13 - f1(x[0]))
            v2 -= h * (-0.5 * y2 * y2 / g23 - f2(x[1]))
            v3 -= h * (0.5 * (y1 * y1 / r31 + y2 * y2 / r32) - f3(x[2]))
    return np.array([v1, v2, v3])


def test_backward_symmetry_vs_euler_oracle():
    # constant distribution, equal congestion in states 1 and 2, symmetric
    # weights: v1(t) == v2(t), and the result matches an independent
    # explicit-Euler integration at a tenth of the step
    w = weights(q=(1.0, 1.0, 2.0), gamma13=0.5, gamma23=0.5)
    x_hat = make_simplex(0.25, 0.25, 0.5)
    x_traj = integrate_forward(x_hat, make_rate_matrix(), 2.0, 1e-2)
    x_traj = type(x_traj)(times=x_traj.times, x=np.tile(x_hat.as_array(), (len(x_traj.times), 1)))
    psi = terminal_values(x_hat, w)
    v_traj = integrate_backward(psi, x_traj, w)
    assert np.max(np.abs(v_traj.v[:, 0] - v_traj.v[:, 1])) < 1e-12
    oracle = _euler_backward_oracle(psi, x_traj, w)
    assert np.max(np.abs(v_traj.v[0] - oracle)) < 1e-3


# --------------------------------------------------------------------- ITVP

def test_itvp_zero_cost_game():
    w = weights(q=(0.0, 0.0, 0.0))
    x0 = make_simplex(0.2, 0.5, 0.3)
    traj = solve_itvp(x0, w, ItvpConfig(horizon=2.0, dt=0.01))
    assert traj.converged
    assert np.allclose(traj.v, 0.0, atol=0)
    assert np.max(np.abs(traj.x - x0.as_array())) < 1e-14


def test_itvp_zero_horizon():
    w = default_weights()
    x0 = make_simplex(0.3, 0.3, 0.4)
    traj = solve_itvp(x0, w, ItvpConfig(horizon=0.0))
    assert traj.converged
    assert np.array_equal(traj.x[0], x0.as_array())
    assert np.array_equal(traj.v[0], terminal_values(x0, w))


def _shooting_oracle(x0, w, horizon, dt=5e-3):
    """Brute-force nested shooting over the initial value difference.

    The test configuration is symmetric in states 1 and 2, so the unknown
    initial condition reduces to one value difference y(0) on the diagonal.
    The coupled distribution/value system is integrated forward for a grid
    of candidates; the forward value flow blows up away from the true
    solution (down when starting below it, up when starting above), so
    each level brackets the sign change of the blown-out terminal
    difference and the next level rescans inside the bracket.
    """
    g13, g23 = w.gamma[0, 2], w.gamma[1, 2]
    g31, g32 = w.gamma[2, 0], w.gamma[2, 1]
    r31, r32 = w.r[2, 0], w.r[2, 1]
    r13, r23 = w.r[0, 2], w.r[1, 2]
    f1, f2, f3 = w.f
    q = np.array([f1(1.0), f2(1.0), f3(1.0)])   # linear congestion slopes
    steps = round(horizon / dt)

    def run(y0):
        n = len(y0)
        state = np.zeros((n, 5))                # x1 x2 v1 v2 v3
        state[:, 0], state[:, 1] = x0.x1, x0.x2
        state[:, 2], state[:, 3] = y0, y0

        def rhs(s):
            x1, x2, v1, v2, v3 = s.T
            x3 = 1.0 - x1 - x2
            d13, d23 = v3 - v1, v3 - v2
            b31 = np.maximum(-(v1 - v3), 0.0) / r31 + np.maximum(v1 - v3, 0.0) / g31
            b32 = np.maximum(-(v2 - v3), 0.0) / r32 + np.maximum(v2 - v3, 0.0) / g32
            b13 = np.maximum(d13, 0.0) / g13 + np.maximum(-d13, 0.0) / r13
            b23 = np.maximum(d23, 0.0) / g23 + np.maximum(-d23, 0.0) / r23
            dx1 = x3 * b31 - x1 * b13
            dx2 = x3 * b32 - x2 * b23
            h1 = (-0.5 * np.minimum(d13, 0.0) ** 2 / r13
                  + 0.5 * np.maximum(d13, 0.0) ** 2 / g13 + q[0] * x1)
            h2 = (-0.5 * np.minimum(d23, 0.0) ** 2 / r23
                  + 0.5 * np.maximum(d23, 0.0) ** 2 / g23 + q[1] * x2)
            neg1, neg2 = np.minimum(v1 - v3, 0.0), np.minimum(v2 - v3, 0.0)
            pos1, pos2 = np.maximum(v1 - v3, 0.0), np.maximum(v2 - v3, 0.0)
            h3 = (-0.5 * (neg1 ** 2 / r31 + neg2 ** 2 / r32)
                  + 0.5 * (pos1 ** 2 / g31 + pos2 ** 2 / g32) + q[2] * x3)
            return np.stack([dx1, dx2, -h1, -h2, -h3], axis=1)

        for _ in range(steps):
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * dt * k1)
            k3 = rhs(state + 0.5 * dt * k2)
            k4 = rhs(state + dt * k3)
            state = np.clip(state + dt * (k1 + 2.0 * (k2 + k3) + k4) / 6.0,
                            -1e3, 1e3)
        return state

    def above_target(final):
        # surviving candidates compare the terminal difference against the
        # terminal condition; blown-out ones are classified by blow direction
        y_t = final[:, 2] - final[:, 4]
        x1t, x2t = final[:, 0], final[:, 1]
        target = q[0] * x1t - q[2] * (1.0 - x1t - x2t)
        return np.where(np.abs(y_t) > 10.0, y_t > 0.0, y_t > target)

    lo, hi = -1.0, 0.0
    for _ in range(12):
        grid = np.linspace(lo, hi, 41)
        above = above_target(run(grid))
        flips = np.nonzero(above[1:] != above[:-1])[0]
        assert len(flips) == 1, "terminal mismatch must change sign exactly once"
        lo, hi = grid[flips[0]], grid[flips[0] + 1]
        if hi - lo < 1e-12:
            break
    y0 = 0.5 * (lo + hi)
    final = run(np.array([y0]))[0]
    assert abs(final[2] - final[4]) < 1.0, "midpoint candidate must survive to T"
    x1t, x2t = final[0], final[1]
    x3t = 1.0 - x1t - x2t
    shift = q[2] * x3t - final[4]
    v0 = np.array([y0 + shift, y0 + shift, shift])
    return v0, np.array([x1t, x2t, x3t])


def test_itvp_crowd_averse_vs_shooting_oracle():
    w = weights(q=(1.0, 1.0, 1.0), gamma13=0.5, gamma23=0.5)
    x0 = make_simplex(0.3, 0.3, 0.4)
    traj = solve_itvp(x0, w, ItvpConfig(horizon=10.0, dt=5e-3, tolerance=1e-10,
                                        max_iterations=400))
    assert traj.converged
    assert traj.residual < 1e-9
    # the configuration is 1<->2 symmetric; so must be the solution
    assert np.max(np.abs(traj.v[:, 0] - traj.v[:, 1])) < 1e-12
    v0_ref, xT_ref = _shooting_oracle(x0, w, 10.0)
    assert np.max(np.abs(traj.x[-1] - xT_ref)) < 1e-4
    assert np.max(np.abs(traj.v[0] - v0_ref)) < 1e-4


# ------------------------------------------------------------ agent sampler

def test_agent_path_zero_rates_never_moves():
    w = weights(q=(0.0, 0.0, 0.0))
    x_traj = integrate_forward(make_simplex(0.3, 0.3, 0.4), make_rate_matrix(), 2.0, 0.01)
    v_traj = integrate_backward([0.0, 0.0, 0.0], x_traj, w)
    path = sample_agent_path(x_traj, v_traj, w, 2, seed=5)
    assert list(path.states) == [2]


def test_agent_first_jump_exponential_mean():
    # constant rate 1 out of state 1 and (almost) nothing else: the value
    # gap v3 - v1 = 1 with Gamma13 = 1 drives w13 = 1; every other channel
    # is priced out of existence
    horizon = 50.0
    x_traj = integrate_forward(make_simplex(1.0, 0.0, 0.0), make_rate_matrix(), horizon, 0.1)
    m = len(x_traj.times)
    vs = np.tile([0.0, 0.0, 1.0], (m, 1))
    v_traj = type(x_traj)(times=x_traj.times, x=x_traj.x, v=vs)
    w_unit = weights(q=(0.0, 0.0, 0.0), gamma13=1.0, gamma23=1e12,
                     r31=1e12, r32=1e12)
    draws = []
    for k in range(10_000):
        p = sample_agent_path(x_traj, v_traj, w_unit, 1, seed=[99, k])
        if len(p.states) > 1:
            assert p.states[1] == 3
            draws.append(p.jump_times[1])
    assert len(draws) > 9_900                       # P(no jump in 50) ~ 2e-22
    assert np.mean(draws) == pytest.approx(1.0, abs=0.03)


def test_monte_carlo_matches_kolmogorov():
    w = weights(q=(1.0, 1.0, 1.0), gamma13=0.5, gamma23=0.5)
    x0 = make_simplex(0.3, 0.3, 0.4)
    traj = solve_itvp(x0, w, ItvpConfig(horizon=5.0, dt=0.01, tolerance=1e-9,
                                        max_iterations=300))
    assert traj.converged
    paths = sample_agent_paths(traj, traj, w, x0, n=10_000, seed=1234)
    emp = empirical_distribution(paths, 5.0)
    assert np.max(np.abs(emp - traj.x[-1])) < 0.02


def test_step_too_large_raised_for_escaping_dynamics():
    # huge outflow rate with a coarse step overshoots the simplex
    x0 = make_simplex(1.0, 0.0, 0.0)
    beta = make_rate_matrix(beta13=50.0)
    with pytest.raises(StepTooLarge):
        integrate_forward(x0, beta, 1.0, 0.1)
