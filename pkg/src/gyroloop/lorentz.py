"""Full-orbit charged-particle integrators: the brute-force ground truth.

vdot = v x B(x)/eps, xdot = v.  Boris is the long-time workhorse (velocity
magnitude preserved exactly per step); RK4 provides high-accuracy short-time
references and clean convergence fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ParticleState:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.array(self.x, dtype=float)
        self.v = np.array(self.v, dtype=float)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray

    def __len__(self):
        return self.t.shape[0]

    def energy(self):
        return 0.5 * np.sum(self.v**2, axis=1)


def step_boris(state, dt, eps, model):
    """One Boris rotation step: drift-kick with exact |v| preservation."""
    xh = state.x + 0.5 * dt * state.v
    t_vec = (0.5 * dt / eps) * model.B(xh)
    s_vec = 2.0 * t_vec / (1.0 + np.dot(t_vec, t_vec))
    v_prime = state.v + np.cross(state.v, t_vec)
    v_new = state.v + np.cross(v_prime, s_vec)
    x_new = xh + 0.5 * dt * v_new
    return ParticleState(x_new, v_new, state.t + dt)


def _lorentz_rhs(x, v, eps, model):
    return v, np.cross(v, model.B(x)) / eps


def step_rk4(state, dt, eps, model):
    """Classical RK4 step of the Lorentz system."""
    x, v = state.x, state.v
    k1x, k1v = _lorentz_rhs(x, v, eps, model)
    k2x, k2v = _lorentz_rhs(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, eps, model)
    k3x, k3v = _lorentz_rhs(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, eps, model)
    k4x, k4v = _lorentz_rhs(x + dt * k3x, v + dt * k3v, eps, model)
    x_new = x + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    v_new = v + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return ParticleState(x_new, v_new, state.t + dt)


def integrate(state0, eps, model, t_final, dt, stepper="boris"):
    """March the particle to t_final, recording every step.

    The Boris path is inlined for speed; stepper='rk4' delegates to step_rk4.
    """
    n_steps = int(round(t_final / dt))
    ts = state0.t + dt * np.arange(n_steps + 1)
    xs = np.empty((n_steps + 1, 3))
    vs = np.empty((n_steps + 1, 3))
    xs[0], vs[0] = state0.x, state0.v

    if stepper == "boris":
        x, v = state0.x.copy(), state0.v.copy()
        half = 0.5 * dt
        fac = 0.5 * dt / eps
        B = model.B
        for i in range(1, n_steps + 1):
            xh = x + half * v
            t_vec = fac * B(xh)
            s_vec = 2.0 * t_vec / (1.0 + t_vec @ t_vec)
            v_prime = v + np.cross(v, t_vec)
            v = v + np.cross(v_prime, s_vec)
            x = xh + half * v
            xs[i], vs[i] = x, v
    elif stepper == "rk4":
        s = ParticleState(state0.x.copy(), state0.v.copy(), state0.t)
        for i in range(1, n_steps + 1):
            s = step_rk4(s, dt, eps, model)
            xs[i], vs[i] = s.x, s.v
    else:
        raise ValueError("stepper must be 'boris' or 'rk4'")
    return Trajectory(ts, xs, vs)


def gyro_average(traj, window):
    """Boxcar average of the positions over one gyroperiod window.

    Returns (t_mid, x_avg) on the interior range where the full window fits.
    The window is snapped to a whole number of samples, so pick dt to divide
    the gyroperiod when endpoint leakage matters.
    """
    dt = traj.t[1] - traj.t[0]
    m = max(2, int(round(window / dt)))
    if m >= len(traj):
        raise ValueError("window longer than the trajectory")
    csum = np.vstack([np.zeros(3), np.cumsum(traj.x, axis=0)])
    avg = (csum[m:] - csum[:-m]) / m  # mean of samples j .. j+m-1
    t_mid = traj.t[: len(traj) - m + 1] + 0.5 * (m - 1) * dt
    return t_mid, avg


def drift_fit(t, x_avg):
    """Least-squares drift velocity of smoothed guiding-center positions."""
    return np.array([np.polyfit(t, x_avg[:, i], 1)[0] for i in range(3)])


def mu0_series(traj, model, eps):
    """mu0 along the orbit: perpendicular speed squared over 2|B|, with the
    field direction and strength taken at the gyro-averaged position."""
    xbar0 = traj.x[0]
    absB0 = float(np.linalg.norm(model.B(xbar0)))
    window = 2.0 * np.pi * eps / absB0
    t_mid, x_avg = gyro_average(traj, window)
    dt = traj.t[1] - traj.t[0]
    m = int(round(window / dt))
    # velocity sample at the window center
    idx = np.arange(len(t_mid)) + (m - 1) // 2
    v = traj.v[idx]
    Bavg = model.B(x_avg)
    absB = np.linalg.norm(Bavg, axis=1)
    b = Bavg / absB[:, None]
    vpar = np.sum(v * b, axis=1)
    vperp_sq = np.sum(v * v, axis=1) - vpar**2
    return t_mid, vperp_sq / (2.0 * absB)
