"""Parameterized phase-space loops and their spun transport dynamics.

A PhaseLoop carries position/velocity profiles on a uniform theta grid plus
a phase.  The evolution advects the profiles along the Lorentz flow while
rotating the parameterization at the frequency Omega = |B(xbar)|/eps; theta
derivatives are spectral, so band-limited loops are differentiated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class StepFailureError(RuntimeError):
    """Implicit step did not converge; carries the final residual."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def theta_grid(n_theta):
    return TWO_PI * np.arange(n_theta) / n_theta


@dataclass
class PhaseLoop:
    """Loop profiles x(theta_i), v(theta_i) with phase s (mod 2pi).

    s_slow accumulates the scaled phase eps*S as a plain real so long runs
    do not lose the slow phase to wrap-around.
    """

    x: np.ndarray
    v: np.ndarray
    s: float = 0.0
    s_slow: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape != self.v.shape or self.x.ndim != 2 or self.x.shape[1] != 3:
            raise ValueError("loop profiles must both have shape (n_theta, 3)")
        n = self.x.shape[0]
        if n < 8 or n % 2:
            raise ValueError("n_theta must be an even integer >= 8")

    @property
    def n_theta(self):
        return self.x.shape[0]

    @property
    def theta(self):
        return theta_grid(self.n_theta)

    def copy(self):
        return PhaseLoop(self.x.copy(), self.v.copy(), self.s, self.s_slow)


@dataclass
class LoopTangent:
    dx: np.ndarray
    dv: np.ndarray
    ds: float


def dtheta(profile):
    """Spectral d/dtheta of a (n_theta, ...) grid profile (Nyquist zeroed)."""
    n = profile.shape[0]
    coef = np.fft.rfft(profile, axis=0)
    k = np.arange(coef.shape[0])
    ik = 1j * k
    ik[-1] = 0.0  # even n: drop the Nyquist derivative, keeps D skew
    coef *= ik.reshape((-1,) + (1,) * (profile.ndim - 1))
    return np.fft.irfft(coef, n=n, axis=0)


def phase_shift(loop, psi):
    """Shift the loop parameterization, z(theta) -> z(theta + psi), spectrally."""
    n = loop.n_theta
    k = np.arange(n // 2 + 1)
    rot = np.exp(1j * k * psi).reshape(-1, 1)
    x = np.fft.irfft(np.fft.rfft(loop.x, axis=0) * rot, n=n, axis=0)
    v = np.fft.irfft(np.fft.rfft(loop.v, axis=0) * rot, n=n, axis=0)
    return PhaseLoop(x, v, loop.s, loop.s_slow)


def loop_mean(profile):
    return profile.mean(axis=0)


def omega(loop, eps, model, factor=1.0):
    """Spin frequency |B(xbar)|/eps (times an optional test factor).

    Any phase-shift-invariant functional is admissible; the factor hook
    exists so tests can exercise that gauge freedom without a second
    implementation.
    """
    absB = float(np.linalg.norm(model.B(loop_mean(loop.x))))
    return factor * absB / eps


def loop_rhs(loop, eps, model, omega_factor=1.0):
    """Time derivative of (x, v, S): Lorentz transport minus spun advection."""
    om = omega(loop, eps, model, omega_factor)
    dv = np.cross(loop.v, model.B(loop.x)) / eps - om * dtheta(loop.v)
    dx = loop.v - om * dtheta(loop.x)
    return LoopTangent(dx, dv, om)


def _advance(loop, dx, dv, ds, eps):
    return PhaseLoop(
        loop.x + dx,
        loop.v + dv,
        (loop.s + ds) % TWO_PI,
        loop.s_slow + eps * ds,
    )


def step_rk4_loop(loop, dt, eps, model, omega_factor=1.0):
    """Classical RK4 step of the loop equations."""
    k1 = loop_rhs(loop, eps, model, omega_factor)
    l2 = PhaseLoop(loop.x + 0.5 * dt * k1.dx, loop.v + 0.5 * dt * k1.dv, loop.s, loop.s_slow)
    k2 = loop_rhs(l2, eps, model, omega_factor)
    l3 = PhaseLoop(loop.x + 0.5 * dt * k2.dx, loop.v + 0.5 * dt * k2.dv, loop.s, loop.s_slow)
    k3 = loop_rhs(l3, eps, model, omega_factor)
    l4 = PhaseLoop(loop.x + dt * k3.dx, loop.v + dt * k3.dv, loop.s, loop.s_slow)
    k4 = loop_rhs(l4, eps, model, omega_factor)
    dx = (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx)
    dv = (dt / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv)
    ds = (dt / 6.0) * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds)
    return _advance(loop, dx, dv, ds, eps)


def step_implicit_midpoint(loop, dt, eps, model, tol=1e-12, max_iter=50, omega_factor=1.0):
    """Implicit-midpoint step, solved by simplified Newton in Fourier space.

    The Newton matrix freezes B at the loop mean and the advection at the
    current Omega, which makes it block 3x3 per Fourier mode; the remaining
    field inhomogeneity is handled by the outer iteration.  Converges the
    nonlinear residual to tol in the sup norm or raises StepFailureError.
    The converged step conserves the (quadratic) loop energy to solver
    tolerance regardless of the field model.
    """
    n = loop.n_theta
    k = np.arange(n // 2 + 1).astype(float)
    k[-1] = 0.0  # same Nyquist convention as dtheta, else that mode stalls
    eye = np.eye(3)

    x0, v0, s0 = loop.x, loop.v, loop.s
    rhs0 = loop_rhs(loop, eps, model, omega_factor)
    x1 = x0 + dt * rhs0.dx
    v1 = v0 + dt * rhs0.dv
    ds = dt * rhs0.ds

    residual = np.inf
    for _ in range(max_iter):
        mid = PhaseLoop(0.5 * (x0 + x1), 0.5 * (v0 + v1), s0, loop.s_slow)
        rhs_m = loop_rhs(mid, eps, model, omega_factor)
        rx = x1 - x0 - dt * rhs_m.dx
        rv = v1 - v0 - dt * rhs_m.dv
        rs = ds - dt * rhs_m.ds
        residual = max(np.abs(rx).max(), np.abs(rv).max(), abs(rs))
        if residual <= tol:
            return _advance(loop, x1 - x0, v1 - v0, ds, eps)

        om = rhs_m.ds
        Bm = model.B(loop_mean(mid.x))
        bx = np.array(
            [[0.0, -Bm[2], Bm[1]], [Bm[2], 0.0, -Bm[0]], [-Bm[1], Bm[0], 0.0]]
        )
        adv = 1.0 + 0.5j * dt * om * k  # per-mode 1 + (dt/2) Omega ik
        a_v = adv[:, None, None] * eye + (0.5 * dt / eps) * bx
        rx_hat = np.fft.rfft(rx, axis=0)
        rv_hat = np.fft.rfft(rv, axis=0)
        dv_hat = np.linalg.solve(a_v, rv_hat[..., None])[..., 0]
        dx_hat = (rx_hat + 0.5 * dt * dv_hat) / adv[:, None]
        x1 = x1 - np.fft.irfft(dx_hat, n=n, axis=0)
        v1 = v1 - np.fft.irfft(dv_hat, n=n, axis=0)
        ds = ds - rs

    raise StepFailureError(
        f"implicit midpoint stalled at residual {residual:.3e} after {max_iter} iterations",
        residual,
    )


def loop_energy(loop):
    """Loop energy: theta-average of |v|^2 / 2 (exactly conserved by the flow)."""
    return float(0.5 * np.mean(np.sum(loop.v**2, axis=1)))


def loop_action(loop, eps, model):
    """Normalized loop action, the theta-average of (A(x)/eps + v) . dx/dtheta.

    Conserved by the loop flow for any frequency functional; on slow-manifold
    loops it reduces to eps*mu0 at leading order.
    """
    integrand = (model.A(loop.x) / eps + loop.v) * dtheta(loop.x)
    return float(np.mean(np.sum(integrand, axis=1)))


def evolve_loop(loop, eps, model, t_final, dt, stepper=step_rk4_loop, sample_every=1, **kw):
    """March the loop to t_final, returning (times, loops) at sampled steps."""
    n_steps = int(round(t_final / dt))
    times = [0.0]
    samples = [loop.copy()]
    current = loop
    for i in range(1, n_steps + 1):
        current = stepper(current, dt, eps, model, **kw)
        if i % sample_every == 0 or i == n_steps:
            times.append(i * dt)
            samples.append(current)
    return np.array(times), samples
