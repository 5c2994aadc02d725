"""Change of variables between phase loops and fast/slow coordinates.

The slow variables x = (xbar, ubar, w1, w2, svar) hold the loop mean
position, the parallel mean velocity, the two adiabatic components of the
first velocity harmonic, and the scaled phase.  Everything else -- the
scaled position fluctuation rho, the perpendicular mean velocity, the
parallel and non-adiabatic pieces of the first harmonic, and the higher
velocity harmonics -- is fast and collected in y.  The loop equations then
split into eps*ydot = f_eps(x, y), xdot = g_eps(x, y) with an explicitly
invertible frozen operator D_y f0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import frame
from .loopspace import TWO_PI, PhaseLoop, dtheta, theta_grid


@dataclass
class SlowState:
    """Slow coordinates (also used as the container for slow tangents)."""

    xbar: np.ndarray
    ubar: float
    w1: float
    w2: float
    svar: float = 0.0

    def __post_init__(self):
        self.xbar = np.asarray(self.xbar, dtype=float)

    def to_vector(self):
        return np.concatenate([self.xbar, [self.ubar, self.w1, self.w2, self.svar]])

    @classmethod
    def from_vector(cls, vec):
        return cls(vec[:3], float(vec[3]), float(vec[4]), float(vec[5]), float(vec[6]))

    def wperp(self, fr):
        return self.w1 * fr.e1 + self.w2 * fr.e2

    def copy(self):
        return SlowState(self.xbar.copy(), self.ubar, self.w1, self.w2, self.svar)


@dataclass
class FastState:
    """Fast coordinates: zero-mean rho loop, scalar first-harmonic pieces,
    and the velocity harmonics >= 2 (also used for fast tangents)."""

    rho: np.ndarray
    vbar1: float
    vbar2: float
    uplus: float
    uminus: float
    omega1: float
    omega2: float
    vhat2p: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.vhat2p = np.asarray(self.vhat2p, dtype=float)

    @property
    def n_theta(self):
        return self.rho.shape[0]

    @classmethod
    def zeros(cls, n_theta):
        return cls(np.zeros((n_theta, 3)), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, np.zeros((n_theta, 3)))

    @property
    def scalars(self):
        return np.array(
            [self.vbar1, self.vbar2, self.uplus, self.uminus, self.omega1, self.omega2]
        )

    def to_vector(self):
        return np.concatenate([self.rho.ravel(), self.scalars, self.vhat2p.ravel()])

    @classmethod
    def from_vector(cls, vec, n_theta):
        m = 3 * n_theta
        rho = vec[:m].reshape(n_theta, 3)
        s = vec[m : m + 6]
        vhat2p = vec[m + 6 :].reshape(n_theta, 3)
        return cls(rho, *(float(v) for v in s), vhat2p)

    def omperp(self, fr):
        return self.omega1 * fr.e1 + self.omega2 * fr.e2


def fast_norm(y):
    """Weighted sup norm: grid sup for the loop profiles, |.| for scalars."""
    return float(
        max(np.abs(y.rho).max(), np.abs(y.scalars).max(), np.abs(y.vhat2p).max())
    )


def fast_axpy(a, y1, y2):
    """a*y1 + y2 on fast states."""
    return FastState.from_vector(a * y1.to_vector() + y2.to_vector(), y1.n_theta)


def first_harmonic(profile):
    """Cos/sin vector coefficients of the first theta harmonic."""
    th = theta_grid(profile.shape[0])
    plus = 2.0 * np.mean(np.cos(th)[:, None] * profile, axis=0)
    minus = 2.0 * np.mean(np.sin(th)[:, None] * profile, axis=0)
    return plus, minus


def harmonic_table(profile):
    """All cos/sin coefficients: arrays (n//2 + 1, 3); row k is harmonic k.

    Row 0 holds the mean in 'plus'; the Nyquist row keeps only its cos part.
    """
    n = profile.shape[0]
    coef = np.fft.rfft(profile, axis=0) / n
    plus = 2.0 * coef.real
    minus = -2.0 * coef.imag
    plus[0] *= 0.5
    plus[-1] *= 0.5
    minus[0] = 0.0
    minus[-1] = 0.0
    return plus, minus


def synth_harmonics(plus, minus, n_theta):
    """Inverse of harmonic_table."""
    coef = 0.5 * (plus - 1j * minus) * n_theta
    coef[0] = plus[0] * n_theta
    coef[-1] = plus[-1] * n_theta
    return np.fft.irfft(coef, n=n_theta, axis=0)


def validate_fast(y, tol=1e-10):
    """Check the structural invariants: zero-mean rho, no 0/1 harmonics in vhat2p."""
    scale = 1.0 + fast_norm(y)
    mean_rho = np.abs(y.rho.mean(axis=0)).max()
    if mean_rho > tol * scale:
        raise ValueError(f"rho has nonzero mean {mean_rho:.3e}")
    mean_v = np.abs(y.vhat2p.mean(axis=0)).max()
    vp, vm = first_harmonic(y.vhat2p)
    h1 = max(np.abs(vp).max(), np.abs(vm).max())
    if mean_v > tol * scale or h1 > tol * scale:
        raise ValueError(
            f"vhat2p has low-harmonic content (mean {mean_v:.3e}, first {h1:.3e})"
        )


def _fluctuation_velocity(x, y, fr, include_w=True):
    """Grid profile of the velocity fluctuation implied by (w, y)."""
    n = y.n_theta
    th = theta_grid(n)
    c, s = np.cos(th)[:, None], np.sin(th)[:, None]
    om = y.omperp(fr)
    w = x.wperp(fr) if include_w else np.zeros(3)
    par = (y.uplus * np.cos(th) + y.uminus * np.sin(th))[:, None] * fr.b
    return par + c * (om + w) + s * np.cross(fr.b, om - w) + y.vhat2p


def decompose(loop, eps, model):
    """Split a phase loop into (SlowState, FastState); inverse of reconstruct."""
    xbar = loop.x.mean(axis=0)
    vbar = loop.v.mean(axis=0)
    fr = frame(model, xbar)
    rho = (loop.x - xbar) / eps
    vhat = loop.v - vbar

    vp, vm = first_harmonic(vhat)
    th = loop.theta
    vhat2p = vhat - np.cos(th)[:, None] * vp - np.sin(th)[:, None] * vm

    v1p, v2p = float(np.dot(fr.e1, vp)), float(np.dot(fr.e2, vp))
    v1m, v2m = float(np.dot(fr.e1, vm)), float(np.dot(fr.e2, vm))
    x = SlowState(
        xbar,
        float(np.dot(fr.b, vbar)),
        0.5 * (v1p - v2m),
        0.5 * (v2p + v1m),
        loop.s_slow,
    )
    y = FastState(
        rho,
        float(np.dot(fr.e1, vbar)),
        float(np.dot(fr.e2, vbar)),
        float(np.dot(fr.b, vp)),
        float(np.dot(fr.b, vm)),
        0.5 * (v1p + v2m),
        0.5 * (v2p - v1m),
        vhat2p,
    )
    return x, y


def reconstruct(x, y, eps, model, check=True):
    """Assemble the phase loop for (x, y); exact inverse of decompose."""
    if check:
        validate_fast(y)
    fr = frame(model, x.xbar)
    vbar = x.ubar * fr.b + y.vbar1 * fr.e1 + y.vbar2 * fr.e2
    v = vbar + _fluctuation_velocity(x, y, fr)
    xg = x.xbar + eps * y.rho
    return PhaseLoop(xg, v, (x.svar / eps) % TWO_PI, x.svar)


def _moments(profile, th):
    """Mean, first-harmonic cos/sin means, and the 2+ remainder of a grid loop."""
    mean = profile.mean(axis=0)
    mc = np.mean(np.cos(th)[:, None] * profile, axis=0)
    ms = np.mean(np.sin(th)[:, None] * profile, axis=0)
    rest = profile - mean - 2.0 * np.cos(th)[:, None] * mc - 2.0 * np.sin(th)[:, None] * ms
    return mean, mc, ms, rest


def rhs_split(x, y, eps, model):
    """The split generator: returns (g, f) with xdot = g and eps*ydot = f.

    Evaluating at eps = 0 reproduces the frozen operator f0 exactly; the
    chord-averaged delta_B enters only through the O(eps) brackets.
    """
    fr = frame(model, x.xbar)
    b, e1, e2 = fr.b, fr.e1, fr.e2
    absB = fr.abs_B
    n = y.n_theta
    th = theta_grid(n)

    wperp = x.wperp(fr)
    omperp = y.omperp(fr)
    vbar = x.ubar * b + y.vbar1 * e1 + y.vbar2 * e2
    vhat = _fluctuation_velocity(x, y, fr)
    vfull = vbar + vhat

    dB = model.delta_B(x.xbar, y.rho, eps)
    force = np.cross(vfull, dB)
    f_mean, f_cos, f_sin, f_rest = _moments(force, th)

    vgb = fr.jac_b @ vbar  # (vbar . grad) b
    vR = float(np.dot(vbar, fr.R))

    g = SlowState(
        xbar=x.ubar * b + y.vbar1 * e1 + y.vbar2 * e2,
        ubar=float(np.dot(vgb, vbar) + np.dot(b, f_mean)),
        w1=float(
            -0.5 * np.dot(vgb, y.uplus * e1 - y.uminus * e2)
            + vR * x.w2
            + np.dot(e1, f_cos)
            - np.dot(e2, f_sin)
        ),
        w2=float(
            -0.5 * np.dot(vgb, y.uplus * e2 + y.uminus * e1)
            - vR * x.w1
            + np.dot(e2, f_cos)
            + np.dot(e1, f_sin)
        ),
        svar=absB,
    )

    f = FastState(
        rho=vhat - absB * dtheta(y.rho),
        vbar1=absB * y.vbar2
        + eps * (np.dot(e1, f_mean) - x.ubar * np.dot(vgb, e1) + vR * y.vbar2),
        vbar2=-absB * y.vbar1
        + eps * (np.dot(e2, f_mean) - x.ubar * np.dot(vgb, e2) - vR * y.vbar1),
        uplus=-absB * y.uminus
        + eps * (np.dot(vgb, wperp + omperp) + 2.0 * np.dot(b, f_cos)),
        uminus=absB * y.uplus
        + eps * (np.dot(vgb, np.cross(wperp - omperp, b)) + 2.0 * np.dot(b, f_sin)),
        omega1=2.0 * absB * y.omega2
        + eps
        * (
            np.dot(e1, f_cos)
            + np.dot(e2, f_sin)
            - 0.5 * np.dot(vgb, y.uplus * e1 + y.uminus * e2)
            + vR * y.omega2
        ),
        omega2=-2.0 * absB * y.omega1
        + eps
        * (
            np.dot(e2, f_cos)
            - np.dot(e1, f_sin)
            - 0.5 * np.dot(vgb, y.uplus * e2 - y.uminus * e1)
            - vR * y.omega1
        ),
        vhat2p=np.cross(y.vhat2p, fr.B) - absB * dtheta(y.vhat2p) + eps * f_rest,
    )
    return g, f


def f0(x, y, model):
    """Frozen fast operator, the eps -> 0 limit of f_eps.

    Affine in y: the rho equation keeps the slow gyration source built from
    wperp, which is what the leading shape function must balance.
    """
    fr = frame(model, x.xbar)
    absB = fr.abs_B
    vhat = _fluctuation_velocity(x, y, fr)
    return FastState(
        rho=vhat - absB * dtheta(y.rho),
        vbar1=absB * y.vbar2,
        vbar2=-absB * y.vbar1,
        uplus=-absB * y.uminus,
        uminus=absB * y.uplus,
        omega1=2.0 * absB * y.omega2,
        omega2=-2.0 * absB * y.omega1,
        vhat2p=np.cross(y.vhat2p, fr.B) - absB * dtheta(y.vhat2p),
    )


def dyf0(x, dy, model):
    """Jacobian action D_y f0 (x-dependent, linear in the tangent dy)."""
    fr = frame(model, x.xbar)
    absB = fr.abs_B
    x0 = SlowState(x.xbar, 0.0, 0.0, 0.0, 0.0)  # strip the affine wperp offset
    vhat = _fluctuation_velocity(x0, dy, fr)
    return FastState(
        rho=vhat - absB * dtheta(dy.rho),
        vbar1=absB * dy.vbar2,
        vbar2=-absB * dy.vbar1,
        uplus=-absB * dy.uminus,
        uminus=absB * dy.uplus,
        omega1=2.0 * absB * dy.omega2,
        omega2=-2.0 * absB * dy.omega1,
        vhat2p=np.cross(dy.vhat2p, fr.B) - absB * dtheta(dy.vhat2p),
    )


def inv_dyf0(x, y_source, model):
    """Solve D_y f0(x, .)[dy] = y_source by harmonic-wise closed forms.

    The 2x2 rotation blocks invert directly; the velocity harmonics k >= 2
    invert through the cross-coupled vector formulas, and the rho harmonics
    follow by back-substitution of the advection balance.
    """
    fr = frame(model, x.xbar)
    b, e1, e2 = fr.b, fr.e1, fr.e2
    absB = fr.abs_B
    n = y_source.n_theta
    kmax = n // 2

    dvbar1 = -y_source.vbar2 / absB
    dvbar2 = y_source.vbar1 / absB
    duplus = y_source.uminus / absB
    duminus = -y_source.uplus / absB
    domega1 = -y_source.omega2 / (2.0 * absB)
    domega2 = y_source.omega1 / (2.0 * absB)

    def perp(vecs):
        return vecs - np.outer(vecs @ b, b)

    vsp, vsm = harmonic_table(y_source.vhat2p)
    dvp = np.zeros_like(vsp)
    dvm = np.zeros_like(vsm)
    ks = np.arange(2, kmax)  # Nyquist stays zero (band-limited convention)
    if ks.size:
        k = ks[:, None].astype(float)
        c2 = k**2 / (k**2 - 1.0)
        c1 = k / (k**2 - 1.0)
        sp, sm = vsp[ks], vsm[ks]
        dvp[ks] = (np.outer(sm @ b, b) + c2 * perp(sm) + c1 * np.cross(sp, b)) / (k * absB)
        dvm[ks] = -(np.outer(sp @ b, b) + c2 * perp(sp) - c1 * np.cross(sm, b)) / (k * absB)

    rsp, rsm = harmonic_table(y_source.rho)
    drp = np.zeros_like(rsp)
    drm = np.zeros_like(rsm)
    om_s = y_source.omega1 * e1 + y_source.omega2 * e2
    drp[1] = rsm[1] / absB + y_source.uplus * b / absB**2 + om_s / (2.0 * absB**2)
    drm[1] = -rsp[1] / absB + y_source.uminus * b / absB**2 + np.cross(b, om_s) / (
        2.0 * absB**2
    )
    if ks.size:
        k = ks[:, None].astype(float)
        drp[ks] = (rsm[ks] - dvm[ks]) / (k * absB)
        drm[ks] = (dvp[ks] - rsp[ks]) / (k * absB)

    return FastState(
        rho=synth_harmonics(drp, drm, n),
        vbar1=dvbar1,
        vbar2=dvbar2,
        uplus=duplus,
        uminus=duminus,
        omega1=domega1,
        omega2=domega2,
        vhat2p=synth_harmonics(dvp, dvm, n),
    )
