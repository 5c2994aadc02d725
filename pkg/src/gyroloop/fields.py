"""Analytic magnetic field models and the field-aligned frame.

Every model provides the vector potential A, the field B = curl A, and the
Jacobian of B, all broadcastable over trailing-(3,) arrays of points.  The
frame() function packages the unit vectors (b, e1, e2) together with the
geometric scalars (grad|B|, curvature kappa, torsion tau, parallel gradient
kpar, frame twist R) that the reduced equations consume.

Units are normalized (no SI constants); epsilon plays the role of the
mass-to-charge ratio and multiplies the gyroradius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Gauss-Legendre nodes/weights on [0, 1], used for line-averaged field values.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
GAUSS10_NODES = 0.5 * (_GL_X + 1.0)
GAUSS10_WEIGHTS = 0.5 * _GL_W


class SingularFieldError(ValueError):
    """Raised when |B| falls below the nowhere-vanishing threshold."""


ABS_B_FLOOR = 1e-10


class FieldModel:
    """Base class: static magnetic field with closed-form A, B and grad B.

    Subclasses implement A(x), B(x) and grad_B(x) for x of shape (..., 3).
    grad_B returns the Jacobian J with J[..., i, j] = dB_i/dx_j, so the
    directional derivative (v.grad)B is J @ v.
    """

    name = "field"

    def A(self, x):
        raise NotImplementedError

    def B(self, x):
        raise NotImplementedError

    def grad_B(self, x):
        raise NotImplementedError

    def abs_B(self, x):
        return np.linalg.norm(self.B(x), axis=-1)

    def unit_b(self, x):
        B = self.B(x)
        return B / np.linalg.norm(B, axis=-1, keepdims=True)

    def delta_B(self, xbar, rho, eps):
        """Chord-averaged field gradient along rho.

        Returns the loop of vectors int_0^1 (rho.grad)B(xbar + lam*eps*rho) dlam
        for rho of shape (N, 3); satisfies B(xbar + eps*rho) = B(xbar) + eps*dB
        up to quadrature error (negligible for the analytic models here).
        """
        rho = np.asarray(rho, dtype=float)
        pts = xbar + GAUSS10_NODES[:, None, None] * eps * rho
        jac = self.grad_B(pts)
        return np.einsum("q,qnij,nj->ni", GAUSS10_WEIGHTS, jac, rho)


class UniformField(FieldModel):
    """B = B0 zhat with gauge A = (0, B0 x, 0)."""

    name = "uniform"

    def __init__(self, b0=1.0):
        self.b0 = float(b0)

    def A(self, x):
        x = np.asarray(x, dtype=float)
        A = np.zeros_like(x)
        A[..., 1] = self.b0 * x[..., 0]
        return A

    def B(self, x):
        x = np.asarray(x, dtype=float)
        B = np.zeros_like(x)
        B[..., 2] = self.b0
        return B

    def grad_B(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (3,))

    def delta_B(self, xbar, rho, eps):
        return np.zeros_like(np.asarray(rho, dtype=float))


class LinearGradBField(FieldModel):
    """B = B0 (1 + alpha x) zhat with gauge A = (0, B0 (x + alpha x^2/2), 0).

    Not force-free: only B = curl A is required.  Isolates the grad-B drift
    (grad|B| = B0 alpha xhat, kappa = tau = kpar = 0 on the b = zhat lines).
    Valid on 1 + alpha x > 0.
    """

    name = "gradb"

    def __init__(self, b0=1.0, alpha=0.1):
        self.b0 = float(b0)
        self.alpha = float(alpha)

    def A(self, x):
        x = np.asarray(x, dtype=float)
        A = np.zeros_like(x)
        xc = x[..., 0]
        A[..., 1] = self.b0 * (xc + 0.5 * self.alpha * xc**2)
        return A

    def B(self, x):
        x = np.asarray(x, dtype=float)
        B = np.zeros_like(x)
        B[..., 2] = self.b0 * (1.0 + self.alpha * x[..., 0])
        return B

    def grad_B(self, x):
        x = np.asarray(x, dtype=float)
        jac = np.zeros(x.shape + (3,))
        jac[..., 2, 0] = self.b0 * self.alpha
        return jac

    def delta_B(self, xbar, rho, eps):
        # grad B is constant, so the chord average collapses to (rho.grad)B.
        rho = np.asarray(rho, dtype=float)
        dB = np.zeros_like(rho)
        dB[..., 2] = self.b0 * self.alpha * rho[..., 0]
        return dB


class ScrewPinchField(FieldModel):
    """Helical pinch with a mirror term: all frame scalars nonzero off axis.

    A = (-B0 (1 + beta z) y / 2,  B0 (1 + beta z) x / 2,  -bp (r^2 + sigma r^4 / 2) / 2)
    B = (-B0 beta x / 2 - bp y (1 + sigma r^2),
         -B0 beta y / 2 + bp x (1 + sigma r^2),
          B0 (1 + beta z)),             r^2 = x^2 + y^2.

    The beta term is a paraxial mirror (kpar != 0 along field lines), the bp
    term twists the lines (kappa, tau != 0), and sigma shears the twist so
    grad B varies in space.  Valid for 1 + beta z away from 0; tests stay in
    |x|, |y|, |z| <= 1 with the default parameters.
    """

    name = "screwpinch"

    def __init__(self, b0=1.0, beta=0.25, bp=0.4, sigma=0.3):
        self.b0 = float(b0)
        self.beta = float(beta)
        self.bp = float(bp)
        self.sigma = float(sigma)

    def A(self, x):
        x = np.asarray(x, dtype=float)
        xc, yc, zc = x[..., 0], x[..., 1], x[..., 2]
        r2 = xc**2 + yc**2
        A = np.empty_like(x)
        A[..., 0] = -0.5 * self.b0 * (1.0 + self.beta * zc) * yc
        A[..., 1] = 0.5 * self.b0 * (1.0 + self.beta * zc) * xc
        A[..., 2] = -0.5 * self.bp * (r2 + 0.5 * self.sigma * r2**2)
        return A

    def B(self, x):
        x = np.asarray(x, dtype=float)
        xc, yc, zc = x[..., 0], x[..., 1], x[..., 2]
        r2 = xc**2 + yc**2
        B = np.empty_like(x)
        B[..., 0] = -0.5 * self.b0 * self.beta * xc - self.bp * yc * (1.0 + self.sigma * r2)
        B[..., 1] = -0.5 * self.b0 * self.beta * yc + self.bp * xc * (1.0 + self.sigma * r2)
        B[..., 2] = self.b0 * (1.0 + self.beta * zc)
        return B

    def grad_B(self, x):
        x = np.asarray(x, dtype=float)
        xc, yc = x[..., 0], x[..., 1]
        jac = np.zeros(x.shape + (3,))
        jac[..., 0, 0] = -0.5 * self.b0 * self.beta - 2.0 * self.bp * self.sigma * xc * yc
        jac[..., 0, 1] = -self.bp * (1.0 + self.sigma * (xc**2 + 3.0 * yc**2))
        jac[..., 1, 0] = self.bp * (1.0 + self.sigma * (3.0 * xc**2 + yc**2))
        jac[..., 1, 1] = -0.5 * self.b0 * self.beta + 2.0 * self.bp * self.sigma * xc * yc
        jac[..., 2, 2] = self.b0 * self.beta
        return jac


@dataclass
class FrameData:
    """Field-aligned orthonormal frame and geometric scalars at one point.

    b = B/|B|, e1, e2 with b = e1 x e2; kappa = (b.grad)b, tau = b.curl b,
    kpar = b.grad ln|B|, R = (grad e1).e2.  jac_B and jac_b are Jacobians
    with [i, j] = d(.)_i/dx_j.
    """

    b: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    abs_B: float
    grad_abs_B: np.ndarray
    kappa: np.ndarray
    tau: float
    kpar: float
    R: np.ndarray
    B: np.ndarray
    jac_B: np.ndarray
    jac_b: np.ndarray


def _perp_frame(b):
    """e1 from a fixed reference vector, e2 = b x e1."""
    ref = np.array([1.0, 0.0, 0.0])
    if np.linalg.norm(np.cross(ref, b)) < 1e-6:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = ref - np.dot(ref, b) * b
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(b, e1)


def frame(model, x, h_frame=1e-5):
    """Evaluate the field-aligned frame and all geometric scalars at x.

    R is obtained by central differences of e1 (step h_frame) contracted
    with e2; everything else comes from the analytic Jacobian of B.
    Raises SingularFieldError when |B| < 1e-10.
    """
    x = np.asarray(x, dtype=float)
    B = model.B(x)
    absB = float(np.linalg.norm(B))
    if absB < ABS_B_FLOOR:
        raise SingularFieldError(f"|B| = {absB:.3e} below threshold at x = {x}")
    b = B / absB
    jac_B = model.grad_B(x)
    grad_absB = jac_B.T @ B / absB
    jac_b = jac_B / absB - np.outer(B, grad_absB) / absB**2
    kappa = jac_b @ b
    curl_b = np.array(
        [jac_b[2, 1] - jac_b[1, 2], jac_b[0, 2] - jac_b[2, 0], jac_b[1, 0] - jac_b[0, 1]]
    )
    tau = float(np.dot(b, curl_b))
    kpar = float(np.dot(b, grad_absB) / absB)
    e1, e2 = _perp_frame(b)

    R = np.zeros(3)
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h_frame
        e1p, _ = _perp_frame(model.unit_b(x + dx))
        e1m, _ = _perp_frame(model.unit_b(x - dx))
        R[i] = np.dot((e1p - e1m) / (2.0 * h_frame), e2)

    return FrameData(
        b=b,
        e1=e1,
        e2=e2,
        abs_B=absB,
        grad_abs_B=grad_absB,
        kappa=kappa,
        tau=tau,
        kpar=kpar,
        R=R,
        B=B,
        jac_B=jac_B,
        jac_b=jac_b,
    )


_MODEL_REGISTRY = {
    "uniform": UniformField,
    "gradb": LinearGradBField,
    "screwpinch": ScrewPinchField,
}


def make_model(name, **params):
    """Build a field model by registry name (uniform | gradb | screwpinch)."""
    try:
        cls = _MODEL_REGISTRY[name.lower()]
    except KeyError:
        raise ValueError(f"unknown field model '{name}'; choose from {sorted(_MODEL_REGISTRY)}")
    return cls(**params)
