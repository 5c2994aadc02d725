"""Presymplectic structure restricted to the slow manifold.

The loop-space 1-form pulled back to the slow loops (on the zero-phase
section of the residual circle symmetry) collapses, to O(eps^2), to the
guiding-center 1-form (A/eps + ubar b + eps W) . dxbar plus the gyrophase
term eps*mu0 (u2 du1 - u1 du2)/|uperp|^2.  The Noether invariant of the
residual phase symmetry is the loop action, which is eps*mu0 at leading
order -- the magnetic moment.
"""

from __future__ import annotations

import numpy as np

from .fields import GAUSS10_NODES, GAUSS10_WEIGHTS, frame
from .fastslow import FastState, SlowState, decompose, fast_norm
from .loopspace import loop_action
from .slow_manifold import ShapeOrder, build_loop, shape_function, y0_star


class GyrophaseSingularError(ValueError):
    """The gyrophase 1-form term is undefined at uperp = 0."""


def w_vector(x, model):
    """Closed-form W: -(3/2) mu0 grad|B| x b/|B| - ubar^2 kappa x b/|B|
    - mu0 tau b/2 - mu0 R."""
    fr = frame(model, x.xbar)
    m = (x.w1**2 + x.w2**2) / (2.0 * fr.abs_B)
    return (
        -1.5 * m * np.cross(fr.grad_abs_B, fr.b) / fr.abs_B
        - x.ubar**2 * np.cross(fr.kappa, fr.b) / fr.abs_B
        - 0.5 * m * fr.tau * fr.b
        - m * fr.R
    )


def w_vector_quadrature(x, model, n_theta=64, h_x=1e-5):
    """W from its defining loop integrals over the order-0 shape.

    Adds to the drift term the two averages (1/2)<(rho0.grad B) x rho0> and
    (1/2)<(grad rho0) . vhat0>, the gradient taken at fixed (ubar, w1, w2)
    by central differences.  Oracle for the closed form.
    """
    fr = frame(model, x.xbar)
    m = (x.w1**2 + x.w2**2) / (2.0 * fr.abs_B)
    drift = -np.cross(m * fr.grad_abs_B + x.ubar**2 * fr.kappa, fr.b) / fr.abs_B

    y0 = y0_star(x, model, n_theta)
    rho = y0.rho
    jac = model.grad_B(rho * 0.0 + x.xbar)  # (N,3,3), constant point
    dB = np.einsum("nij,nj->ni", jac, rho)
    term1 = 0.5 * np.mean(np.cross(dB, rho), axis=0)

    # velocity fluctuation of the order-0 loop
    W = x.wperp(fr)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    vhat0 = np.outer(np.cos(th), W) + np.outer(np.sin(th), np.cross(W, fr.b))

    term2 = np.zeros(3)
    for i in range(3):
        dx = np.zeros(3)
        dx[i] = h_x
        xp = SlowState(x.xbar + dx, x.ubar, x.w1, x.w2, x.svar)
        xm = SlowState(x.xbar - dx, x.ubar, x.w1, x.w2, x.svar)
        drho = (y0_star(xp, model, n_theta).rho - y0_star(xm, model, n_theta).rho) / (
            2.0 * h_x
        )
        term2[i] = 0.5 * np.mean(np.sum(drho * vhat0, axis=1))

    return drift + term1 + term2


def _loop_position_shape(q, eps, model, order, n_theta):
    """rho profile of the slow loop at section point q = (xbar, ubar, u1, u2)."""
    x = SlowState(q[:3], q[3], q[4], q[5], 0.0)
    loop = build_loop(x, eps, model, order, n_theta)
    return (loop.x - loop.x.mean(axis=0)) / eps


def xi_restricted(
    x,
    eps,
    model,
    tangent,
    method="closed",
    order=ShapeOrder.ORDER1,
    n_theta=32,
    h_x=1e-6,
):
    """Evaluate the restricted 1-form on a slow tangent at the zero-phase section.

    tangent = (dxbar (3,), dubar, du1, du2).  method='closed' uses the
    O(eps^2)-accurate closed form; method='quadrature' evaluates the defining
    pullback integrals on the order-1 slow loop.  The gyrophase term is
    singular at uperp = 0.
    """
    dxbar = np.asarray(tangent[0], dtype=float)
    dubar, du1, du2 = float(tangent[1]), float(tangent[2]), float(tangent[3])
    u1, u2 = x.w1, x.w2
    usq = u1**2 + u2**2

    if method == "closed":
        fr = frame(model, x.xbar)
        m = usq / (2.0 * fr.abs_B)
        coeff = model.A(x.xbar) / eps + x.ubar * fr.b + eps * w_vector(x, model)
        val = float(np.dot(coeff, dxbar))
        if du1 or du2:
            if usq < 1e-20:
                raise GyrophaseSingularError("gyrophase 1-form undefined at uperp = 0")
            val += eps * m * (u2 * du1 - u1 * du2) / usq
        return val

    if method != "quadrature":
        raise ValueError("method must be 'closed' or 'quadrature'")

    loop = build_loop(SlowState(x.xbar, x.ubar, u1, u2, 0.0), eps, model, order, n_theta)
    rho = (loop.x - loop.x.mean(axis=0)) / eps
    vbar = loop.v.mean(axis=0)
    fr = frame(model, x.xbar)
    vbar_perp = vbar - np.dot(vbar, fr.b) * fr.b
    vhat = loop.v - vbar

    pts = x.xbar + GAUSS10_NODES[:, None, None] * eps * rho  # (Q, N, 3)
    Bq = model.B(pts)
    bxr = np.cross(Bq, rho)  # (Q, N, 3)
    avg_flux = np.einsum("q,qni->i", GAUSS10_WEIGHTS, bxr) / rho.shape[0]
    lam_flux = np.einsum("q,q,qni->ni", GAUSS10_WEIGHTS, GAUSS10_NODES, bxr)

    q0 = np.concatenate([x.xbar, [x.ubar, u1, u2]])
    dq = np.concatenate([dxbar, [dubar, du1, du2]])
    dqn = np.linalg.norm(dq)
    if dqn == 0.0:
        return 0.0
    h = h_x * (1.0 + np.linalg.norm(q0))
    d = dq / dqn
    rp = _loop_position_shape(q0 + h * d, eps, model, order, n_theta)
    rm = _loop_position_shape(q0 - h * d, eps, model, order, n_theta)
    drho = dqn * (rp - rm) / (2.0 * h)

    coeff = model.A(x.xbar) / eps + x.ubar * fr.b + vbar_perp + avg_flux
    val = float(np.dot(coeff, dxbar))
    val += eps * float(np.mean(np.sum((vhat + lam_flux) * drho, axis=1)))
    return val


def noether_J(x, eps, model, order=ShapeOrder.ORDER1, n_theta=32):
    """Loop action of the slow loop through x: eps*mu0 + O(eps^2)."""
    loop = build_loop(x, eps, model, order, n_theta)
    return loop_action(loop, eps, model)


def fast_deviation(loop, eps, model, order=ShapeOrder.ORDER1):
    """Distance of a loop's fast variables from the truncated manifold."""
    x, y = decompose(loop, eps, model)
    ystar = shape_function(x, eps, model, order, loop.n_theta)
    dev = y.to_vector() - ystar.to_vector()
    return fast_norm(FastState.from_vector(dev, loop.n_theta))
