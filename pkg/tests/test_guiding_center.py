import numpy as np
import pytest

from gyroloop.fields import frame
from gyroloop.fastslow import SlowState
from gyroloop.guiding_center import (
    drift_velocity,
    gc_energy,
    integrate_gc,
    mu0,
    rhs_order0,
    rhs_order1,
)
from gyroloop.slow_manifold import ShapeOrder

from conftest import random_slow_state


def test_mu0_and_energy_values(models):
    m = models["uniform"]
    x = SlowState([0.0, 0.0, 0.0], 0.0, 1.0, 0.0, 0.0)
    assert mu0(x, m) == pytest.approx(0.5)
    x2 = SlowState([0.0, 0.0, 0.0], 1.0, 0.0, 0.0, 0.0)
    assert gc_energy(x2) == pytest.approx(0.5)


def test_rhs_order0_uniform(models):
    m = models["uniform"]
    x = SlowState([0.1, -0.2, 0.3], 0.6, 0.8, -0.1, 0.0)
    g = rhs_order0(x, m)
    assert g.w1 == g.w2 == 0.0
    assert g.ubar == 0.0
    assert np.abs(g.xbar - np.array([0.0, 0.0, 0.6])).max() <= 1e-15
    assert g.svar == pytest.approx(1.0)


def test_rhs_order0_gradb_origin_no_mirror(models):
    # grad|B| is perpendicular to b, so the parallel force vanishes
    m = models["gradb"]
    g = rhs_order0(SlowState([0.0, 0.0, 0.0], 0.5, 1.0, 0.0, 0.0), m)
    assert g.ubar == pytest.approx(0.0, abs=1e-15)


def test_mirror_force_decelerates_into_stronger_field(models):
    m = models["screwpinch"]
    x = SlowState([0.1, 0.05, 0.2], 0.5, 0.7, -0.3, 0.0)
    fr = frame(m, x.xbar)
    assert np.dot(fr.b, fr.grad_abs_B) > 0  # climbing the mirror
    g = rhs_order0(x, m)
    assert g.ubar < 0


def test_rhs_order1_uniform_equals_order0(models, rng):
    m = models["uniform"]
    x = random_slow_state(rng)
    g0 = rhs_order0(x, m).to_vector()
    g1 = rhs_order1(x, 0.01, m).to_vector()
    assert np.abs(g0 - g1).max() <= 1e-12


def test_rhs_order1_gradb_drift_arithmetic(models):
    # mu0 = 0.5, alpha = 0.1, eps = 0.01, ubar = 0:
    # drift = -eps*mu0*(grad|B| x b)/|B| = (0, 0.0005, 0)
    m = models["gradb"]
    x = SlowState([0.0, 0.0, 0.0], 0.0, 1.0, 0.0, 0.0)
    g1 = rhs_order1(x, 0.01, m)
    assert np.abs(g1.xbar - np.array([0.0, 5.0e-4, 0.0])).max() <= 1e-15


@pytest.mark.parametrize("name", ["gradb", "screwpinch"])
def test_drift_identity_order1_minus_order0(name, models, rng):
    # the mean-position component of the order-1 generator differs from
    # order 0 by exactly the closed-form drift vector
    m = models[name]
    for eps in (1e-3, 1e-2):
        x = random_slow_state(rng)
        delta = rhs_order1(x, eps, m).xbar - rhs_order0(x, m).xbar
        assert np.abs(delta - drift_velocity(x, eps, m)).max() <= 1e-12


def test_order0_flow_conserves_invariants(models):
    m = models["screwpinch"]
    x0 = SlowState([0.15, -0.1, 0.05], 0.3, 0.7, -0.4, 0.0)
    traj = integrate_gc(x0, 0.01, m, 1.0, 1e-3, ShapeOrder.ORDER0)
    assert np.abs(traj.mu0 - traj.mu0[0]).max() / traj.mu0[0] <= 1e-9
    assert np.abs(traj.energy - traj.energy[0]).max() / traj.energy[0] <= 1e-9
    assert np.all(np.diff(traj.t) > 0)


def test_integrate_gc_order1_runs_and_tracks_order0(models):
    m = models["gradb"]
    x0 = SlowState([0.0, 0.0, 0.0], 0.2, 0.8, 0.0, 0.0)
    eps = 1e-2
    t1 = integrate_gc(x0, eps, m, 0.5, 5e-3, ShapeOrder.ORDER1)
    t0 = integrate_gc(x0, eps, m, 0.5, 5e-3, ShapeOrder.ORDER0)
    gap = np.abs(t1.states[-1].to_vector() - t0.states[-1].to_vector()).max()
    assert 0 < gap < 10 * eps  # drift-sized separation


def test_reduced_dynamics_tracks_full_loop_evolution(models):
    # decompose of the evolved loop follows the order-1 reduced trajectory
    # to O(eps^2) in the mean position over T=1
    from gyroloop.fastslow import decompose
    from gyroloop.loopspace import step_rk4_loop
    from gyroloop.slow_manifold import build_loop

    m = models["gradb"]
    x0 = SlowState([0.0, 0.0, 0.0], 0.3, 0.7, -0.4, 0.0)
    t_final = 1.0
    eps_list = np.array([2.5e-3, 5e-3, 1e-2])
    sups = []
    for eps in eps_list:
        dt = eps / 50.0
        n_steps = int(round(t_final / dt))
        check_every = max(1, n_steps // 20)
        gc = integrate_gc(x0, eps, m, t_final, t_final / 200, ShapeOrder.ORDER1)
        xs = np.array([s.xbar for s in gc.states])
        cur = build_loop(x0, eps, m, ShapeOrder.ORDER1)
        worst = 0.0
        for i in range(n_steps):
            cur = step_rk4_loop(cur, dt, eps, m)
            if (i + 1) % check_every == 0:
                t = (i + 1) * dt
                x, _ = decompose(cur, eps, m)
                ref = np.array([np.interp(t, gc.t, xs[:, j]) for j in range(3)])
                worst = max(worst, float(np.abs(x.xbar - ref).max()))
        sups.append(worst)
    slope = np.polyfit(np.log(eps_list), np.log(sups), 1)[0]
    assert slope >= 1.6
