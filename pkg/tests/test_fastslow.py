import numpy as np
import pytest

from gyroloop.fields import UniformField, frame
from gyroloop.fastslow import (
    FastState,
    SlowState,
    decompose,
    dyf0,
    f0,
    fast_axpy,
    fast_norm,
    first_harmonic,
    harmonic_table,
    inv_dyf0,
    reconstruct,
    rhs_split,
    synth_harmonics,
    validate_fast,
)
from gyroloop.loopspace import PhaseLoop, loop_rhs, theta_grid

from conftest import random_fast_state, random_slow_state


def test_harmonic_table_round_trip(rng):
    prof = random_fast_state(rng).rho
    plus, minus = harmonic_table(prof)
    back = synth_harmonics(plus, minus, prof.shape[0])
    assert np.abs(back - prof).max() <= 1e-13


def test_first_harmonic_extraction():
    n = 32
    th = theta_grid(n)
    a, b = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.0, 4.0])
    prof = np.outer(np.cos(th), a) + np.outer(np.sin(th), b) + np.outer(np.cos(3 * th), a)
    p, m = first_harmonic(prof)
    assert np.abs(p - a).max() <= 1e-13
    assert np.abs(m - b).max() <= 1e-13


def test_decompose_constant_loop(models):
    m = models["screwpinch"]
    xc = np.array([0.2, 0.1, -0.1])
    vc = np.array([0.5, -0.2, 0.4])
    n = 32
    loop = PhaseLoop(np.tile(xc, (n, 1)), np.tile(vc, (n, 1)), 0.0, 0.0)
    x, y = decompose(loop, 0.05, m)
    fr = frame(m, xc)
    assert np.abs(y.rho).max() <= 1e-13
    assert np.abs(y.vhat2p).max() <= 1e-13
    assert abs(y.uplus) <= 1e-15 and abs(y.uminus) <= 1e-15
    assert abs(y.omega1) <= 1e-15 and abs(y.omega2) <= 1e-15
    assert abs(x.w1) <= 1e-15 and abs(x.w2) <= 1e-15
    assert x.ubar == pytest.approx(np.dot(fr.b, vc))
    assert y.vbar1 == pytest.approx(np.dot(fr.e1, vc))
    assert y.vbar2 == pytest.approx(np.dot(fr.e2, vc))


@pytest.mark.parametrize("sense,expect_w", [(-1.0, True), (+1.0, False)])
def test_decompose_rotation_sense_splits_w_and_omega(models, sense, expect_w):
    # fluctuation (cos I - sin bx).W is pure adiabatic velocity, the
    # opposite sense is pure non-adiabatic
    m = models["uniform"]
    n = 32
    th = theta_grid(n)
    fr = frame(m, np.zeros(3))
    W = 0.7 * fr.e1 - 0.2 * fr.e2
    fluct = np.outer(np.cos(th), W) + sense * np.outer(np.sin(th), np.cross(fr.b, W))
    loop = PhaseLoop(np.zeros((n, 3)), fluct, 0.0, 0.0)
    x, y = decompose(loop, 0.01, m)
    w_perp = x.w1 * fr.e1 + x.w2 * fr.e2
    om_perp = y.omega1 * fr.e1 + y.omega2 * fr.e2
    if expect_w:
        assert np.abs(w_perp - W).max() <= 1e-13
        assert np.abs(om_perp).max() <= 1e-13
    else:
        assert np.abs(om_perp - W).max() <= 1e-13
        assert np.abs(w_perp).max() <= 1e-13


def test_reconstruct_parallel_point_loop():
    m = UniformField()
    x = SlowState([0.0, 0.0, 0.0], 1.0, 0.0, 0.0, 0.0)
    loop = reconstruct(x, FastState.zeros(32), 0.01, m)
    assert np.abs(loop.x).max() <= 1e-15
    assert np.abs(loop.v - np.array([0.0, 0.0, 1.0])).max() <= 1e-15


@pytest.mark.parametrize("name", ["uniform", "gradb", "screwpinch"])
def test_round_trips_to_1e12(name, models, rng):
    m = models[name]
    eps = 0.05
    for _ in range(20):
        x = random_slow_state(rng)
        y = random_fast_state(rng)
        loop = reconstruct(x, y, eps, m)
        x2, y2 = decompose(loop, eps, m)
        assert np.abs(x.to_vector() - x2.to_vector()).max() <= 1e-12
        assert np.abs(y.to_vector() - y2.to_vector()).max() <= 1e-12
        loop2 = reconstruct(x2, y2, eps, m)
        assert np.abs(loop.x - loop2.x).max() <= 1e-12
        assert np.abs(loop.v - loop2.v).max() <= 1e-12
        assert abs(loop.s - loop2.s) <= 1e-12
        assert loop.s_slow == loop2.s_slow


def test_validate_fast_rejects_bad_states(rng):
    y = random_fast_state(rng)
    y.rho += np.array([0.1, 0.0, 0.0])  # nonzero mean
    with pytest.raises(ValueError):
        validate_fast(y)
    y2 = random_fast_state(rng)
    th = theta_grid(y2.n_theta)
    y2.vhat2p += np.outer(np.cos(th), [0.2, 0.0, 0.0])  # first harmonic
    with pytest.raises(ValueError):
        validate_fast(y2)
    with pytest.raises(ValueError):
        reconstruct(random_slow_state(rng), y2, 0.05, UniformField())


def test_rhs_split_uniform_trivial_cases(models):
    m = models["uniform"]
    x = SlowState([0.0, 0.0, 0.0], 0.5, 0.8, -0.3, 0.0)
    y = FastState.zeros(32)
    g, f = rhs_split(x, y, 0.01, m)
    # fast side: only the adiabatic gyration source in the rho slot survives
    assert abs(f.vbar1) == abs(f.vbar2) == 0.0
    assert f.uplus == f.uminus == f.omega1 == f.omega2 == 0.0
    assert np.abs(f.vhat2p).max() == 0.0
    # slow side: pure parallel streaming
    assert g.w1 == g.w2 == 0.0
    assert g.ubar == 0.0
    assert np.abs(g.xbar - np.array([0.0, 0.0, 0.5])).max() <= 1e-15
    assert g.svar == pytest.approx(1.0)


def test_f0_vanishes_at_zero_y_when_w_is_zero(models):
    for m in models.values():
        x = SlowState([0.1, 0.05, -0.1], 0.7, 0.0, 0.0, 0.0)
        out = f0(x, FastState.zeros(32), m)
        assert fast_norm(out) <= 1e-15


def test_f0_omega_block_carries_factor_two(models):
    m = models["screwpinch"]
    x = random_slow_state(np.random.default_rng(1))
    y = FastState.zeros(32)
    y.omega1, y.omega2 = 0.4, -0.7
    out = f0(x, y, m)
    absB = float(np.linalg.norm(m.B(x.xbar)))
    assert out.omega1 == pytest.approx(2.0 * absB * y.omega2, rel=1e-14)
    assert out.omega2 == pytest.approx(-2.0 * absB * y.omega1, rel=1e-14)


def test_f0_equals_rhs_split_at_zero_eps(models, rng):
    for m in models.values():
        x = random_slow_state(rng)
        y = random_fast_state(rng)
        _, f_at_zero = rhs_split(x, y, 0.0, m)
        direct = f0(x, y, m)
        assert np.abs(f_at_zero.to_vector() - direct.to_vector()).max() <= 1e-12


def test_f_eps_minus_f0_scales_linearly(models, rng):
    m = models["screwpinch"]
    x = random_slow_state(rng)
    y = random_fast_state(rng)
    base = f0(x, y, m).to_vector()
    eps_list = np.geomspace(1e-4, 1e-2, 5)
    gaps = []
    for e in eps_list:
        _, f = rhs_split(x, y, e, m)
        gaps.append(np.abs(f.to_vector() - base).max())
    slope = np.polyfit(np.log(eps_list), np.log(gaps), 1)[0]
    assert abs(slope - 1.0) <= 0.1


def test_dyf0_linearity(models, rng):
    m = models["screwpinch"]
    x = random_slow_state(rng)
    y1 = random_fast_state(rng)
    y2 = random_fast_state(rng)
    a, b = 1.7, -0.6
    comb = FastState.from_vector(a * y1.to_vector() + b * y2.to_vector(), y1.n_theta)
    lhs = dyf0(x, comb, m).to_vector()
    rhs = a * dyf0(x, y1, m).to_vector() + b * dyf0(x, y2, m).to_vector()
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_chain_rule_consistency_with_loop_rhs(models, rng):
    # push (g, f/eps) through the reconstruction and compare against a
    # central difference of decompose along the loop flow
    eps, h = 0.1, 1e-6
    for m in models.values():
        for _ in range(3):
            x = random_slow_state(rng)
            y = random_fast_state(rng)
            loop = reconstruct(x, y, eps, m)
            g, f = rhs_split(x, y, eps, m)
            t = loop_rhs(loop, eps, m)
            lp = PhaseLoop(loop.x + h * t.dx, loop.v + h * t.dv, loop.s, loop.s_slow + h * eps * t.ds)
            lm = PhaseLoop(loop.x - h * t.dx, loop.v - h * t.dv, loop.s, loop.s_slow - h * eps * t.ds)
            xp, yp = decompose(lp, eps, m)
            xm, ym = decompose(lm, eps, m)
            g_fd = (xp.to_vector() - xm.to_vector()) / (2 * h)
            f_fd = (yp.to_vector() - ym.to_vector()) / (2 * h)
            assert np.abs(g_fd - g.to_vector()).max() <= 1e-8
            assert np.abs(f_fd - f.to_vector() / eps).max() <= 1e-8


def test_inv_dyf0_zero_maps_to_zero(models):
    m = models["gradb"]
    x = SlowState([0.1, 0.0, 0.0], 0.3, 0.5, -0.2, 0.0)
    out = inv_dyf0(x, FastState.zeros(32), m)
    assert fast_norm(out) == 0.0


def test_inv_dyf0_vbar_block(models):
    m = models["gradb"]
    x = SlowState([0.1, 0.0, 0.0], 0.3, 0.5, -0.2, 0.0)
    src = FastState.zeros(32)
    src.vbar1 = 1.0
    out = inv_dyf0(x, src, m)
    absB = float(np.linalg.norm(m.B(x.xbar)))
    assert out.vbar2 == pytest.approx(1.0 / absB, rel=1e-14)
    vec = out.to_vector()
    vec[3 * 32 + 1] = 0.0  # vbar2 slot
    assert np.abs(vec).max() == 0.0


@pytest.mark.parametrize("name", ["uniform", "gradb", "screwpinch"])
def test_inv_dyf0_is_two_sided_inverse(name, models, rng):
    m = models[name]
    for _ in range(5):
        x = random_slow_state(rng)
        ys = random_fast_state(rng)
        assert (
            np.abs(dyf0(x, inv_dyf0(x, ys, m), m).to_vector() - ys.to_vector()).max() <= 1e-7
        )
        assert (
            np.abs(inv_dyf0(x, dyf0(x, ys, m), m).to_vector() - ys.to_vector()).max() <= 1e-7
        )


def test_inv_dyf0_against_fd_jacobian_action(models, rng):
    # the spec-level check: apply a finite-difference directional derivative
    # of f0 to the returned update and recover the source
    m = models["screwpinch"]
    h = 1e-6
    for _ in range(3):
        x = random_slow_state(rng)
        y0 = random_fast_state(rng)
        ys = random_fast_state(rng)
        dy = inv_dyf0(x, ys, m)
        fp = f0(x, fast_axpy(h, dy, y0), m).to_vector()
        fm = f0(x, fast_axpy(-h, dy, y0), m).to_vector()
        recovered = (fp - fm) / (2 * h)
        assert np.abs(recovered - ys.to_vector()).max() <= 1e-7
