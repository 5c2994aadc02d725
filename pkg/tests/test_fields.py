import numpy as np
import pytest

from gyroloop.fields import (
    LinearGradBField,
    ScrewPinchField,
    SingularFieldError,
    UniformField,
    frame,
    make_model,
)

from conftest import fd_curl_A, fd_div_B


def test_uniform_vector_potential_gauge():
    m = UniformField(b0=1.0)
    assert np.allclose(m.A(np.array([1.0, 0.0, 0.0])), [0.0, 1.0, 0.0])
    assert np.allclose(m.B(np.array([0.3, -2.0, 5.0])), [0.0, 0.0, 1.0])
    assert np.allclose(m.grad_B(np.zeros(3)), 0.0)


def test_gradb_values_at_origin():
    m = LinearGradBField(b0=1.0, alpha=0.1)
    x0 = np.zeros(3)
    assert np.allclose(m.A(x0), 0.0)
    assert np.allclose(m.B(x0), [0.0, 0.0, 1.0])
    fr = frame(m, x0)
    assert np.allclose(fr.grad_abs_B, [0.1, 0.0, 0.0], atol=1e-14)
    assert fr.kpar == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(fr.kappa, 0.0, atol=1e-14)


@pytest.mark.parametrize("name", ["uniform", "gradb", "screwpinch"])
def test_curl_and_divergence(name, models, rng):
    m = models[name]
    for _ in range(100):
        x = rng.uniform(-0.5, 0.5, 3)
        B = m.B(x)
        assert np.linalg.norm(fd_curl_A(m, x) - B) <= 1e-6 * (1 + np.linalg.norm(B))
        assert abs(fd_div_B(m, x)) <= 1e-6


@pytest.mark.parametrize("name", ["uniform", "gradb", "screwpinch"])
def test_grad_B_matches_finite_differences(name, models, rng):
    m = models[name]
    h = 1e-4
    eye = np.eye(3)
    for _ in range(25):
        x = rng.uniform(-0.5, 0.5, 3)
        jac = m.grad_B(x)
        jac_fd = np.column_stack([(m.B(x + h * e) - m.B(x - h * e)) / (2 * h) for e in eye])
        assert np.abs(jac - jac_fd).max() <= 1e-6


@pytest.mark.parametrize("name", ["uniform", "gradb", "screwpinch"])
def test_frame_orthonormality(name, models, rng):
    m = models[name]
    for _ in range(50):
        fr = frame(m, rng.uniform(-0.5, 0.5, 3))
        assert abs(np.linalg.norm(fr.b) - 1) <= 1e-12
        assert abs(np.linalg.norm(fr.e1) - 1) <= 1e-12
        assert abs(np.linalg.norm(fr.e2) - 1) <= 1e-12
        assert abs(np.dot(fr.e1, fr.e2)) <= 1e-12
        assert np.abs(fr.b - np.cross(fr.e1, fr.e2)).max() <= 1e-12
        assert abs(np.dot(fr.kappa, fr.b)) <= 1e-8


@pytest.mark.parametrize("name", ["gradb", "screwpinch"])
def test_kappa_matches_fd_of_b_along_b(name, models, rng):
    m = models[name]
    h = 1e-4
    for _ in range(25):
        x = rng.uniform(-0.5, 0.5, 3)
        fr = frame(m, x)
        kappa_fd = (m.unit_b(x + h * fr.b) - m.unit_b(x - h * fr.b)) / (2 * h)
        assert np.abs(kappa_fd - fr.kappa).max() <= 1e-6


def test_uniform_frame_is_trivial():
    fr = frame(UniformField(), np.array([0.3, 0.1, -0.2]))
    assert np.allclose(fr.kappa, 0.0)
    assert fr.tau == pytest.approx(0.0, abs=1e-14)
    assert fr.kpar == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(fr.R, 0.0, atol=1e-12)


def test_screwpinch_has_all_geometric_scalars():
    fr = frame(ScrewPinchField(), np.array([0.2, 0.1, -0.1]))
    assert np.linalg.norm(fr.kappa) > 1e-3
    assert abs(fr.tau) > 1e-2
    assert abs(fr.kpar) > 1e-2
    assert np.linalg.norm(fr.grad_abs_B) > 1e-2


def test_singular_field_raises():
    m = LinearGradBField(b0=1.0, alpha=0.1)
    with pytest.raises(SingularFieldError):
        frame(m, np.array([-10.0, 0.0, 0.0]))  # 1 + alpha*x = 0


def test_delta_B_gradb_closed_form_matches_quadrature(rng):
    m = LinearGradBField(b0=1.0, alpha=0.1)
    rho = rng.normal(size=(16, 3))
    rho -= rho.mean(axis=0)
    closed = m.delta_B(np.array([0.1, 0.0, 0.0]), rho, 0.05)
    generic = super(LinearGradBField, m).delta_B.__get__(m)(np.array([0.1, 0.0, 0.0]), rho, 0.05)
    assert np.abs(closed - generic).max() <= 1e-14


def test_delta_B_consistent_with_field_difference(models, rng):
    # B(xbar + eps*rho) = B(xbar) + eps*delta_B up to quadrature error
    eps = 0.05
    for m in models.values():
        xbar = rng.uniform(-0.2, 0.2, 3)
        rho = rng.normal(size=(16, 3))
        rho -= rho.mean(axis=0)
        dB = m.delta_B(xbar, rho, eps)
        exact = (m.B(xbar + eps * rho) - m.B(xbar)) / eps
        assert np.abs(dB - exact).max() <= 1e-12


def test_make_model_registry():
    assert make_model("uniform", b0=2.0).b0 == 2.0
    assert make_model("gradb").alpha == 0.1
    assert make_model("screwpinch").bp == 0.4
    with pytest.raises(ValueError):
        make_model("dipole")
