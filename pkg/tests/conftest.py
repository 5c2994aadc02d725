import numpy as np
import pytest

from gyroloop.fields import LinearGradBField, ScrewPinchField, UniformField
from gyroloop.fastslow import FastState, SlowState
from gyroloop.loopspace import theta_grid


@pytest.fixture
def models():
    return {
        "uniform": UniformField(),
        "gradb": LinearGradBField(),
        "screwpinch": ScrewPinchField(),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_slow_state(rng):
    return SlowState(
        rng.uniform(-0.3, 0.3, 3),
        rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0),
        rng.uniform(0.0, 5.0),
    )


def random_fast_state(rng, n_theta=32, kmax_rho=3, kmax_v=4):
    th = theta_grid(n_theta)
    rho = np.zeros((n_theta, 3))
    for k in range(1, kmax_rho + 1):
        rho += np.outer(np.cos(k * th), rng.uniform(-0.5, 0.5, 3))
        rho += np.outer(np.sin(k * th), rng.uniform(-0.5, 0.5, 3))
    v2 = np.zeros((n_theta, 3))
    for k in range(2, kmax_v + 1):
        v2 += np.outer(np.cos(k * th), rng.uniform(-0.5, 0.5, 3))
        v2 += np.outer(np.sin(k * th), rng.uniform(-0.5, 0.5, 3))
    return FastState(rho, *rng.uniform(-1.0, 1.0, 6), v2)


def fd_curl_A(model, x, h=1e-4):
    eye = np.eye(3)

    def dA(j, i):
        return (model.A(x + h * eye[i])[j] - model.A(x - h * eye[i])[j]) / (2 * h)

    return np.array([dA(2, 1) - dA(1, 2), dA(0, 2) - dA(2, 0), dA(1, 0) - dA(0, 1)])


def fd_div_B(model, x, h=1e-4):
    eye = np.eye(3)
    return sum(
        (model.B(x + h * eye[i])[i] - model.B(x - h * eye[i])[i]) / (2 * h) for i in range(3)
    )
