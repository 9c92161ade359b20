import numpy as np
import pytest

from metaofw.control import LtvSystem, QuadraticCost


def random_ltv(rng, T, dx, du, scale=0.3, W=1.0):
    """Random time-varying plant with its own norm bounds."""
    A = rng.standard_normal((T + 1, dx, dx)) * scale
    B = rng.standard_normal((T + 1, dx, du)) * scale
    kA = float(np.linalg.norm(A, 2, axis=(1, 2)).max())
    kB = float(np.linalg.norm(B, 2, axis=(1, 2)).max())
    return LtvSystem(A, B, kA, kB, W)


def simulate_recursive(sys, gains, Ms, w, T):
    """Plain forward recursion of the DAC closed loop from x_0 = 0."""
    H = Ms.shape[1]
    x = np.zeros(sys.d_x)
    xs = [x]
    for t in range(T):
        u = -gains[t] @ x
        for i in range(1, H + 1):
            if t - i >= 0:
                u = u + Ms[t][i - 1] @ w[t - i]
        x = sys.A[t] @ x + sys.B[t] @ u + w[t]
        xs.append(x)
    return np.array(xs)


def ball_noise(rng, T, d, W):
    w = rng.standard_normal((T, d)) * 0.5 * W
    n = np.linalg.norm(w, axis=1, keepdims=True)
    return w * np.minimum(1.0, W / np.maximum(n, 1e-300))


def normal_plant(rng, dx, du, rho):
    """``A = rho * orthogonal`` (normal, eigenvector witness is unitary)."""
    Q, _ = np.linalg.qr(rng.standard_normal((dx, dx)))
    B = rng.standard_normal((dx, du))
    return rho * Q, B / np.linalg.norm(B, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def positive_cost(rng, T):
    return QuadraticCost(rng.uniform(0.2, 1.0, T + 1), rng.uniform(0.2, 1.0, T + 1))


# Lines recorded by the acceptance gate, echoed at the end of the session.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
