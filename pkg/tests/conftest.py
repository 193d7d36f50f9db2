import numpy as np
import pytest

from pathsum import InformationModel


def c5_matrix(r):
    J = np.eye(5)
    for i in range(5):
        J[i, (i + 1) % 5] = J[(i + 1) % 5, i] = r
    return J


def membrane_blocks(a, b):
    E = np.array([[-b, -b, 0], [-b, 0, -b], [0, -b, -b]], dtype=float)
    L = np.array([[a + 5 * b, -b, 0], [-b, a + 5 * b, -b], [0, -b, a + 5 * b]], dtype=float)
    return L, E


def membrane_matrix(a, b):
    L, E = membrane_blocks(a, b)
    return np.block([[L, E, E], [E, L, E], [E, E, L]])


def membrane_sigma_aa(a, b):
    """Closed-form diagonal block of the thin-membrane covariance."""
    d = a * a + 8 * a * b - 3 * b * b
    x = a / b + a / (a + 3 * b) + 5 * a / (3 * (a + 6 * b)) + 1 / 3
    y = a / b + 12 * a / (5 * (a + 5 * b)) + 3 / 5
    c = 3 * b / (a + 3 * b)
    return b / d * np.array([[x, 1, c], [1, y, 1], [c, 1, x]])


def membrane_sigma_ba(a, b):
    """Closed-form off-diagonal block of the thin-membrane covariance."""
    d = a * a + 8 * a * b - 3 * b * b
    x = a / (a + 3 * b) - 5 * a / (6 * (a + 6 * b)) + 5 / 6
    c = 3 * b / (a + 3 * b)
    return b / d * np.array([[x, 1, c], [1, 6 * b / (a + 5 * b), 1], [c, 1, x]])


def random_spd(rng, n, density):
    """Symmetric positive definite matrix with roughly ``density`` edge fill."""
    mask = np.triu(rng.random((n, n)) < density, 1)
    W = rng.normal(size=(n, n)) * mask
    W = W + W.T
    lam = np.linalg.eigvalsh(W).min()
    return W + np.diag(rng.uniform(0.5, 2.0, n) + max(0.0, -lam) + rng.uniform(0.05, 1.0))


def random_tree(rng, n):
    """SPD tree model: random parent attachment, diagonally dominant."""
    J = np.zeros((n, n))
    for v in range(1, n):
        p = int(rng.integers(0, v))
        J[v, p] = J[p, v] = rng.uniform(-1.0, 1.0)
    J[np.diag_indices(n)] = np.abs(J).sum(axis=1) + rng.uniform(0.1, 1.0, n)
    return J


def random_nonsingular(rng, n):
    """Symmetric, possibly indefinite, well-conditioned matrix."""
    while True:
        W = rng.normal(size=(n, n))
        J = W + W.T
        mask = np.triu(rng.random((n, n)) < 0.7, 1)
        J = J * (mask + mask.T) + np.diag(np.diag(J) + rng.choice([-3.0, 3.0], n))
        if np.linalg.cond(J) < 1e6 and np.all(np.diag(J) != 0):
            return J


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - b) / np.linalg.norm(b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def c5():
    return lambda r: InformationModel(c5_matrix(r))


_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record ``(ok, detail)`` for an acceptance criterion; printed in the summary."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
