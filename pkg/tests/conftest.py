import numpy as np
import pytest
from scipy import linalg

from tsrobust.model import CausalModel, companion_matrix


def ar1(phi, sigma2=1.0):
    """Univariate x_t = phi x_{t-1} + eps, eps ~ N(0, sigma2)."""
    return CausalModel(np.eye(1), (np.array([[-phi]]),), [sigma2])


def lyapunov_autocov(model, max_lag):
    """Exact autocovariances via the discrete Lyapunov equation of the companion form.

    Independent of the stacked-matrix inversion used by the package.
    """
    n, p = model.n, model.p
    phis, b = model.reduced_form()
    noise = b @ np.diag(model.d0) @ b.T
    if p == 0:
        return [noise] + [np.zeros((n, n))] * max_lag
    comp = companion_matrix(model)
    q = np.zeros((n * p, n * p))
    q[:n, :n] = noise
    big = linalg.solve_discrete_lyapunov(comp, q)
    # big block (i, j) = E[x_{t-i} x_{t-j}'], so row 0 gives L_0..L_{p-1}.
    blocks = [big[:n, j * n:(j + 1) * n] for j in range(p)]
    while len(blocks) <= max_lag:
        k = len(blocks)
        blocks.append(sum(phis[m] @ blocks[k - 1 - m] for m in range(p)))
    return blocks[: max_lag + 1]


@pytest.fixture
def chain_model():
    """x1 -> x2 -> x3 contemporaneously plus lag-1 self effects."""
    a0 = np.array([[1.0, -0.7, 0.0], [0.0, 1.0, 0.6], [0.0, 0.0, 1.0]])
    a1 = np.diag([-0.5, 0.0, 0.4])
    return CausalModel(a0, (a1,), [0.4, 0.35, 0.3])


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    """Log one acceptance verdict; the lines are replayed in the terminal summary."""
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
