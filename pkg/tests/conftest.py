import numpy as np
import pytest

from dbar_disk.fundamental import solve_basis
from dbar_disk.potential import characteristic, sample
from dbar_disk.spectral import make_grid


def cheb_coeffs_of(poly_in_r, n_r):
    """Chebyshev coefficients in l = 2r - 1 of a power series in r (oracle via numpy)."""
    # r = (1 + l) / 2 as a Chebyshev series, then Horner in Chebyshev arithmetic
    C = np.polynomial.chebyshev
    r_series = np.array([0.5, 0.5])
    out = np.zeros(1)
    for a in reversed(list(poly_in_r)):
        out = C.chebadd(C.chebmul(out, r_series), [a])
    full = np.zeros(n_r + 1)
    full[: min(len(out), n_r + 1)] = out[: n_r + 1]
    return full


@pytest.fixture(scope="session")
def grid_32_64():
    return make_grid(32, 64)


@pytest.fixture(scope="session")
def unit_basis(grid_32_64):
    return solve_basis(sample(characteristic(), grid_32_64))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
