"""Reference checks against closed-form solutions, shared by ``selftest`` and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import exact_fundamental
from .cgo import Gauge, solve_cgo
from .fundamental import FundamentalBasis, solve_basis
from .picard import solve_cgo_iterative
from .potential import characteristic, sample
from .spectral import inverse_transform, make_grid


@dataclass(frozen=True)
class BesselCheck:
    n_r: int
    n_phi: int
    errors: np.ndarray  # per basis column j = 1..Nphi
    trailing: np.ndarray  # max |last Chebyshev coefficient| per column

    def max_error(self, skip=()) -> float:
        keep = [j - 1 for j in range(1, self.n_phi + 1) if j not in skip]
        return float(self.errors[keep].max())

    def max_trailing(self, skip=()) -> float:
        keep = [j - 1 for j in range(1, self.n_phi + 1) if j not in skip]
        return float(self.trailing[keep].max())


def bessel_fundamental_check(n_r: int = 32, n_phi: int = 64, basis: FundamentalBasis | None = None) -> BesselCheck:
    """Pointwise error of every basis column for ``q = 1`` against the Bessel solutions."""
    grid = make_grid(n_r, n_phi)
    if basis is None:
        basis = solve_basis(sample(characteristic(), grid))
    errors, trailing = [], []
    for j in range(1, n_phi + 1):
        s1, s2 = basis.column(j)
        e1, e2 = exact_fundamental(j, grid)
        err = max(
            np.abs(inverse_transform(s1).values - e1).max(),
            np.abs(inverse_transform(s2).values - e2).max(),
        )
        errors.append(err)
        trailing.append(max(np.abs(s1.coeffs[-1]).max(), np.abs(s2.coeffs[-1]).max()))
    return BesselCheck(n_r, n_phi, np.array(errors), np.array(trailing))


@dataclass(frozen=True)
class CrossCheck:
    k: complex
    field_difference: float
    R_fundamental: complex
    R_picard: complex
    steps: int

    @property
    def reflection_difference(self) -> float:
        return abs(self.R_fundamental - self.R_picard)


def cross_method_check(
    k: complex = 1.0, n_r: int = 32, n_phi: int = 64, tol: float = 1e-13, potential=None
) -> CrossCheck:
    """Compare the fundamental-basis and Picard CGO solutions in the bounded gauge."""
    potential = potential or characteristic()
    grid = make_grid(n_r, n_phi)
    basis = solve_basis(sample(potential, grid))
    direct = solve_cgo(basis, k, Gauge.PHI)
    iterative, trace = solve_cgo_iterative(potential, k, grid, tol=tol)
    diff = sum(
        np.abs(inverse_transform(a).values - inverse_transform(b).values).max()
        for a, b in ((direct.field1, iterative.field1), (direct.field2, iterative.field2))
    )
    return CrossCheck(complex(k), float(diff), direct.reflection, iterative.reflection, trace.steps)

