"""CGO solutions from the fundamental basis.

For a given spectral parameter ``k`` the CGO solution is
``psi = sum_j gamma_j psi^(j)``.  Outside the disk ``exp(-kz) psi1`` is
holomorphic and ``exp(-conj(kz)) psi2`` antiholomorphic, so the asymptotic
conditions reduce to conditions on the Fourier coefficients of these products
on the rim ``r = 1``:

* ``c_n`` (``n = 0..Nphi/2-1``) of ``exp(-k e^{i phi}) psi1(1, phi)``: ``c_0 = 1``, ``c_n = 0``;
* ``d_n`` (``n = 0, -1, .., -Nphi/2+1``) of ``exp(-conj(k) e^{-i phi}) psi2(1, phi)``: ``d_n = 0``.

The reflection coefficient is ``R = 2 conj(d_1)``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import ExceptionalPointError
from .fundamental import FundamentalBasis
from .spectral import (
    FourierRange,
    Grid,
    PhysicalField,
    SpectralField,
    forward_transform,
    inverse_transform,
    trailing_magnitudes,
)


class Gauge(enum.Enum):
    PSI = "psi"
    PHI = "phi"


@dataclass(frozen=True, eq=False)
class CGOConditionMatrix:
    matrix: np.ndarray
    rhs: np.ndarray
    d1_row: np.ndarray
    k: complex


@dataclass(eq=False)
class CGOSolution:
    k: complex
    gauge: Gauge
    field1: SpectralField
    field2: SpectralField
    reflection: complex | None
    gamma: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.field1.grid


def _rim_values(coeffs: np.ndarray) -> np.ndarray:
    """Physical values on ``r = 1`` for a stack ``(..., Nr+1, Nphi)`` of coefficients."""
    n_phi = coeffs.shape[-1]
    return sfft.ifft(coeffs.sum(axis=-2), axis=-1) * n_phi


def condition_rows(basis: FundamentalBasis, k: complex) -> CGOConditionMatrix:
    """Asymptotic-condition functionals of every basis column at spectral parameter ``k``."""
    grid = basis.grid
    n_phi, half = grid.n_phi, grid.n_phi // 2
    e = np.exp(1j * grid.phi_points)
    w1 = np.exp(-k * e)
    w2 = np.exp(-np.conj(k) / e)
    a, b = basis.coeff_stack()
    c = sfft.fft(_rim_values(a) * w1, axis=-1) / n_phi  # (j, bin)
    d = sfft.fft(_rim_values(b) * w2, axis=-1) / n_phi
    c_bins = np.arange(half)
    d_bins = (-np.arange(half)) % n_phi
    mat = np.concatenate([c[:, c_bins].T, d[:, d_bins].T], axis=0)
    rhs = np.zeros(n_phi, dtype=complex)
    rhs[0] = 1.0
    return CGOConditionMatrix(mat, rhs, d[:, 1].copy(), complex(k))


def solve_gamma(cond: CGOConditionMatrix) -> np.ndarray:
    """Coefficients ``gamma`` of the CGO solution in the fundamental basis."""
    try:
        with warnings.catch_warnings():
            # singularity is reported through the condition estimate below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(cond.matrix, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise ExceptionalPointError(f"condition system at k={cond.k} failed: {exc}") from exc
    anorm = np.abs(cond.matrix).sum(axis=0).max()
    rcond, _ = sla.lapack.zgecon(lu, anorm, norm="1")
    if rcond < np.finfo(float).eps:
        raise ExceptionalPointError(
            f"condition system singular at k={cond.k} (possible exceptional point)",
            condition=np.inf if rcond == 0 else 1.0 / rcond,
        )
    return sla.lu_solve((lu, piv), cond.rhs)


def reflection_from_conditions(cond: CGOConditionMatrix, gamma: np.ndarray) -> complex:
    return complex(2.0 * np.conj(cond.d1_row @ gamma))


def condition_residuals(cond: CGOConditionMatrix, gamma: np.ndarray) -> dict:
    res = cond.matrix @ gamma - cond.rhs
    half = len(res) // 2
    return {
        "c0": float(abs(res[0])),
        "c_pos": float(np.abs(res[1:half]).max(initial=0.0)),
        "d_nonpos": float(np.abs(res[half:]).max(initial=0.0)),
    }


def to_phi_gauge(psi1: SpectralField, psi2: SpectralField, k: complex):
    """``Phi1 = exp(-kz) psi1``, ``Phi2 = exp(-conj(kz)) psi2``, applied on the grid."""
    z = psi1.grid.z
    p1 = inverse_transform(psi1).values * np.exp(-k * z)
    p2 = inverse_transform(psi2).values * np.exp(-np.conj(k * z))
    return (
        forward_transform(PhysicalField(p1, psi1.grid), FourierRange.PSI1),
        forward_transform(PhysicalField(p2, psi1.grid), FourierRange.PSI2),
    )


def assemble_cgo(
    basis: FundamentalBasis,
    gamma: np.ndarray,
    k: complex,
    gauge: Gauge = Gauge.PSI,
    cond: CGOConditionMatrix | None = None,
) -> CGOSolution:
    """Combine the basis with ``gamma``; attach ``R(k)`` and diagnostics."""
    gamma = np.asarray(gamma, dtype=complex)
    a, b = basis.coeff_stack()
    f1 = SpectralField(np.tensordot(gamma, a, axes=1), FourierRange.PSI1, basis.grid)
    f2 = SpectralField(np.tensordot(gamma, b, axes=1), FourierRange.PSI2, basis.grid)
    if cond is None:
        cond = condition_rows(basis, k)
    defined = bool(np.any(gamma != 0))
    reflection = reflection_from_conditions(cond, gamma) if defined else None
    diagnostics = {"conditions": condition_residuals(cond, gamma)}
    diagnostics["trailing_psi1"] = trailing_magnitudes(f1)
    diagnostics["trailing_psi2"] = trailing_magnitudes(f2)
    if gauge is Gauge.PHI:
        f1, f2 = to_phi_gauge(f1, f2, k)
    return CGOSolution(complex(k), gauge, f1, f2, reflection, gamma, diagnostics)


def solve_cgo(basis: FundamentalBasis, k: complex, gauge: Gauge = Gauge.PSI) -> CGOSolution:
    cond = condition_rows(basis, k)
    gamma = solve_gamma(cond)
    return assemble_cgo(basis, gamma, k, gauge, cond)
