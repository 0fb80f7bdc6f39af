"""Chebyshev x Fourier representation of fields on the unit disk.

A field ``f(r, phi)`` on ``0 <= r <= 1`` is expanded as

    f = sum_{m=0}^{Nr} sum_n c[m, n] T_m(l) exp(i n phi),    r = (1 + l) / 2,

and sampled on the tensor grid ``l_j = cos(j pi / Nr)``, ``phi_i = 2 pi i / Nphi``.
Coefficients are stored with Chebyshev degree along axis 0 and Fourier bins in
standard FFT order along axis 1.  The bin ``Nphi/2`` is ambiguous between the
modes ``+Nphi/2`` and ``-Nphi/2``; a :class:`FourierRange` attached to every
:class:`SpectralField` resolves it.

All derivative and ``1/r`` operators act on the Chebyshev coefficients of a
single Fourier mode and include the chain-rule factor ``dl/dr = 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import SingularSystemError, SizingError


class FourierRange(enum.Enum):
    """Signed Fourier index range of a component.

    ``PSI1`` covers ``-Nphi/2 .. Nphi/2-1`` and ``PSI2`` covers
    ``-Nphi/2+1 .. Nphi/2``.
    """

    PSI1 = "psi1"
    PSI2 = "psi2"

    def modes(self, n_phi: int) -> np.ndarray:
        """Signed mode number of each storage column (FFT bin order)."""
        n = np.fft.fftfreq(n_phi, d=1.0 / n_phi).astype(int)
        n[n_phi // 2] = -n_phi // 2 if self is FourierRange.PSI1 else n_phi // 2
        return n

    def column(self, n: int, n_phi: int) -> int:
        """Storage column holding signed mode ``n``."""
        lo = -n_phi // 2 if self is FourierRange.PSI1 else -n_phi // 2 + 1
        if not lo <= n < lo + n_phi:
            raise IndexError(f"mode {n} outside {self.name} range for Nphi={n_phi}")
        return n % n_phi


class Sign(enum.Enum):
    """Which per-mode operator: ``D - nR`` (MINUS) or ``D + nR`` (PLUS)."""

    MINUS = -1
    PLUS = 1


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    n_r: int
    n_phi: int
    l_points: np.ndarray
    r_points: np.ndarray
    phi_points: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r + 1, self.n_phi)

    @property
    def r(self) -> np.ndarray:
        """Radial coordinate broadcast over the grid, shape ``(Nr+1, Nphi)``."""
        return np.broadcast_to(self.r_points[:, None], self.shape)

    @property
    def phi(self) -> np.ndarray:
        return np.broadcast_to(self.phi_points[None, :], self.shape)

    @property
    def z(self) -> np.ndarray:
        """Complex coordinate ``r exp(i phi)`` on the grid."""
        return self.r_points[:, None] * np.exp(1j * self.phi_points[None, :])

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.n_r == other.n_r
            and self.n_phi == other.n_phi
        )

    def __hash__(self):
        return hash((self.n_r, self.n_phi))


def make_grid(n_r: int, n_phi: int) -> Grid:
    """Collocation grid with ``Nr+1`` radial and ``Nphi`` angular points."""
    if int(n_r) != n_r or n_r < 2:
        raise SizingError(f"n_r must be an integer >= 2, got {n_r}")
    if int(n_phi) != n_phi or n_phi < 4 or n_phi % 2:
        raise SizingError(f"n_phi must be an even integer >= 4, got {n_phi}")
    n_r, n_phi = int(n_r), int(n_phi)
    l = np.cos(np.pi * np.arange(n_r + 1) / n_r)
    # exact endpoints and centre; cos() leaves 6e-17 at pi/2
    l[0], l[-1] = 1.0, -1.0
    if n_r % 2 == 0:
        l[n_r // 2] = 0.0
    r = (1.0 + l) / 2.0
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    return Grid(n_r, n_phi, _frozen(l), _frozen(r), _frozen(phi))


@dataclass(frozen=True, eq=False)
class PhysicalField:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise SizingError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )


@dataclass(frozen=True, eq=False)
class SpectralField:
    coeffs: np.ndarray
    fourier_range: FourierRange
    grid: Grid

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise SizingError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    @property
    def modes(self) -> np.ndarray:
        return self.fourier_range.modes(self.grid.n_phi)

    def mode(self, n: int) -> np.ndarray:
        """Chebyshev coefficients of Fourier mode ``n``."""
        return self.coeffs[:, self.fourier_range.column(n, self.grid.n_phi)]

    def rim_values(self) -> np.ndarray:
        """Fourier coefficients at ``r = 1`` (``T_m(1) = 1``), FFT bin order."""
        return self.coeffs.sum(axis=0)

    def evaluate(self, r, phi) -> np.ndarray:
        """Evaluate the truncated series at arbitrary points of the closed disk."""
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        r, phi = np.broadcast_arrays(r, phi)
        l = 2.0 * r.ravel() - 1.0
        # (npts, Nr+1) Chebyshev values via the three-term recurrence
        t = np.polynomial.chebyshev.chebvander(l, self.grid.n_r)
        radial = t @ self.coeffs
        phase = np.exp(1j * np.outer(phi.ravel(), self.modes))
        return np.sum(radial * phase, axis=1).reshape(r.shape)

    def __add__(self, other):
        _check_compatible(self, other)
        return SpectralField(self.coeffs + other.coeffs, self.fourier_range, self.grid)

    def __sub__(self, other):
        _check_compatible(self, other)
        return SpectralField(self.coeffs - other.coeffs, self.fourier_range, self.grid)

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * scalar, self.fourier_range, self.grid)

    __rmul__ = __mul__


def _check_compatible(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid or a.fourier_range is not b.fourier_range:
        raise SizingError("spectral fields live on different grids or ranges")


# --- transforms -----------------------------------------------------------


def cheb_forward(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Chebyshev coefficients from samples at ``l_j = cos(j pi / Nr)`` (DCT-I)."""
    values = np.moveaxis(np.asarray(values), axis, 0)
    n_r = values.shape[0] - 1
    c = sfft.dct(values, type=1, axis=0) / n_r
    c[0] *= 0.5
    c[-1] *= 0.5
    return np.moveaxis(c, 0, axis)


def cheb_inverse(coeffs: np.ndarray, axis: int = 0) -> np.ndarray:
    """Samples at ``l_j`` from Chebyshev coefficients (inverse of :func:`cheb_forward`)."""
    c = np.moveaxis(np.array(coeffs, copy=True), axis, 0)
    c[1:-1] *= 0.5
    return np.moveaxis(sfft.dct(c, type=1, axis=0), 0, axis)


def forward_transform(f: PhysicalField, fourier_range: FourierRange) -> SpectralField:
    """FFT in phi followed by DCT-I in r; interpolating coefficients."""
    v = np.asarray(f.values, dtype=complex)
    if v.shape != f.grid.shape:
        raise SizingError(f"field shape {v.shape} does not match grid {f.grid.shape}")
    c = cheb_forward(sfft.fft(v, axis=1) / f.grid.n_phi, axis=0)
    return SpectralField(c, fourier_range, f.grid)


def inverse_transform(s: SpectralField) -> PhysicalField:
    v = sfft.ifft(cheb_inverse(s.coeffs, axis=0), axis=1) * s.grid.n_phi
    return PhysicalField(v, s.grid)


def to_spectral(values: np.ndarray, grid: Grid, fourier_range: FourierRange) -> SpectralField:
    """Shorthand for transforming a raw sample array."""
    return forward_transform(PhysicalField(np.asarray(values, dtype=complex), grid), fourier_range)


# --- coefficient-space operators -------------------------------------------


@lru_cache(maxsize=None)
def _diff_matrix(n_r: int) -> np.ndarray:
    d = np.zeros((n_r + 1, n_r + 1))
    for m in range(n_r + 1):
        for j in range(m + 1, n_r + 1, 2):
            d[m, j] = 2.0 * j
    d[0] *= 0.5
    d *= 2.0  # dl/dr
    d.setflags(write=False)
    return d


def diff_matrix(n_r: int) -> np.ndarray:
    """d/dr in Chebyshev coefficient space (upper triangular)."""
    if n_r < 2:
        raise SizingError(f"n_r must be >= 2, got {n_r}")
    return _diff_matrix(int(n_r))


def cheb_product_matrix(g: np.ndarray, n_out: int | None = None) -> np.ndarray:
    """Matrix of multiplication by ``sum_i g_i T_i`` acting on coefficients.

    Uses ``2 T_i T_k = T_{i+k} + T_{|i-k|}``; products above degree ``n_out-1``
    are dropped.
    """
    g = np.asarray(g)
    n = g.shape[0] if n_out is None else n_out
    m_out = np.zeros((n, n), dtype=np.result_type(g.dtype, float))
    k = np.arange(n)
    for i, gi in enumerate(g):
        if gi == 0:
            continue
        hi = i + k
        ok = hi < n
        m_out[hi[ok], k[ok]] += 0.5 * gi
        m_out[np.abs(i - k), k] += 0.5 * gi
    return m_out


@lru_cache(maxsize=None)
def _mult_r_matrix(n_r: int) -> np.ndarray:
    g = np.zeros(n_r + 1)
    g[:2] = 0.5
    m = cheb_product_matrix(g)
    m.setflags(write=False)
    return m


def mult_r_matrix(n_r: int) -> np.ndarray:
    """Multiplication by ``r = (T_0 + T_1)/2``, truncated at degree ``Nr``."""
    if n_r < 2:
        raise SizingError(f"n_r must be >= 2, got {n_r}")
    return _mult_r_matrix(int(n_r))


@lru_cache(maxsize=None)
def _div_matrix(n_r: int) -> np.ndarray:
    m = _mult_r_matrix(n_r)
    lu, piv = sla.lu_factor(m, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * diag.max() * (n_r + 1):
        raise SingularSystemError(
            f"multiplication-by-r matrix is numerically singular at n_r={n_r}",
            condition=np.inf,
        )
    d = sla.lu_solve((lu, piv), np.eye(n_r + 1))
    d.setflags(write=False)
    return d


def div_matrix(n_r: int) -> np.ndarray:
    """Division by ``r`` in coefficient space, valid for fields vanishing at ``r=0``."""
    if n_r < 2:
        raise SizingError(f"n_r must be >= 2, got {n_r}")
    return _div_matrix(int(n_r))


@dataclass(frozen=True, eq=False)
class ModeOperator:
    matrix: np.ndarray
    mode: int
    sign: Sign


def mode_operator(n: int, sign: Sign, n_r: int) -> ModeOperator:
    """``D - nR`` for ``sign=MINUS`` (psi1 modes), ``D + nR`` for ``PLUS``."""
    m = diff_matrix(n_r) + sign.value * n * div_matrix(n_r)
    m.setflags(write=False)
    return ModeOperator(m, int(n), sign)


def trailing_magnitudes(s: SpectralField) -> tuple[float, float]:
    """Largest modulus in the highest Chebyshev row and the Nphi/2 Fourier column."""
    c = np.abs(s.coeffs)
    return float(c[-1].max()), float(c[:, s.grid.n_phi // 2].max())


# --- coefficient dump ------------------------------------------------------


def coefficient_rows(s: SpectralField):
    """Rows ``(m, n, re, im)`` ordered by signed mode, then degree."""
    modes = s.modes
    for col in np.argsort(modes, kind="stable"):
        for m in range(s.grid.n_r + 1):
            v = s.coeffs[m, col]
            yield m, int(modes[col]), v.real, v.imag


def write_coefficients(s: SpectralField, path) -> Path:
    path = Path(path)
    lines = ["m,n,re,im"]
    lines += [f"{m},{n},{re:.16e},{im:.16e}" for m, n, re, im in coefficient_rows(s)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_coefficients(path, grid: Grid, fourier_range: FourierRange) -> SpectralField:
    rows = Path(path).read_text().splitlines()
    if not rows or rows[0].strip() != "m,n,re,im":
        raise ValueError(f"{path}: missing 'm,n,re,im' header")
    c = np.zeros(grid.shape, dtype=complex)
    for line in rows[1:]:
        if not line.strip():
            continue
        m, n, re, im = line.split(",")
        c[int(m), fourier_range.column(int(n), grid.n_phi)] = complex(float(re), float(im))
    return SpectralField(c, fourier_range, grid)
