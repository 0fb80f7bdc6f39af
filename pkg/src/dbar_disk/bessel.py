"""Modified Bessel functions on [0, 1] and the closed-form disk solutions.

For the potential ``q = 1`` on the unit disk the regular solutions of the
d-bar system are built from ``I_n(r)``; these serve as ground truth for the
solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Grid

SERIES_TERMS = 17
DEFAULT_MAX_ORDER = 512


def bessel_i(n: int, r, terms: int = SERIES_TERMS, max_order: int = DEFAULT_MAX_ORDER):
    """``I_n(r)`` from the power series truncated after ``terms`` terms.

    ``sum_{m<terms} (r/2)^(2m+n) / (m! (m+n)!)``.  Negative orders use
    ``I_{-n} = I_n``.  Accurate to rounding level for ``0 <= r <= 1``.
    """
    n = abs(int(n))
    if n > max_order:
        raise ValueError(f"order {n} exceeds max_order={max_order}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1):
        raise ValueError("bessel_i is only defined here for 0 <= r <= 1")
    h = r / 2.0
    if n <= 120:
        term = h**n / math.factorial(n)
    else:
        with np.errstate(divide="ignore"):
            term = np.where(h > 0, np.exp(n * np.log(h) - math.lgamma(n + 1)), 0.0)
    total = np.array(term, dtype=float, copy=True)
    h2 = h * h
    for m in range(1, terms):
        term = term * h2 / (m * (m + n))
        total = total + term
    return total if total.ndim else float(total)


@dataclass(frozen=True, eq=False)
class BesselTable:
    orders: tuple
    values: np.ndarray
    r_points: np.ndarray
    truncation: int = SERIES_TERMS

    def __getitem__(self, n):
        return self.values[self.orders.index(abs(n))]


def bessel_table(grid: Grid, max_order: int | None = None, terms: int = SERIES_TERMS) -> BesselTable:
    """``I_n`` at the radial collocation points for ``0 <= n <= max_order``."""
    if max_order is None:
        max_order = grid.n_phi // 2 + 2
    orders = tuple(range(max_order + 1))
    vals = np.array([bessel_i(n, grid.r_points, terms) for n in orders])
    vals.setflags(write=False)
    return BesselTable(orders, vals, grid.r_points, terms)


def exact_k0_solution(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """CGO solution at ``k = 0`` for ``q = 1`` on the disk, sampled on ``grid``."""
    i0_1 = bessel_i(0, 1.0)
    r = grid.r_points[:, None]
    e = np.exp(1j * grid.phi_points)[None, :]
    psi1 = np.broadcast_to(bessel_i(0, r) / i0_1, grid.shape).astype(complex)
    psi2 = bessel_i(1, r) / i0_1 * e
    return psi1, psi2


def basis_mode(j: int, n_phi: int) -> tuple[str, int]:
    """Component and signed Fourier mode normalised to 1 at the rim by basis column ``j``.

    ``j = 1..Nphi/2`` fixes ``a_{j-1}(1) = 1``; ``j = Nphi/2+1`` fixes
    ``b_0(1) = 1``; ``j = Nphi/2+1+p`` (``p >= 1``) fixes ``b_{p-Nphi/2}(1) = 1``.
    """
    half = n_phi // 2
    if not 1 <= j <= n_phi:
        raise ValueError(f"basis index j={j} outside 1..{n_phi}")
    if j <= half:
        return "a", j - 1
    p = j - half - 1
    return "b", 0 if p == 0 else p - half


def exact_fundamental(j: int, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Exact basis pair ``(psi1^(j), psi2^(j))`` for ``q = 1``, sampled on ``grid``."""
    comp, n = basis_mode(j, grid.n_phi)
    r = grid.r_points[:, None]
    phi = grid.phi_points[None, :]
    if comp == "a":
        norm = bessel_i(n, 1.0)
        psi1 = bessel_i(n, r) / norm * np.exp(1j * n * phi)
        psi2 = bessel_i(n + 1, r) / norm * np.exp(1j * (n + 1) * phi)
    else:
        p = -n
        norm = bessel_i(p, 1.0)
        psi2 = bessel_i(p, r) / norm * np.exp(1j * n * phi)
        psi1 = bessel_i(p + 1, r) / norm * np.exp(1j * (n - 1) * phi)
    return psi1, psi2
