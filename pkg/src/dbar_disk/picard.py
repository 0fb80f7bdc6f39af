"""Fixed-point iteration for the bounded CGO unknowns ``Phi1, Phi2``.

Each step solves, mode by mode,

    (D - nR) a_n = F(q exp(conj(kz) - kz - i phi) Phi2)_n
    (D + nR) b_n = F(conj(q) exp(kz - conj(kz) + i phi) Phi1)_n

with the right-hand sides formed in physical space.  Modes with a polynomial
homogeneous solution get their top row replaced by the rim value:
``a_n(1) = delta_{n0}`` for ``n = 0..Nphi/2-1`` and ``b_n(1) = 0`` for
``n = -Nphi/2+1..0``.  All other modes are solved without replacement.
"""

from __future__ import annotations

import logging
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cgo import CGOSolution, Gauge
from .errors import ConvergenceError, DivergenceError, ResolutionError
from .potential import Phase, Potential, modulation_tails, phase_factor, sample
from .spectral import (
    FourierRange,
    Grid,
    PhysicalField,
    Sign,
    SpectralField,
    forward_transform,
    inverse_transform,
    mode_operator,
    trailing_magnitudes,
)

log = logging.getLogger(__name__)

DIVERGENCE_RUN = 5


_INVERSE_CACHE: "OrderedDict[int, np.ndarray]" = OrderedDict()
_INVERSE_CACHE_SIZE = 2


def _mode_inverse(s: int, n_r: int) -> np.ndarray:
    """Inverse of ``D - sR``; the top row is the rim functional when ``s >= 0``."""
    mat = np.array(mode_operator(s, Sign.MINUS, n_r).matrix)
    if s >= 0:
        mat[-1] = boundary_functional(n_r)
    lu, piv = sla.lu_factor(mat, check_finite=True)
    if np.abs(np.diag(lu)).min() <= np.finfo(float).eps * np.abs(lu).max():
        raise ResolutionError(f"mode matrix s={s} singular at n_r={n_r}")
    return sla.lu_solve((lu, piv), np.eye(n_r + 1))


def _inverse_stack(n_r: int, half: int) -> np.ndarray:
    """Inverses for ``s = -half .. half-1`` (a view into a per-``n_r`` cache)."""
    cached = _INVERSE_CACHE.get(n_r)
    have = 0 if cached is None else cached.shape[0] // 2
    if have < half:
        stack = np.empty((2 * half, n_r + 1, n_r + 1))
        for i, s in enumerate(range(-half, half)):
            if -have <= s < have:
                stack[i] = cached[s + have]
            else:
                stack[i] = _mode_inverse(s, n_r)
        stack.setflags(write=False)
        _INVERSE_CACHE[n_r] = cached = stack
        have = half
    _INVERSE_CACHE.move_to_end(n_r)
    while len(_INVERSE_CACHE) > _INVERSE_CACHE_SIZE:
        _INVERSE_CACHE.popitem(last=False)
    return cached[have - half : have + half]


@dataclass(frozen=True, eq=False)
class ModeSolveBank:
    """Factorised per-mode operators shared by both components.

    ``D + nR`` for a ``b`` mode equals ``D - (-n)R``, so both components
    draw from one stack of inverses indexed by ``s = n`` (``a``) or
    ``s = -n`` (``b``), ``s = -Nphi/2 .. Nphi/2-1``.  Rows ``s >= 0`` carry
    the rim functional in place of their highest-degree equation.
    """

    grid: Grid
    inverses: np.ndarray  # (Nphi, Nr+1, Nr+1), real
    slot_a: np.ndarray  # stack slot of each FFT column of a
    slot_b: np.ndarray
    tau_a: np.ndarray  # columns whose top row is a boundary row
    tau_b: np.ndarray

    @property
    def size(self) -> int:
        return 2 * self.grid.n_phi

    def matrix(self, comp: str, n: int) -> np.ndarray:
        """The (tau-modified) matrix actually factorised for mode ``n``."""
        s = n if comp == "a" else -n
        mat = np.array(mode_operator(s, Sign.MINUS, self.grid.n_r).matrix)
        if s >= 0:
            mat[-1] = boundary_functional(self.grid.n_r)
        return mat

    def solve(self, rhs_a: np.ndarray, rhs_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Back-substitute every mode of both components in one batched product."""
        stacked = np.zeros((self.grid.n_phi, self.grid.n_r + 1, 4))
        stacked[self.slot_a, :, 0] = rhs_a.real.T
        stacked[self.slot_a, :, 1] = rhs_a.imag.T
        stacked[self.slot_b, :, 2] = rhs_b.real.T
        stacked[self.slot_b, :, 3] = rhs_b.imag.T
        out = np.matmul(self.inverses, stacked)
        a = (out[self.slot_a, :, 0] + 1j * out[self.slot_a, :, 1]).T
        b = (out[self.slot_b, :, 2] + 1j * out[self.slot_b, :, 3]).T
        return a, b


def build_mode_bank(grid: Grid) -> ModeSolveBank:
    half = grid.n_phi // 2
    n_a = FourierRange.PSI1.modes(grid.n_phi)
    n_b = FourierRange.PSI2.modes(grid.n_phi)
    inverses = _inverse_stack(grid.n_r, half)
    return ModeSolveBank(grid, inverses, n_a + half, -n_b + half, n_a >= 0, n_b <= 0)


def boundary_functional(n_r: int) -> np.ndarray:
    """Row evaluating a Chebyshev series at ``r = 1``."""
    return np.ones(n_r + 1)


@dataclass
class IterationTrace:
    k: complex
    resolution: tuple
    tolerance: float
    deltas: list = field(default_factory=list)
    converged: bool = False

    @property
    def steps(self) -> int:
        return len(self.deltas)

    def to_dict(self) -> dict:
        return {
            "k": [self.k.real, self.k.imag],
            "resolution": list(self.resolution),
            "tolerance": self.tolerance,
            "steps": self.steps,
            "converged": self.converged,
            "deltas": list(self.deltas),
        }


def modulated_potentials(q: PhysicalField, k: complex) -> tuple[np.ndarray, np.ndarray]:
    """``q e^{conj(kz)-kz-i phi}`` and ``conj(q) e^{kz-conj(kz)+i phi}`` on the grid."""
    grid = q.grid
    e = np.exp(1j * grid.phi_points)[None, :]
    fwd = q.values * phase_factor(k, grid, Phase.FORWARD) / e
    bwd = np.conj(q.values) * phase_factor(k, grid, Phase.BACKWARD) * e
    return fwd, bwd


def picard_step(
    phi1: SpectralField,
    phi2: SpectralField,
    q_mod_fwd: np.ndarray,
    q_mod_bwd: np.ndarray,
    bank: ModeSolveBank,
    phys1: np.ndarray | None = None,
    phys2: np.ndarray | None = None,
) -> tuple[SpectralField, SpectralField]:
    """One fixed-point step; ``phys1/phys2`` may pass precomputed grid values."""
    grid = bank.grid
    if phys1 is None:
        phys1 = inverse_transform(phi1).values
    if phys2 is None:
        phys2 = inverse_transform(phi2).values
    rhs_a = forward_transform(PhysicalField(q_mod_fwd * phys2, grid), FourierRange.PSI1).coeffs
    rhs_b = forward_transform(PhysicalField(q_mod_bwd * phys1, grid), FourierRange.PSI2).coeffs
    rhs_a[-1, bank.tau_a] = 0.0
    rhs_a[-1, 0] = 1.0
    rhs_b[-1, bank.tau_b] = 0.0
    a, b = bank.solve(rhs_a, rhs_b)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DivergenceError("non-finite iterate")
    return (
        SpectralField(a, FourierRange.PSI1, grid),
        SpectralField(b, FourierRange.PSI2, grid),
    )


def reflection_iterative(phi2: SpectralField) -> complex:
    """``R = 2 conj(b_1(1))`` with ``b_1(1)`` the sum of the n=1 Chebyshev row."""
    return complex(2.0 * np.conj(phi2.mode(1).sum()))


def initial_iterates(grid: Grid) -> tuple[SpectralField, SpectralField]:
    a = np.zeros(grid.shape, dtype=complex)
    a[0, 0] = 1.0
    b = np.zeros(grid.shape, dtype=complex)
    return SpectralField(a, FourierRange.PSI1, grid), SpectralField(b, FourierRange.PSI2, grid)


def solve_cgo_iterative(
    potential: Potential | PhysicalField,
    k: complex,
    grid: Grid,
    tol: float = 1e-10,
    max_steps: int = 100,
    bank: ModeSolveBank | None = None,
) -> tuple[CGOSolution, IterationTrace]:
    """Iterate from ``Phi1 = 1, Phi2 = 0`` until ``Delta_inf < tol``.

    ``Delta_inf`` is the sum of the grid sup-norms of the changes in ``Phi1``
    and ``Phi2``.
    """
    k = complex(k)
    q = potential if isinstance(potential, PhysicalField) else sample(potential, grid)
    tails = modulation_tails(q, k)
    if max(tails) > 1e-13:
        warnings.warn(
            f"q exp(conj(kz)-kz) under-resolved at Nr={grid.n_r}, Nphi={grid.n_phi} "
            f"(trailing coefficients {tails[0]:.1e}, {tails[1]:.1e})",
            RuntimeWarning,
            stacklevel=2,
        )
    if bank is None:
        bank = build_mode_bank(grid)
    fwd, bwd = modulated_potentials(q, k)
    trace = IterationTrace(k, (grid.n_r, grid.n_phi), tol)
    phi1, phi2 = initial_iterates(grid)
    p1, p2 = inverse_transform(phi1).values, inverse_transform(phi2).values
    growing = 0
    for _ in range(max_steps):
        try:
            phi1, phi2 = picard_step(phi1, phi2, fwd, bwd, bank, p1, p2)
        except DivergenceError as exc:
            exc.trace = trace
            raise
        n1, n2 = inverse_transform(phi1).values, inverse_transform(phi2).values
        delta = float(np.abs(n1 - p1).max() + np.abs(n2 - p2).max())
        if trace.deltas and delta > trace.deltas[-1]:
            growing += 1
        else:
            growing = 0
        trace.deltas.append(delta)
        p1, p2 = n1, n2
        if delta < tol:
            trace.converged = True
            break
        if growing >= DIVERGENCE_RUN or not np.isfinite(delta):
            raise DivergenceError(
                f"Picard iteration diverging at k={k} (Delta grew {growing} steps in a row); "
                "a direct solve of the k-dependent system would be needed for this potential",
                trace,
            )
    if not trace.converged:
        raise ConvergenceError(
            f"no convergence in {max_steps} steps at k={k} (last Delta={trace.deltas[-1]:.3e})",
            trace,
        )
    log.debug("picard k=%s converged in %d steps", k, trace.steps)
    diagnostics = {
        "trailing_phi1": trailing_magnitudes(phi1),
        "trailing_phi2": trailing_magnitudes(phi2),
        "modulation_tails": tails,
        "steps": trace.steps,
    }
    sol = CGOSolution(k, Gauge.PHI, phi1, phi2, reflection_iterative(phi2), None, diagnostics)
    return sol, trace
