"""Fundamental solutions of the discretised d-bar system on the disk.

Unknowns are the Chebyshev coefficients of every Fourier mode of ``psi1``
(``a``, range PSI1) and ``psi2`` (``b``, range PSI2).  Row/column ``idx`` of the
assembled operator is ``comp * Nphi * (Nr+1) + col * (Nr+1) + m`` with
``comp = 0`` for ``a`` and ``1`` for ``b``, ``col`` the FFT bin and ``m`` the
Chebyshev degree.

Mode equations::

    (D - nR) a_n = [q e^{-i phi} psi2]_n
    (D + nR) b_n = [conj(q) e^{i phi} psi1]_n

The modes with a polynomial homogeneous solution (``r^n`` for ``a_n``,
``n = 0..Nphi/2-1``; ``r^{-n}`` for ``b_n``, ``n = -Nphi/2+1..0``) carry the
free constants.  Their highest-degree row is replaced by the rim value
``sum_m coeff = a_n(1)`` (tau method), giving exactly ``Nphi`` boundary rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bessel import basis_mode
from .errors import SingularSystemError
from .potential import fingerprint
from .spectral import (
    FourierRange,
    Grid,
    PhysicalField,
    Sign,
    SpectralField,
    cheb_product_matrix,
    forward_transform,
    mode_operator,
)

log = logging.getLogger(__name__)

# potential coefficients below this fraction of the largest are treated as zero
COUPLING_RTOL = 1e-14
# switch to dense LU above this fill fraction
DENSE_FILL = 0.05


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    matrix: sp.csr_matrix
    grid: Grid

    @property
    def block(self) -> int:
        return self.grid.n_phi * (self.grid.n_r + 1)

    def index(self, comp: str, col: int, m: int) -> int:
        return index(self.grid, comp, col, m)


def index(grid: Grid, comp: str, col: int, m: int) -> int:
    c = {"a": 0, "b": 1}[comp]
    return (c * grid.n_phi + col) * (grid.n_r + 1) + m


def pack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flatten ``(Nr+1, Nphi)`` coefficient arrays into the unknown vector."""
    return np.concatenate([a.T.ravel(), b.T.ravel()])


def unpack(x: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    n = grid.n_phi * (grid.n_r + 1)
    shape = (grid.n_phi, grid.n_r + 1)
    return x[:n].reshape(shape).T, x[n:].reshape(shape).T


def kernel_columns(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """FFT columns of the ``a`` and ``b`` modes that carry a boundary row."""
    half = grid.n_phi // 2
    a_cols = np.arange(half)
    b_cols = np.array([0] + list(range(half + 1, grid.n_phi)))
    return a_cols, b_cols


def _potential_coeffs(values: np.ndarray, grid: Grid) -> np.ndarray:
    c = forward_transform(PhysicalField(values, grid), FourierRange.PSI1).coeffs
    scale = np.abs(c).max()
    if scale > 0:
        c = np.where(np.abs(c) > COUPLING_RTOL * scale, c, 0)
    return c


def _coupling(qc: np.ndarray, shift: int, grid: Grid) -> sp.spmatrix:
    """Coefficient-space multiplication by ``q e^{i shift phi}`` (cyclic in Fourier)."""
    n_phi, nr1 = grid.n_phi, grid.n_r + 1
    active = [p for p in range(n_phi) if np.any(qc[:, p])]
    mats = {p: sp.csr_matrix(cheb_product_matrix(qc[:, p])) for p in active}
    blocks = [[None] * n_phi for _ in range(n_phi)]
    for p in active:
        for c_in in range(n_phi):
            blocks[(c_in + shift + p) % n_phi][c_in] = mats[p]
    if not active:
        return sp.csr_matrix((n_phi * nr1, n_phi * nr1), dtype=complex)
    for c in range(n_phi):
        if blocks[c][c] is None:
            blocks[c][c] = sp.csr_matrix((nr1, nr1), dtype=complex)
    return sp.bmat(blocks, format="csr", dtype=complex)


def assemble(q: PhysicalField) -> AssembledOperator:
    """Build the operator of the homogeneous discretised system (no boundary rows)."""
    grid = q.grid
    nr = grid.n_r
    modes_a = FourierRange.PSI1.modes(grid.n_phi)
    modes_b = FourierRange.PSI2.modes(grid.n_phi)
    diag_a = sp.block_diag(
        [mode_operator(int(n), Sign.MINUS, nr).matrix for n in modes_a], format="csr"
    )
    diag_b = sp.block_diag(
        [mode_operator(int(n), Sign.PLUS, nr).matrix for n in modes_b], format="csr"
    )
    # a rows see q e^{-i phi} psi2, b rows see conj(q) e^{+i phi} psi1
    q_ab = _coupling(_potential_coeffs(q.values, grid), -1, grid)
    q_ba = _coupling(_potential_coeffs(np.conj(q.values), grid), +1, grid)
    mat = sp.bmat([[diag_a, -q_ab], [-q_ba, diag_b]], format="csr", dtype=complex)
    mat.eliminate_zeros()
    return AssembledOperator(mat, grid)


def boundary_rows(grid: Grid) -> list[tuple[str, int, int]]:
    """``(component, fft_column, row_index)`` of every replaced (tau) row, in basis order j."""
    rows = []
    for j in range(1, grid.n_phi + 1):
        comp, n = basis_mode(j, grid.n_phi)
        rng = FourierRange.PSI1 if comp == "a" else FourierRange.PSI2
        col = rng.column(n, grid.n_phi)
        rows.append((comp, col, index(grid, comp, col, grid.n_r)))
    return rows


def apply_tau(op: AssembledOperator) -> tuple[sp.csr_matrix, np.ndarray]:
    """Replace the boundary rows and build the right-hand side matrix ``S``.

    Column ``j-1`` of ``S`` has a single 1 in the boundary row of basis
    function ``j``, so that solution realises its rim normalisation.
    """
    grid = op.grid
    nr1 = grid.n_r + 1
    rows = boundary_rows(grid)
    mat = op.matrix.tolil(copy=True)
    for comp, col, row in rows:
        start = index(grid, comp, col, 0)
        mat.rows[row] = list(range(start, start + nr1))
        mat.data[row] = [1.0 + 0j] * nr1
    rhs = np.zeros((mat.shape[0], grid.n_phi), dtype=complex)
    for j, (_, _, row) in enumerate(rows):
        rhs[row, j] = 1.0
    return mat.tocsr(), rhs


def tau_rhs_column(grid: Grid, j: int) -> np.ndarray:
    """Single right-hand side column for basis function ``j``."""
    rhs = np.zeros(2 * grid.n_phi * (grid.n_r + 1), dtype=complex)
    rhs[boundary_rows(grid)[j - 1][2]] = 1.0
    return rhs


@dataclass(frozen=True, eq=False)
class FundamentalBasis:
    psi1: list
    psi2: list
    grid: Grid
    potential_fingerprint: str
    condition: float
    residual: float = field(default=np.nan)

    def __len__(self):
        return len(self.psi1)

    def column(self, j: int) -> tuple[SpectralField, SpectralField]:
        return self.psi1[j - 1], self.psi2[j - 1]

    def coeff_stack(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient arrays of shape ``(Nphi, Nr+1, Nphi)`` indexed by ``j-1``."""
        return (
            np.stack([s.coeffs for s in self.psi1]),
            np.stack([s.coeffs for s in self.psi2]),
        )


def _condition_sparse(mat: sp.csc_matrix, lu) -> float:
    n = mat.shape[0]
    inv = spla.LinearOperator(
        (n, n),
        matvec=lambda x: lu.solve(np.asarray(x, dtype=complex)),
        rmatvec=lambda x: lu.solve(np.asarray(x, dtype=complex), trans="H"),
        dtype=complex,
    )
    return float(spla.onenormest(mat) * spla.onenormest(inv))


def solve_basis(q: PhysicalField, method: str = "auto") -> FundamentalBasis:
    """Solve for all ``Nphi`` fundamental solutions with one factorisation.

    ``method`` is ``"sparse"`` (SuperLU), ``"dense"`` (LAPACK LU with partial
    pivoting) or ``"auto"``, which picks dense once the operator fill exceeds
    a few percent.
    """
    grid = q.grid
    op = assemble(q)
    mat, rhs = apply_tau(op)
    n = mat.shape[0]
    if method == "auto":
        method = "dense" if mat.nnz > DENSE_FILL * n * n else "sparse"
    if method == "sparse":
        csc = mat.tocsc()
        try:
            lu = spla.splu(csc)
        except RuntimeError as exc:
            raise SingularSystemError(f"tau-modified operator is singular: {exc}", np.inf) from exc
        x = lu.solve(rhs)
        cond = _condition_sparse(csc, lu)
    elif method == "dense":
        dense = mat.toarray()
        anorm = np.abs(dense).sum(axis=0).max()
        lu, piv = sla.lu_factor(dense, check_finite=True)
        rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
        cond = np.inf if rcond == 0 else 1.0 / rcond
        if rcond < np.finfo(float).eps:
            raise SingularSystemError(
                f"tau-modified operator is singular (condition ~ {cond:.3e})", cond
            )
        x = sla.lu_solve((lu, piv), rhs)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("non-finite basis coefficients", cond)
    residual = float(np.abs(mat @ x - rhs).max())
    log.info("fundamental basis Nr=%d Nphi=%d cond1~%.3e residual=%.2e", grid.n_r, grid.n_phi, cond, residual)
    psi1, psi2 = [], []
    for j in range(grid.n_phi):
        a, b = unpack(x[:, j], grid)
        psi1.append(SpectralField(a, FourierRange.PSI1, grid))
        psi2.append(SpectralField(b, FourierRange.PSI2, grid))
    return FundamentalBasis(psi1, psi2, grid, fingerprint(q), cond, residual)
