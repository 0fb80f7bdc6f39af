import numpy as np
import pytest

from dbar_disk.bessel import basis_mode, exact_fundamental
from dbar_disk.errors import SingularSystemError
from dbar_disk.fundamental import (
    apply_tau,
    assemble,
    boundary_rows,
    index,
    kernel_columns,
    pack,
    solve_basis,
    tau_rhs_column,
    unpack,
)
from dbar_disk.potential import characteristic, radial_profile, sample
from dbar_disk.spectral import (
    FourierRange,
    Sign,
    inverse_transform,
    make_grid,
    mode_operator,
    to_spectral,
)
from dbar_disk.validation import bessel_fundamental_check


def zero_q(grid):
    return sample(characteristic(0.0), grid)


def block(mat, grid, ci, ri, cj, rj):
    n = grid.n_r + 1
    i0 = index(grid, ci, ri, 0)
    j0 = index(grid, cj, rj, 0)
    return mat[i0 : i0 + n, j0 : j0 + n]


class TestAssemble:
    def test_zero_potential_block_diagonal(self):
        g = make_grid(6, 8)
        op = assemble(zero_q(g)).matrix.toarray()
        half = op.shape[0] // 2
        assert np.all(op[:half, half:] == 0) and np.all(op[half:, :half] == 0)

    def test_diagonal_blocks_are_mode_operators(self):
        g = make_grid(6, 8)
        op = assemble(sample(characteristic(), g)).matrix.toarray()
        for col, n in enumerate(FourierRange.PSI1.modes(8)):
            np.testing.assert_allclose(block(op, g, "a", col, "a", col), mode_operator(n, Sign.MINUS, 6).matrix)
        for col, n in enumerate(FourierRange.PSI2.modes(8)):
            np.testing.assert_allclose(block(op, g, "b", col, "b", col), mode_operator(n, Sign.PLUS, 6).matrix)

    def test_coupling_shifts_mode(self):
        # q = 1 couples a_n only to b_{n+1}, and b_n only to a_{n-1}
        g = make_grid(6, 8)
        op = assemble(sample(characteristic(), g)).matrix.toarray()
        for col, n in enumerate(FourierRange.PSI1.modes(8)):
            for cb, m in enumerate(FourierRange.PSI2.modes(8)):
                blk = block(op, g, "a", col, "b", cb)
                if (m - 1 - n) % 8 == 0:
                    np.testing.assert_allclose(blk, -np.eye(7))
                else:
                    assert not blk.any()

    def test_linear_in_potential(self):
        g = make_grid(6, 8)
        q1 = sample(radial_profile([0.3, 0.2]), g)
        q2 = sample(characteristic(0.7 - 0.1j), g)
        from dbar_disk.spectral import PhysicalField

        q12 = PhysicalField(q1.values + q2.values, g)
        a1, a2, a12, a0 = (assemble(q).matrix.toarray() for q in (q1, q2, q12, zero_q(g)))
        np.testing.assert_allclose(a12, a1 + a2 - a0, atol=1e-14)

    def test_holomorphic_kernel(self):
        g = make_grid(32, 64)
        k = 0.6 + 0.8j
        a = to_spectral(np.exp(k * g.z), g, FourierRange.PSI1).coeffs
        b = np.zeros_like(a)
        res = assemble(zero_q(g)).matrix @ pack(a, b)
        assert np.abs(res).max() <= 1e-10

    def test_bessel_pair_residual(self):
        g = make_grid(32, 64)
        e1, e2 = exact_fundamental(1, g)
        x = pack(to_spectral(e1, g, FourierRange.PSI1).coeffs, to_spectral(e2, g, FourierRange.PSI2).coeffs)
        res = assemble(sample(characteristic(), g)).matrix @ x
        assert np.abs(res).max() <= 1e-10

    def test_pack_round_trip(self):
        g = make_grid(4, 8)
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((2, *g.shape))
        a2, b2 = unpack(pack(a, b), g)
        np.testing.assert_array_equal(a2, a)
        np.testing.assert_array_equal(b2, b)


class TestTau:
    def test_one_boundary_row_per_kernel_mode(self):
        g = make_grid(6, 8)
        rows = boundary_rows(g)
        assert len(rows) == 8 == len(set(rows))
        a_cols, b_cols = kernel_columns(g)
        assert sorted(c for comp, c, _ in rows if comp == "a") == sorted(a_cols)
        assert sorted(c for comp, c, _ in rows if comp == "b") == sorted(b_cols)
        assert all(row == index(g, comp, col, 6) for comp, col, row in rows)

    def test_rhs_first_column(self):
        g = make_grid(6, 8)
        rhs = tau_rhs_column(g, 1)
        assert np.count_nonzero(rhs) == 1
        assert np.flatnonzero(rhs)[0] == index(g, "a", 0, 6)

    def test_rhs_b0_column(self):
        g = make_grid(6, 8)
        rhs = tau_rhs_column(g, 5)
        assert np.flatnonzero(rhs)[0] == index(g, "b", 0, 6)

    def test_rhs_matrix_matches_columns(self):
        g = make_grid(4, 8)
        _, rhs = apply_tau(assemble(zero_q(g)))
        for j in range(1, 9):
            np.testing.assert_array_equal(rhs[:, j - 1], tau_rhs_column(g, j))

    def test_replaced_row_is_rim_functional(self):
        g = make_grid(6, 8)
        mat, _ = apply_tau(assemble(sample(characteristic(), g)))
        mat = mat.toarray()
        c = np.zeros(g.shape, complex)
        c[:, 2] = [1, -1, 2, -2, 0, 0, 0]  # a_2(1) = 0
        x = pack(c, np.zeros_like(c))
        for comp, col, row in boundary_rows(g):
            assert mat[row] @ x == 0


class TestSolveBasis:
    def test_zero_potential_monomials(self):
        g = make_grid(32, 64)
        basis = solve_basis(zero_q(g))
        for j in range(1, 65):
            comp, n = basis_mode(j, 64)
            s1, s2 = basis.column(j)
            p1, p2 = inverse_transform(s1).values, inverse_transform(s2).values
            if comp == "a":
                assert np.abs(p1 - g.z**n).max() <= 1e-12
                assert np.abs(p2).max() <= 1e-12
            else:
                assert np.abs(p2 - np.conj(g.z) ** (-n)).max() <= 1e-12
                assert np.abs(p1).max() <= 1e-12

    def test_unit_potential_against_bessel(self, unit_basis):
        check = bessel_fundamental_check(32, 64, unit_basis)
        assert check.max_error(skip=(33,)) <= 1e-12
        assert check.errors[32] <= 1e-12
        assert check.max_trailing() <= 1e-12

    def test_rim_conditions(self, unit_basis):
        g = unit_basis.grid
        for j in range(1, 65):
            comp, n = basis_mode(j, 64)
            s1, s2 = unit_basis.column(j)
            rim_a = s1.coeffs.sum(axis=0)
            rim_b = s2.coeffs.sum(axis=0)
            a_cols, b_cols = kernel_columns(g)
            expect_a = np.zeros(64)
            expect_b = np.zeros(64)
            if comp == "a":
                expect_a[FourierRange.PSI1.column(n, 64)] = 1
            else:
                expect_b[FourierRange.PSI2.column(n, 64)] = 1
            assert np.abs(rim_a[a_cols] - expect_a[a_cols]).max() <= 1e-12
            assert np.abs(rim_b[b_cols] - expect_b[b_cols]).max() <= 1e-12

    def test_pde_residual(self, unit_basis):
        g = unit_basis.grid
        op = assemble(sample(characteristic(), g)).matrix
        replaced = {row for _, _, row in boundary_rows(g)}
        keep = np.array([i for i in range(op.shape[0]) if i not in replaced])
        scale = np.abs(op).sum(axis=1).max()
        for j in range(1, 65):
            s1, s2 = unit_basis.column(j)
            res = op @ pack(s1.coeffs, s2.coeffs)
            assert np.abs(res[keep]).max() <= 1e-10 * scale

    def test_sparse_and_dense_agree(self):
        g = make_grid(12, 16)
        q = sample(radial_profile([0.4, 0.3, -0.1], 1.5), g)
        s, d = solve_basis(q, "sparse"), solve_basis(q, "dense")
        for j in range(1, 17):
            np.testing.assert_allclose(s.column(j)[0].coeffs, d.column(j)[0].coeffs, atol=1e-12)
            np.testing.assert_allclose(s.column(j)[1].coeffs, d.column(j)[1].coeffs, atol=1e-12)
        assert np.isfinite(s.condition) and np.isfinite(d.condition)

    def test_condition_and_fingerprint_recorded(self, unit_basis):
        assert 1 < unit_basis.condition < 1e10
        assert unit_basis.residual <= 1e-12
        assert len(unit_basis.potential_fingerprint) == 64

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_basis(zero_q(make_grid(4, 8)), "qr")

    def test_singular_system_reported(self):
        g = make_grid(4, 8)
        q = sample(characteristic(np.nan), g)
        with pytest.raises((SingularSystemError, ValueError)):
            solve_basis(q, "dense")


class TestSpectralConvergence:
    def test_error_decays_exponentially(self):
        sizes = [8, 16, 24, 32]
        errs = [bessel_fundamental_check(n, 64).max_error() for n in sizes]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert np.polyfit(sizes, np.log(errs), 1)[0] < -0.5
