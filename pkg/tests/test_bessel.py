import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbar_disk.bessel import (
    basis_mode,
    bessel_i,
    bessel_table,
    exact_fundamental,
    exact_k0_solution,
)
from dbar_disk.spectral import make_grid

mpmath.mp.dps = 40


def oracle(n, r):
    return float(mpmath.besseli(n, r))


class TestSeries:
    def test_trivial_values(self):
        assert bessel_i(0, 0.0) == 1.0
        assert bessel_i(1, 0.0) == 0.0

    def test_i0_at_one(self):
        assert abs(bessel_i(0, 1.0) - 1.2660658777520084) <= 1e-15

    @settings(max_examples=200, deadline=None)
    @given(n=st.integers(0, 40), r=st.floats(0.0, 1.0))
    def test_against_mpmath(self, n, r):
        ref = oracle(n, r)
        assert abs(bessel_i(n, r) - ref) <= 1e-15 * max(ref, 1e-300) + 1e-300

    @pytest.mark.parametrize("n", [100, 150, 300])
    def test_high_order(self, n):
        ref = oracle(n, 0.9)
        assert abs(bessel_i(n, 0.9) - ref) <= 1e-13 * ref

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(-30, 30), r=st.floats(0.0, 1.0))
    def test_symmetric_in_order(self, n, r):
        assert bessel_i(n, r) == bessel_i(-n, r)

    def test_recurrence(self):
        r = np.linspace(0.1, 1, 37)
        for n in range(1, 11):
            lhs = bessel_i(n - 1, r) - bessel_i(n + 1, r)
            assert np.abs(lhs - 2 * n / r * bessel_i(n, r)).max() <= 1e-12

    def test_derivative_identity(self):
        h = 1e-5
        r = np.linspace(0.1, 0.9, 17)
        for n in range(0, 10):
            d = (bessel_i(n, r + h) - bessel_i(n, r - h)) / (2 * h)
            assert np.abs(d - n / r * bessel_i(n, r) - bessel_i(n + 1, r)).max() <= 1e-10

    def test_vectorised(self):
        r = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(bessel_i(2, r), [oracle(2, x) for x in r], rtol=1e-15)

    @pytest.mark.parametrize("r", [-0.1, 1.5])
    def test_rejects_outside_unit_interval(self, r):
        with pytest.raises(ValueError):
            bessel_i(0, r)

    def test_rejects_large_order(self):
        with pytest.raises(ValueError):
            bessel_i(10_000, 0.5)


class TestTable:
    def test_orders(self):
        g = make_grid(8, 16)
        t = bessel_table(g)
        assert t.orders[-1] == 10
        np.testing.assert_allclose(t.values[3], [oracle(3, r) for r in g.r_points], rtol=1e-15, atol=1e-300)


class TestClosedForms:
    def test_k0_solution(self):
        g = make_grid(16, 16)
        psi1, psi2 = exact_k0_solution(g)
        np.testing.assert_allclose(psi1[0], 1.0)
        np.testing.assert_allclose(psi2[-1], 0.0)
        assert abs(psi2[0, 0] - 0.44639) <= 1e-5

    def test_first_column(self):
        g = make_grid(16, 16)
        a, b = exact_fundamental(1, g)
        e1, e2 = exact_k0_solution(g)
        np.testing.assert_allclose(a, e1, rtol=1e-15)
        np.testing.assert_allclose(b, e2, rtol=1e-15)
        np.testing.assert_allclose(a[0], 1.0)

    def test_second_column_vanishes_at_origin(self):
        g = make_grid(16, 16)
        _, b = exact_fundamental(2, g)
        np.testing.assert_array_equal(b[-1], 0)

    @pytest.mark.parametrize("j", range(1, 17))
    def test_rim_normalisation(self, j):
        g = make_grid(16, 16)
        comp, n = basis_mode(j, 16)
        a, b = exact_fundamental(j, g)
        rim = (a if comp == "a" else b)[0]
        coeff = np.fft.fft(rim) / 16
        expect = np.zeros(16, complex)
        expect[n % 16] = 1
        np.testing.assert_allclose(coeff, expect, atol=1e-14)

    def test_basis_mode_ordering(self):
        assert [basis_mode(j, 8) for j in range(1, 9)] == [
            ("a", 0), ("a", 1), ("a", 2), ("a", 3),
            ("b", 0), ("b", -3), ("b", -2), ("b", -1),
        ]
        with pytest.raises(ValueError):
            basis_mode(9, 8)
