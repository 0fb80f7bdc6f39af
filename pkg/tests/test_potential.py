import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbar_disk.errors import (
    MalformedHeaderError,
    NonFiniteError,
    ResolutionError,
    ShapeMismatchError,
)
from dbar_disk.potential import (
    Phase,
    Potential,
    PotentialKind,
    autotune,
    characteristic,
    fingerprint,
    load_sampled,
    modulation_tails,
    phase_factor,
    phase_modulated,
    radial_profile,
    resolution_check,
    sample,
    save_sampled,
)
from dbar_disk.spectral import PhysicalField, make_grid

ks = st.complex_numbers(max_magnitude=200, allow_nan=False, allow_infinity=False)


class TestSampling:
    def test_characteristic(self):
        g = make_grid(8, 8)
        np.testing.assert_array_equal(sample(characteristic(), g).values, 1)
        np.testing.assert_array_equal(sample(characteristic(0.0), g).values, 0)

    def test_radial_profile_r_squared(self):
        g = make_grid(12, 8)
        # r^2 = (1 + l)^2 / 4 = 3/8 T0 + 1/2 T1 + 1/8 T2
        p = radial_profile([3 / 8, 1 / 2, 1 / 8])
        v = sample(p, g).values
        np.testing.assert_allclose(v, g.r**2, atol=1e-15)
        assert p.is_radial

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            radial_profile([])
        with pytest.raises(ValueError):
            radial_profile([1.0, np.nan])
        with pytest.raises(ValueError):
            Potential(PotentialKind.SAMPLED)

    def test_sup_norm_bound(self):
        assert characteristic(-3).sup_norm_bound == 3
        assert radial_profile([1, -2]).sup_norm_bound == 3

    def test_fingerprint_depends_on_values(self):
        g = make_grid(4, 4)
        assert fingerprint(sample(characteristic(1), g)) != fingerprint(sample(characteristic(2), g))


class TestFile:
    def test_round_trip(self, tmp_path):
        g = make_grid(6, 8)
        q = sample(characteristic(), g)
        path = save_sampled(q, tmp_path / "q.txt")
        p = load_sampled(path)
        assert p.kind is PotentialKind.SAMPLED and not p.is_radial
        np.testing.assert_array_equal(sample(p, g).values, q.values)

    def test_lossless_complex(self, tmp_path):
        g = make_grid(4, 4)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(g.shape) / 7 + 1j * rng.standard_normal(g.shape) / 3
        p = load_sampled(save_sampled(PhysicalField(v, g), tmp_path / "q.txt"))
        np.testing.assert_array_equal(p.samples.values, v)

    def test_wrong_grid(self, tmp_path):
        p = load_sampled(save_sampled(sample(characteristic(), make_grid(4, 4)), tmp_path / "q.txt"))
        with pytest.raises(ShapeMismatchError):
            sample(p, make_grid(4, 8))

    def test_truncated(self, tmp_path):
        path = save_sampled(sample(characteristic(), make_grid(4, 4)), tmp_path / "q.txt")
        path.write_text("\n".join(path.read_text().splitlines()[:-2]) + "\n")
        with pytest.raises(ShapeMismatchError):
            load_sampled(path)

    def test_nan(self, tmp_path):
        path = save_sampled(sample(characteristic(), make_grid(4, 4)), tmp_path / "q.txt")
        lines = path.read_text().splitlines()
        lines[3] = "0,2,nan,0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(NonFiniteError):
            load_sampled(path)

    @pytest.mark.parametrize("header", ["", "dbar-potential v2 nr=4 nphi=4", "dbar-potential v1 nr=4 nphi=5"])
    def test_bad_header(self, tmp_path, header):
        path = tmp_path / "q.txt"
        path.write_text(header + "\n")
        with pytest.raises(MalformedHeaderError):
            load_sampled(path)

    def test_errors_are_distinct(self):
        assert len({MalformedHeaderError, ShapeMismatchError, NonFiniteError}) == 3
        assert not issubclass(NonFiniteError, ShapeMismatchError)


class TestModulation:
    def test_k_zero_identity(self):
        g = make_grid(8, 8)
        q = sample(radial_profile([1, 0.3]), g)
        np.testing.assert_array_equal(phase_modulated(q, 0).values, q.values)

    @settings(max_examples=50, deadline=None)
    @given(k=ks)
    def test_pure_phase(self, k):
        g = make_grid(8, 16)
        for sign in Phase:
            assert np.abs(np.abs(phase_factor(k, g, sign)) - 1).max() <= 1e-15

    @settings(max_examples=50, deadline=None)
    @given(k=ks)
    def test_forward_backward_cancel(self, k):
        g = make_grid(8, 16)
        q = sample(radial_profile([0.5, -0.2, 0.1], 2 - 1j), g)
        one = PhysicalField(np.ones(g.shape, complex), g)
        prod = phase_modulated(q, k, Phase.FORWARD).values * phase_modulated(one, k, Phase.BACKWARD).values
        assert np.abs(prod - q.values).max() <= 1e-14 * np.abs(q.values).max()

    def test_forward_matches_definition(self):
        g = make_grid(8, 16)
        k = 1.3 - 0.4j
        expect = np.exp(np.conj(k * g.z) - k * g.z)
        np.testing.assert_allclose(phase_factor(k, g, Phase.FORWARD), expect, atol=1e-15)

    def test_k100_resolved(self):
        assert resolution_check(characteristic(), 100, 200, 600)
        assert max(modulation_tails(sample(characteristic(), make_grid(200, 600)), 100)) <= 1e-13

    def test_k100_underresolved_small_grid(self):
        assert not resolution_check(characteristic(), 100, 32, 64)


class TestAutotune:
    def test_returns_passing_resolution(self):
        n_r, n_phi = autotune(characteristic(), 20.0)
        assert resolution_check(characteristic(), 20.0, n_r, n_phi)
        assert n_r % 8 == 0 and n_phi % 16 == 0

    def test_already_resolved(self):
        assert autotune(characteristic(), 0.0, 16, 32) == (16, 32)

    def test_budget(self):
        with pytest.raises(ResolutionError):
            autotune(characteristic(), 500.0, max_points=10_000)
