"""Norm-layer checks.

The Gaussian expectations below come from the closed form

    || e^{-(x^2+y^2)/2} ||_s^2 = pi * e * Gamma(s+1, 1)

(upper incomplete gamma; polar change of variables on the Fourier side),
evaluated with scipy.special.gammaincc and cross-checked by adaptive
quadrature of (1+r^2)^s e^{-r^2} r dr.  The 1D values are quadrature of
(1+k^2)^s e^{-k^2} dk.  Box and resolution are chosen so truncation sits
far below the comparison tolerance.
"""

import csv
import math

import numpy as np
import pytest

from gaslab.sobolev import (
    FitRecord,
    Grid1D,
    NormEstimate,
    ScalingFit,
    c1_norm,
    fit_scaling,
    hs_norm,
    hs_norm_1d,
    hs_norm_state,
    interpolation_check,
    kato_ponce_check,
    linf,
    packet_inequality_check,
    packet_norm_check,
    random_band_limited,
    reciprocal_check,
    write_fit_csv,
)
from gaslab.spectral import SpectralField, make_grid

GAUSS_2D = {1.45: 3.0350056996780292, 2.5: 5.21927027801319}
GAUSS_1D = {1.45: 1.841293741875641, 2.5: 2.699602541635888}


@pytest.fixture(scope="module")
def gauss_grid():
    g = make_grid(256, 256, 16.0, 16.0)
    f = SpectralField.from_function(g, lambda x, y: np.exp(-(x**2 + y**2) / 2))
    return g, f


class TestHsNorm:
    @pytest.mark.parametrize("s", [1.45, 2.5])
    def test_gaussian_2d(self, gauss_grid, s):
        _, f = gauss_grid
        assert hs_norm(f, s).value == pytest.approx(GAUSS_2D[s], rel=1e-10)

    @pytest.mark.parametrize("s", [1.45, 2.5])
    def test_gaussian_1d(self, s):
        g = Grid1D(m=2048, l=16.0)
        vals = np.exp(-g.x**2 / 2.0)
        assert hs_norm_1d(g, vals, s) == pytest.approx(GAUSS_1D[s], rel=1e-10)

    def test_zero_index_is_l2(self, gauss_grid):
        from gaslab.spectral import physical_l2
        _, f = gauss_grid
        assert hs_norm(f, 0.0).value == pytest.approx(physical_l2(f), rel=1e-12)

    def test_single_mode_multiplier_identity(self):
        g = make_grid(64, 64, np.pi, np.pi)
        f = SpectralField.from_function(
            g, lambda x, y: np.cos(3 * x) * np.cos(4 * y))
        s = 1.7
        expected = (1.0 + 9.0 + 16.0) ** (s / 2) * hs_norm(f, 0.0).value
        assert hs_norm(f, s).value == pytest.approx(expected, rel=1e-13)

    def test_grid_independence(self):
        # same analytic field, two resolutions, same norm
        vals = []
        for n in (128, 256):
            g = make_grid(n, n, 16.0, 16.0)
            f = SpectralField.from_function(
                g, lambda x, y: np.exp(-(x**2 + y**2) / 2))
            vals.append(hs_norm(f, 2.5).value)
        assert vals[0] == pytest.approx(vals[1], rel=1e-11)

    def test_index_cap(self, gauss_grid):
        _, f = gauss_grid
        with pytest.raises(ValueError, match="must not exceed"):
            hs_norm(f, 65.0)

    def test_non_finite_content(self):
        g = make_grid(16, 16, 1.0, 1.0)
        bad = np.zeros((16, 16))
        bad[3, 3] = np.nan
        with pytest.raises(ValueError, match="not finite"):
            hs_norm(SpectralField(g, physical=bad), 1.0)

    def test_float_protocol(self, gauss_grid):
        _, f = gauss_grid
        est = hs_norm(f, 1.0)
        assert isinstance(est, NormEstimate)
        assert float(est) == est.value


class TestStateNorm:
    def test_root_sum_square(self, gauss_grid):
        g, f = gauss_grid
        zero = SpectralField(g, physical=np.zeros((g.nx, g.ny)))
        est = hs_norm_state((f, f, zero, zero), 1.45)
        assert est.value == pytest.approx(math.sqrt(2.0) * hs_norm(f, 1.45).value,
                                          rel=1e-13)

    def test_grid_mismatch(self, gauss_grid):
        g, f = gauss_grid
        other = make_grid(32, 32, 1.0, 1.0)
        z = SpectralField(other, physical=np.zeros((32, 32)))
        with pytest.raises(ValueError, match="different grids"):
            hs_norm_state((f, f, z, z), 1.0)


class TestGrid1D:
    def test_validation(self):
        with pytest.raises(ValueError, match="power of two"):
            Grid1D(m=100, l=1.0)
        with pytest.raises(ValueError, match="l must be positive"):
            Grid1D(m=64, l=0.0)

    def test_sample_count_check(self):
        g = Grid1D(m=64, l=1.0)
        with pytest.raises(ValueError, match="expected 64 samples"):
            hs_norm_1d(g, np.zeros(32), 1.0)


class TestFitScaling:
    def test_exact_power_law(self):
        pts = [(n, 3.0 * n**-1.7) for n in (8, 16, 32, 64)]
        fit = fit_scaling(pts)
        assert fit.slope == pytest.approx(-1.7, abs=1e-12)
        assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)
        assert fit.stderr < 1e-12
        assert fit.npoints == 4

    def test_noise_tolerance(self):
        rng = np.random.default_rng(2)
        pts = [(n, 2.0 * n**0.5 * math.exp(0.01 * rng.standard_normal()))
               for n in (8, 16, 32, 64, 128)]
        assert fit_scaling(pts).slope == pytest.approx(0.5, abs=0.02)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="need at least 3 points"):
            fit_scaling([(8, 1.0), (16, 0.5)])

    def test_positive_inputs_required(self):
        with pytest.raises(ValueError, match="strictly positive"):
            fit_scaling([(8, 1.0), (16, 0.5), (32, 0.0)])

    def test_degenerate_abscissae(self):
        with pytest.raises(ValueError, match="coincide"):
            fit_scaling([(8, 1.0), (8, 0.5), (8, 0.25)])

    def test_record_validation(self):
        with pytest.raises(ValueError, match="stderr must be nonnegative"):
            ScalingFit(slope=1.0, intercept=0.0, stderr=-1.0, npoints=3, r2=0.5)
        with pytest.raises(ValueError, match="r2 must lie"):
            ScalingFit(slope=1.0, intercept=0.0, stderr=0.0, npoints=3, r2=1.5)


class TestPacketNorms:
    def test_modulated_packet_slope(self):
        # frequency-n oscillation under a width-n^delta envelope picks up
        # n^sigma from the modulation and n^{delta/2} from the dilation
        fit = packet_norm_check(1.45, 0.25, (16, 32, 64, 128, 256))
        assert fit.slope == pytest.approx(1.45 + 0.125, abs=0.05)
        assert fit.r2 > 0.999

    def test_phase_invariance(self):
        a = packet_norm_check(1.45, 0.25, (16, 32, 64), a=0.0)
        b = packet_norm_check(1.45, 0.25, (16, 32, 64), a=1.0)
        assert a.slope == pytest.approx(b.slope, abs=0.01)

    def test_envelope_inequality(self):
        rows = packet_inequality_check(1.45, 0.25, (8, 16, 32, 64))
        for n, lhs, rhs in rows:
            assert lhs <= rhs, f"n={n}: {lhs} > {rhs}"

    def test_envelope_inequality_sharpens(self):
        # the dilation bound loses sharpness for sigma > 0; ratio shrinks
        rows = packet_inequality_check(1.45, 0.25, (8, 64))
        ratios = [lhs / rhs for _, lhs, rhs in rows]
        assert ratios[1] < ratios[0]


@pytest.fixture(scope="module")
def fields():
    g = make_grid(128, 128, np.pi, np.pi)
    rng = np.random.default_rng(0)
    f = random_band_limited(g, 20, rng, tag="f")
    h = random_band_limited(g, 20, rng, tag="h")
    return g, f, h


class TestInequalities:
    def test_interpolation_bound(self, fields):
        _, f, h = fields
        for fld in (f, h):
            assert interpolation_check(fld, 1.45, 2.5, 3.0) <= 1.0 + 1e-10

    def test_interpolation_equality_single_mode(self):
        g = make_grid(64, 64, np.pi, np.pi)
        f = SpectralField.from_function(
            g, lambda x, y: np.cos(5 * x) * np.cos(2 * y))
        assert interpolation_check(f, 1.0, 2.0, 3.0) == pytest.approx(1.0, abs=1e-12)

    def test_interpolation_order_check(self, fields):
        _, f, _ = fields
        with pytest.raises(ValueError, match="need sigma < s < tau"):
            interpolation_check(f, 2.5, 1.45, 3.0)

    def test_commutator_bounded(self, fields):
        _, f, h = fields
        const = kato_ponce_check(f, h, 2.5)
        assert 0.0 < const < 100.0

    def test_commutator_rejects_zero(self, fields):
        g, f, _ = fields
        zero = SpectralField(g, physical=np.zeros((g.nx, g.ny)))
        with pytest.raises(ValueError, match="identically zero"):
            kato_ponce_check(f, zero, 2.5)

    def test_reciprocal_bounded(self, fields):
        g, f, h = fields
        scale = 0.2 / linf(h)
        damped = SpectralField(g, physical=scale * h.physical)
        const = reciprocal_check(f, damped, 1.0, 2.5)
        assert 0.0 < const < 100.0

    def test_reciprocal_floor(self, fields):
        g, f, h = fields
        # denominator dips under b/2 -> refused
        scale = 0.9 / linf(h)
        big = SpectralField(g, physical=scale * h.physical)
        with pytest.raises(ValueError, match="pointwise floor violated"):
            reciprocal_check(f, big, 1.0, 2.5)

    def test_reciprocal_needs_s_above_one(self, fields):
        g, f, h = fields
        with pytest.raises(ValueError, match="need s > 1"):
            reciprocal_check(f, h, 1.0, 0.5)

    def test_c1_norm(self):
        g = make_grid(64, 64, np.pi, np.pi)
        f = SpectralField.from_function(
            g, lambda x, y: np.sin(3 * x) * np.ones_like(y))
        assert c1_norm(f) == pytest.approx(3.0, rel=1e-6)


class TestRandomBandLimited:
    def test_reproducible(self):
        g = make_grid(64, 64, 1.0, 1.0)
        a = random_band_limited(g, 10, np.random.default_rng(42))
        b = random_band_limited(g, 10, np.random.default_rng(42))
        np.testing.assert_array_equal(a.physical, b.physical)

    def test_band_support(self):
        g = make_grid(64, 64, 1.0, 1.0)
        f = random_band_limited(g, 10, np.random.default_rng(1))
        c = np.abs(f.spectral)
        assert np.max(c[11:-10, :]) == 0.0
        assert np.max(c[:, 11:]) == 0.0

    def test_spectrum_survives_round_trip(self):
        # conjugate symmetry in the jy=0 column makes physical samples
        # reconstruct exactly the stored coefficients
        g = make_grid(64, 64, 1.0, 1.0)
        f = random_band_limited(g, 10, np.random.default_rng(7))
        back = SpectralField(g, physical=np.array(f.physical))
        assert np.max(np.abs(back.spectral - f.spectral)) < 1e-14

    def test_mode_range_guard(self):
        g = make_grid(64, 64, 1.0, 1.0)
        with pytest.raises(ValueError, match="out of range"):
            random_band_limited(g, 32, np.random.default_rng(0))


def test_write_fit_csv(tmp_path):
    path = tmp_path / "fits.csv"
    write_fit_csv(path, [
        FitRecord(check_name="packet", params="sigma=1.45", slope=1.575,
                  stderr=0.003, r2=0.9999, passed=True),
    ])
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["check_name", "params", "slope", "stderr", "r2", "pass"]
    assert rows[1][0] == "packet"
    assert float(rows[1][2]) == 1.575
    assert rows[1][5] == "true"
