"""Tests for the hypothetical-force layer.

The closed-form plate pressure is checked against an independent
brute-force depth integration, against analytic limiting cases, and
the constraint inversion against exact linearity and monotonicity
properties.
"""

import math
import warnings

import numpy as np
import pytest

from casimetry import hypforce as hf
from casimetry.constants import G_NEWTON
from casimetry.metrology import ConfidenceBand


@pytest.fixture(scope="module")
def stacks():
    return hf.coated_sphere_stack(), hf.coated_plate_stack()


@pytest.fixture(scope="module")
def powerlaw_band():
    z = np.geomspace(160e-9, 750e-9, 40)
    return ConfidenceBand(z, 2e-3 * (z / 3e-7) ** -3.3, 0.95)


class TestPointPotential:

    def test_newtonian_when_strength_off(self):
        got = hf.yukawa_point_potential(2.0, 3.0, 0.5,
                                        hf.YukawaParams(0.0, 1e-7))
        assert got == pytest.approx(-G_NEWTON * 6.0 / 0.5, rel=1e-12)

    def test_separation_equal_to_range(self):
        lam = 0.25
        got = hf.yukawa_point_potential(1.0, 1.0, lam,
                                        hf.YukawaParams(1.0, lam))
        expected = -G_NEWTON / lam * (1.0 + math.exp(-1.0))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_unit_configuration_value(self):
        got = hf.yukawa_point_potential(1.0, 1.0, 1.0,
                                        hf.YukawaParams(1.0, 1.0))
        assert got == pytest.approx(-9.1292274e-11, rel=1e-6)

    def test_invalid_separation(self):
        with pytest.raises(ValueError):
            hf.yukawa_point_potential(1.0, 1.0, 0.0, hf.YukawaParams(1.0, 1.0))


class TestDensityFactor:

    def test_short_range_sees_surface(self, stacks):
        sphere, _ = stacks
        assert hf.density_factor(sphere, 1e-9) == pytest.approx(
            hf.DENSITY_AU, rel=1e-12)

    def test_long_range_sees_substrate(self, stacks):
        sphere, plate = stacks
        assert hf.density_factor(sphere, 1e-2) == pytest.approx(
            hf.DENSITY_SAPPHIRE, rel=1e-3)
        assert hf.density_factor(plate, 1e-2) == pytest.approx(
            hf.DENSITY_SI, rel=1e-3)

    def test_homogeneous_is_density(self):
        gold = hf.LayerStack.homogeneous(hf.DENSITY_AU)
        for lam in (1e-9, 1e-7, 1e-3):
            assert hf.density_factor(gold, lam) == hf.DENSITY_AU

    def test_buried_layer_removal_is_attenuated(self, stacks):
        # dropping the Ti adhesion layer changes phi by at most the
        # density step attenuated through the 200 nm gold above it
        sphere, _ = stacks
        bare = hf.LayerStack((hf.Layer(hf.DENSITY_AU, 200e-9),
                              hf.Layer(hf.DENSITY_SAPPHIRE, math.inf)))
        for lam in (50e-9, 150e-9, 400e-9):
            delta = hf.density_factor(sphere, lam) - hf.density_factor(
                bare, lam)
            bound = (hf.DENSITY_TI - hf.DENSITY_SAPPHIRE) * math.exp(
                -200e-9 / lam)
            assert 0.0 < delta <= bound * (1 + 1e-12)


class TestPlatePressure:

    def test_homogeneous_gold_value(self):
        gold = hf.LayerStack.homogeneous(hf.DENSITY_AU)
        got = hf.yukawa_plate_pressure(gold, gold, 200e-9,
                                       hf.YukawaParams(1.0, 100e-9))
        assert got == pytest.approx(-2.1095565e-16, rel=1e-6)
        assert got == pytest.approx(-2.11e-16, rel=5e-3)

    def test_closed_form_structure(self, stacks):
        # doubling alpha doubles the pressure; range enters through
        # lam^2 exp(-z/lam) and the density factors only
        sphere, plate = stacks
        p1 = hf.yukawa_plate_pressure(sphere, plate, 300e-9,
                                      hf.YukawaParams(1.0, 150e-9))
        p2 = hf.yukawa_plate_pressure(sphere, plate, 300e-9,
                                      hf.YukawaParams(2.0, 150e-9))
        assert p2 == pytest.approx(2 * p1, rel=1e-12)
        assert p1 < 0

    def test_zero_strength(self, stacks):
        sphere, plate = stacks
        prm = hf.YukawaParams(0.0, 100e-9)
        assert hf.yukawa_plate_pressure(sphere, plate, 300e-9, prm) == 0.0
        assert hf.yukawa_pressure_oracle(sphere, plate, 300e-9, prm) == 0.0

    def test_oracle_matches_homogeneous(self):
        gold = hf.LayerStack.homogeneous(hf.DENSITY_AU)
        prm = hf.YukawaParams(1.0, 100e-9)
        c = hf.yukawa_plate_pressure(gold, gold, 200e-9, prm)
        o = hf.yukawa_pressure_oracle(gold, gold, 200e-9, prm)
        assert o == pytest.approx(c, rel=1e-9)

    def test_oracle_matches_coated_stacks(self, stacks):
        sphere, plate = stacks
        prm = hf.YukawaParams(1.0, 150e-9)
        c = hf.yukawa_plate_pressure(sphere, plate, 200e-9, prm)
        o = hf.yukawa_pressure_oracle(sphere, plate, 200e-9, prm)
        assert o == pytest.approx(c, rel=1e-9)

    def test_oracle_agreement_over_grid(self, stacks):
        sphere, plate = stacks
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for z in np.geomspace(160e-9, 750e-9, 10):
                for lam in np.geomspace(10e-9, 1e-6, 10):
                    prm = hf.YukawaParams(1.0, float(lam))
                    c = hf.yukawa_plate_pressure(sphere, plate, float(z), prm)
                    o = hf.yukawa_pressure_oracle(sphere, plate, float(z), prm)
                    assert o == pytest.approx(c, rel=1e-8)

    def test_long_range_warns(self, stacks):
        sphere, plate = stacks
        with pytest.warns(UserWarning, match="plate extent"):
            hf.yukawa_plate_pressure(sphere, plate, 300e-9,
                                     hf.YukawaParams(1.0, 800e-9))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            hf.yukawa_plate_pressure(sphere, plate, 300e-9,
                                     hf.YukawaParams(1.0, 650e-9))

    def test_invalid_separation(self, stacks):
        sphere, plate = stacks
        with pytest.raises(ValueError):
            hf.yukawa_plate_pressure(sphere, plate, -1e-9,
                                     hf.YukawaParams(1.0, 1e-7))


class TestStackValidation:

    def test_terminal_layer_must_be_infinite(self):
        with pytest.raises(ValueError, match="semi-infinite"):
            hf.LayerStack((hf.Layer(1e3, 1e-7),))

    def test_only_terminal_layer_infinite(self):
        with pytest.raises(ValueError, match="terminal"):
            hf.LayerStack((hf.Layer(1e3, math.inf),
                           hf.Layer(2e3, math.inf)))

    def test_positive_properties(self):
        with pytest.raises(ValueError):
            hf.Layer(-1e3, 1e-7)
        with pytest.raises(ValueError):
            hf.Layer(1e3, 0.0)
        with pytest.raises(ValueError):
            hf.LayerStack(())
        with pytest.raises(ValueError):
            hf.YukawaParams(1.0, 0.0)


class TestConstraintCurve:

    def test_band_scaling_is_exact(self, stacks, powerlaw_band):
        sphere, plate = stacks
        lams = np.geomspace(40e-9, 370e-9, 8)
        base = hf.constraint_curve(powerlaw_band, sphere, plate, lams)
        doubled_band = ConfidenceBand(powerlaw_band.z,
                                      2 * powerlaw_band.half_width, 0.95)
        doubled = hf.constraint_curve(doubled_band, sphere, plate, lams)
        np.testing.assert_allclose(doubled.alpha_max, 2 * base.alpha_max,
                                   rtol=1e-12)
        np.testing.assert_allclose(doubled.z_best, base.z_best, rtol=1e-12)

    def test_monotone_trends(self, stacks, powerlaw_band):
        sphere, plate = stacks
        lams = np.geomspace(40e-9, 370e-9, 12)
        cur = hf.constraint_curve(powerlaw_band, sphere, plate, lams)
        assert np.all(np.diff(cur.alpha_max) < 0)
        assert np.all(np.diff(cur.z_best) >= -1e-12)

    def test_minimizer_moves_into_interior(self, stacks, powerlaw_band):
        # short ranges are best constrained at the closest separation;
        # longer ranges move the optimum into the scan interior
        sphere, plate = stacks
        cur = hf.constraint_curve(powerlaw_band, sphere, plate,
                                  [40e-9, 100e-9])
        assert cur.z_best[0] == pytest.approx(160e-9, rel=1e-3)
        assert cur.z_best[1] > 200e-9

    def test_grid_refinement_stable(self, stacks, powerlaw_band):
        sphere, plate = stacks
        lams = np.geomspace(40e-9, 370e-9, 6)
        a = hf.constraint_curve(powerlaw_band, sphere, plate, lams)
        b = hf.constraint_curve(powerlaw_band, sphere, plate, lams,
                                coarse_points=240)
        np.testing.assert_allclose(b.alpha_max, a.alpha_max, rtol=1e-2)

    def test_legacy_uniform_band_coincides(self, stacks):
        sphere, plate = stacks
        z = np.geomspace(160e-9, 750e-9, 60)
        lams = np.geomspace(40e-9, 370e-9, 6)
        uniform = ConfidenceBand(z, np.full_like(z, 5e-4), 0.95)
        a = hf.constraint_curve(uniform, sphere, plate, lams)
        b = hf.legacy_rms_constraint(5e-4, sphere, plate, z, lams)
        np.testing.assert_allclose(b.alpha_max, a.alpha_max, rtol=1e-12)
        np.testing.assert_allclose(b.z_best, a.z_best, rtol=1e-12)

    def test_legacy_linear_in_sigma(self, stacks):
        sphere, plate = stacks
        z = np.geomspace(160e-9, 750e-9, 30)
        lams = [60e-9, 150e-9]
        a = hf.legacy_rms_constraint(5e-4, sphere, plate, z, lams)
        b = hf.legacy_rms_constraint(5e-3, sphere, plate, z, lams)
        np.testing.assert_allclose(b.alpha_max, 10 * a.alpha_max, rtol=1e-12)

    def test_band_method_dominates_flat_worst_case(self, stacks,
                                                   powerlaw_band):
        sphere, plate = stacks
        lams = np.geomspace(40e-9, 370e-9, 6)
        banded = hf.constraint_curve(powerlaw_band, sphere, plate, lams)
        flat = hf.legacy_rms_constraint(
            float(powerlaw_band.half_width.max()), sphere, plate,
            powerlaw_band.z, lams)
        assert np.all(banded.alpha_max <= flat.alpha_max * (1 + 1e-12))

    def test_interpolation(self, stacks, powerlaw_band):
        sphere, plate = stacks
        lams = np.geomspace(40e-9, 370e-9, 8)
        cur = hf.constraint_curve(powerlaw_band, sphere, plate, lams)
        assert cur.alpha_at(float(lams[3])) == pytest.approx(
            cur.alpha_max[3], rel=1e-12)
        mid = math.sqrt(lams[3] * lams[4])
        lo, hi = sorted((cur.alpha_max[3], cur.alpha_max[4]))
        assert lo < cur.alpha_at(mid) < hi

    def test_validation(self, stacks, powerlaw_band):
        sphere, plate = stacks
        with pytest.raises(ValueError):
            hf.constraint_curve(powerlaw_band, sphere, plate, [])
        with pytest.raises(ValueError):
            hf.constraint_curve(powerlaw_band, sphere, plate, [-1e-9])
        with pytest.raises(ValueError, match="increasing"):
            hf.ConstraintCurve(((2e-7, 1.0, 2e-7), (1e-7, 2.0, 2e-7)))
        with pytest.raises(ValueError, match="positive"):
            hf.ConstraintCurve(((1e-7, 0.0, 2e-7),))


class TestFileFormats:

    def test_stack_round_trip(self, tmp_path, stacks):
        sphere, _ = stacks
        path = tmp_path / "stack.txt"
        path.write_text("# sphere coating\n"
                        "19.28e3 200\n"
                        "4.51e3 10\n"
                        "4.1e3 inf\n")
        loaded = hf.load_layer_stack(path)
        assert len(loaded.layers) == 3
        for got, want in zip(loaded.layers, sphere.layers):
            assert got.density == pytest.approx(want.density)
            assert got.thickness == pytest.approx(want.thickness)

    def test_stack_errors(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("19.28e3 200 77\n")
        with pytest.raises(ValueError, match="bad.txt:1"):
            hf.load_layer_stack(bad)
        empty = tmp_path / "empty.txt"
        empty.write_text("# nothing\n")
        with pytest.raises(ValueError, match="no layers"):
            hf.load_layer_stack(empty)

    def test_constraint_csv_round_trip(self, tmp_path, stacks,
                                       powerlaw_band):
        sphere, plate = stacks
        cur = hf.constraint_curve(powerlaw_band, sphere, plate,
                                  np.geomspace(40e-9, 370e-9, 5))
        path = tmp_path / "constraints.csv"
        hf.save_constraint_csv(cur, path)
        back = hf.load_constraint_csv(path)
        np.testing.assert_allclose(back.lambdas, cur.lambdas, rtol=1e-9)
        np.testing.assert_allclose(back.alpha_max, cur.alpha_max, rtol=1e-9)
        np.testing.assert_allclose(back.z_best, cur.z_best, rtol=1e-9)

    def test_constraint_csv_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("lambda,alpha\n1e-7,1.0\n")
        with pytest.raises(ValueError, match="header"):
            hf.load_constraint_csv(path)
