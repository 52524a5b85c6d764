"""End-to-end checks of the command line interface.

Each command is run in-process through main() against small
configurations, and the written artifacts are parsed back and
compared with library-level results.
"""

import filecmp
import json
import math

import numpy as np
import pytest

from casimetry.cli import RunConfig, load_run_config, main
from casimetry.hypforce import load_constraint_csv
from casimetry.lifshitz import matsubara_frequency
from casimetry.metrology import load_ensemble_csv, theory_error_curve
from casimetry.optics import DrudeParameters, drude_permittivity

GOLD = DrudeParameters(omega_p=1.37e16, gamma=5.3e13)


def write_gold_table(path):
    """Synthetic n, k table sampled from the Drude loss function."""
    omega = np.logspace(12, 18, 361)
    im_eps = GOLD.omega_p ** 2 * GOLD.gamma / (
        omega * (omega ** 2 + GOLD.gamma ** 2))
    n = np.full_like(omega, 0.5)
    k = im_eps / (2.0 * n)
    lines = ["#unit: rad/s"]
    lines += [f"{o:.10e} {a:.10e} {b:.10e}" for o, a, b in zip(omega, n, k)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Parse a CLI CSV into (comments, column dict of float arrays)."""
    comments = []
    rows = []
    header = None
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows)
    return comments, {name: data[:, i] for i, name in enumerate(header)}


def config_hash_of(path):
    for line in path.read_text().splitlines():
        if line.startswith("# config_hash:"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"{path}: no config_hash comment")


class TestRunConfig:
    def test_file_sections_and_values(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[kk]\nl_max = 7\noptical_table = x.dat\n"
                       "[pressure]\nmodels = impedance, drude\n")
        cfg = load_run_config(ini)
        assert cfg.get_int("kk", "l_max") == 7
        assert cfg.get_list("pressure", "models") == ["impedance", "drude"]

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        ini = tmp_path / "run.ini"
        ini.write_text("[kk]\nl_max = 7\n")
        monkeypatch.setenv("CASIMETRY_KK_L_MAX", "11")
        cfg = load_run_config(ini)
        assert cfg.get_int("kk", "l_max") == 11

    def test_unrelated_env_ignored(self, monkeypatch):
        monkeypatch.setenv("CASIMETRY_NOTASECTION_KEY", "1")
        cfg = load_run_config(None)
        assert cfg.sections == {}

    def test_unknown_section_rejected(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[nonsense]\nx = 1\n")
        with pytest.raises(ValueError, match="unknown section"):
            load_run_config(ini)

    def test_missing_required_key(self):
        cfg = RunConfig()
        with pytest.raises(ValueError, match="kk.optical_table"):
            cfg.get("kk", "optical_table", required=True)

    def test_bad_number(self):
        cfg = RunConfig()
        cfg.set("pressure", "z_min_m", "tiny")
        with pytest.raises(ValueError, match="not a number"):
            cfg.get_float("pressure", "z_min_m")

    def test_missing_path(self):
        cfg = RunConfig()
        cfg.set("kk", "optical_table", "/no/such/file.dat")
        with pytest.raises(ValueError, match="no such file"):
            cfg.get_path("kk", "optical_table")

    def test_hash_ignores_declaration_order(self, tmp_path):
        a = tmp_path / "a.ini"
        b = tmp_path / "b.ini"
        a.write_text("[kk]\nl_max = 7\ntemperature_K = 300\n")
        b.write_text("[kk]\ntemperature_K = 300\nl_max = 7\n")
        assert load_run_config(a).hash() == load_run_config(b).hash()

    def test_hash_tracks_values(self):
        cfg = RunConfig()
        cfg.set("kk", "l_max", "7")
        h1 = cfg.hash()
        cfg.set("kk", "l_max", "8")
        assert cfg.hash() != h1


@pytest.fixture(scope="module")
def kk_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("kk")
    write_gold_table(root / "gold.dat")
    ini = root / "run.ini"
    ini.write_text(f"[kk]\noptical_table = {root / 'gold.dat'}\nl_max = 40\n")
    out = root / "out"
    assert main(["kk", "--config", str(ini), "--out", str(out)]) == 0
    return out


class TestKkCommand:
    def test_grid_is_positive_matsubara(self, kk_run):
        _, cols = read_csv(kk_run / "dispersion.csv")
        xi = cols["xi_rad_s"]
        assert len(xi) == 40
        expected = [matsubara_frequency(300.0, l) for l in range(1, 41)]
        # CSV keeps 11 significant digits
        assert xi == pytest.approx(expected, rel=1e-9)
        # the static l = 0 term never appears
        assert xi[0] > 0

    def test_matches_drude_closed_form(self, kk_run):
        _, cols = read_csv(kk_run / "dispersion.csv")
        expected = drude_permittivity(GOLD, cols["xi_rad_s"])
        assert cols["epsilon"] == pytest.approx(expected, rel=5e-3)

    def test_header_comments(self, kk_run):
        comments, _ = read_csv(kk_run / "dispersion.csv")
        text = "\n".join(comments)
        assert "config_hash" in text and "constants_version" in text

    def test_empty_grid_is_an_error(self, tmp_path, capsys):
        write_gold_table(tmp_path / "gold.dat")
        ini = tmp_path / "run.ini"
        ini.write_text(f"[kk]\noptical_table = {tmp_path / 'gold.dat'}\n"
                       "l_max = 0\n")
        assert main(["kk", "--config", str(ini),
                     "--out", str(tmp_path)]) == 1
        assert "l_max" in capsys.readouterr().err

    def test_missing_table_is_an_error(self, tmp_path, capsys):
        assert main(["kk", "--out", str(tmp_path)]) == 1
        assert "optical_table" in capsys.readouterr().err


@pytest.fixture(scope="module")
def pressure_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("pressure")
    ini = root / "run.ini"
    ini.write_text("[pressure]\nmodels = impedance, drude\n"
                   "z_min_m = 160e-9\nz_max_m = 750e-9\nz_points = 3\n")
    out = root / "out"
    assert main(["pressure", "--config", str(ini), "--out", str(out)]) == 0
    return out


class TestPressureCommand:
    def test_models_share_the_grid(self, pressure_run):
        _, imp = read_csv(pressure_run / "pressure_impedance.csv")
        _, dru = read_csv(pressure_run / "pressure_drude.csv")
        assert np.array_equal(imp["z_m"], dru["z_m"])

    def test_engine_anchor_at_160nm(self, pressure_run):
        _, imp = read_csv(pressure_run / "pressure_impedance.csv")
        assert imp["z_m"][0] == pytest.approx(160e-9, rel=1e-12)
        assert imp["pressure_Pa"][0] == pytest.approx(-1.10008407, rel=1e-6)

    def test_error_column_matches_library(self, pressure_run):
        _, imp = read_csv(pressure_run / "pressure_impedance.csv")
        expected = theory_error_curve(imp["z_m"])
        assert imp["rel_theory_error"] == pytest.approx(expected, rel=1e-9)

    def test_ideal_metal_near_zero_temperature(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[pressure]\nmodels = ideal\ntemperature_K = 1\n"
                       "z_min_m = 1e-6\nz_max_m = 1e-6\nz_points = 1\n")
        assert main(["pressure", "--config", str(ini),
                     "--out", str(tmp_path)]) == 0
        _, cols = read_csv(tmp_path / "pressure_ideal.csv")
        assert cols["pressure_Pa"][0] == pytest.approx(-1.300e-3, rel=1e-3)
        assert cols["pressure_Pa"][0] == pytest.approx(-1.30012600e-3,
                                                       rel=1e-6)

    def test_roughness_shifts_pressure_only(self, tmp_path):
        hist = tmp_path / "rough.dat"
        # symmetric two-point histogram, 4 nm amplitude
        hist.write_text("-4.0 1.0\n4.0 1.0\n")
        base = ("[pressure]\nmodels = impedance\n"
                "z_min_m = 200e-9\nz_max_m = 400e-9\nz_points = 3\n")
        smooth_ini = tmp_path / "smooth.ini"
        smooth_ini.write_text(base)
        rough_ini = tmp_path / "rough.ini"
        rough_ini.write_text(base + f"roughness_a = {hist}\n"
                                    f"roughness_b = {hist}\n")
        out_s = tmp_path / "smooth"
        out_r = tmp_path / "rough"
        assert main(["pressure", "--config", str(smooth_ini),
                     "--out", str(out_s)]) == 0
        assert main(["pressure", "--config", str(rough_ini),
                     "--out", str(out_r)]) == 0
        _, s = read_csv(out_s / "pressure_impedance.csv")
        _, r = read_csv(out_r / "pressure_impedance.csv")
        assert np.array_equal(s["z_m"], r["z_m"])
        assert np.array_equal(s["rel_theory_error"], r["rel_theory_error"])
        # roughness strengthens the attraction at every separation
        assert np.all(r["pressure_Pa"] < s["pressure_Pa"])

    def test_unknown_model_is_an_error(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[pressure]\nmodels = casimir\nz_points = 1\n")
        assert main(["pressure", "--config", str(ini),
                     "--out", str(tmp_path)]) == 1
        assert "unknown model" in capsys.readouterr().err


@pytest.fixture(scope="module")
def exclusion_run(tmp_path_factory):
    """Small but complete run: generator plus one rival model."""
    root = tmp_path_factory.mktemp("exclusion")
    ini = root / "run.ini"
    ini.write_text("[exclusion]\ntested = impedance, drude\n"
                   "n_sets = 4\npoints_per_set = 80\n")
    out = root / "out"
    assert main(["exclusion", "--config", str(ini), "--out", str(out)]) == 0
    return root, ini, out


class TestExclusionCommand:
    def test_artifact_set(self, exclusion_run):
        _, _, out = exclusion_run
        for name in ("ensemble.csv", "verdicts.json",
                     "band_impedance.csv", "band_drude.csv",
                     "differences_impedance.csv", "differences_drude.csv"):
            assert (out / name).exists(), name

    def test_verdict_payload(self, exclusion_run):
        _, _, out = exclusion_run
        payload = json.loads((out / "verdicts.json").read_text())
        assert payload["constants_version"]
        assert payload["generator"] == "impedance"
        assert payload["seed"] == 7
        verdicts = payload["verdicts"]
        assert set(verdicts) == {"impedance", "drude"}
        for v in verdicts.values():
            assert v["n_points"] == 4 * 80
            assert 0.0 <= v["fraction_outside"] <= 1.0

    def test_hash_consistent_across_artifacts(self, exclusion_run):
        _, _, out = exclusion_run
        payload = json.loads((out / "verdicts.json").read_text())
        assert config_hash_of(out / "ensemble.csv") == payload["config_hash"]
        assert config_hash_of(out / "band_drude.csv") == payload["config_hash"]

    def test_byte_identical_rerun(self, exclusion_run):
        root, ini, out = exclusion_run
        out2 = root / "out2"
        assert main(["exclusion", "--config", str(ini),
                     "--out", str(out2)]) == 0
        for name in ("ensemble.csv", "verdicts.json", "band_impedance.csv",
                     "differences_drude.csv"):
            assert filecmp.cmp(out / name, out2 / name, shallow=False), name

    def test_seed_flag_changes_data(self, exclusion_run):
        root, ini, out = exclusion_run
        out3 = root / "out3"
        assert main(["exclusion", "--config", str(ini), "--seed", "8",
                     "--out", str(out3)]) == 0
        assert not filecmp.cmp(out / "ensemble.csv", out3 / "ensemble.csv",
                               shallow=False)

    def test_ensemble_round_trip(self, exclusion_run):
        _, _, out = exclusion_run
        ensemble = load_ensemble_csv(out / "ensemble.csv")
        assert ensemble.n_points == 4 * 80
        assert len(ensemble.sets) == 4

    def test_differences_cover_every_point(self, exclusion_run):
        _, _, out = exclusion_run
        _, cols = read_csv(out / "differences_drude.csv")
        assert len(cols["z_m"]) == 4 * 80

    def test_band_has_confidence_comment(self, exclusion_run):
        _, _, out = exclusion_run
        comments, cols = read_csv(out / "band_impedance.csv")
        assert any("confidence = 0.95" in c for c in comments)
        assert np.all(cols["half_width_Pa"] > 0)

    def test_zero_noise_reproduces_the_generator(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[exclusion]\ntested = impedance, drude\n"
                       "noise = none\nn_sets = 2\npoints_per_set = 60\n")
        out = tmp_path / "out"
        assert main(["exclusion", "--config", str(ini),
                     "--out", str(out)]) == 0
        payload = json.loads((out / "verdicts.json").read_text())
        imp = payload["verdicts"]["impedance"]
        assert imp["fraction_outside"] == 0.0
        assert imp["accepted"] is True
        # the rival model still misses the noiseless data
        assert payload["verdicts"]["drude"]["fraction_outside"] > 0.5

    def test_bad_noise_mode(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[exclusion]\nnoise = gaussian\n")
        assert main(["exclusion", "--config", str(ini),
                     "--out", str(tmp_path)]) == 1
        assert "noise" in capsys.readouterr().err

    def test_bad_confidence(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[exclusion]\nconfidence = 0.9\n"
                       "n_sets = 2\npoints_per_set = 40\n")
        assert main(["exclusion", "--config", str(ini),
                     "--out", str(tmp_path)]) == 1
        assert "confidence" in capsys.readouterr().err


class TestConstraintsCommand:
    def test_from_exclusion_band(self, exclusion_run, tmp_path):
        _, _, out = exclusion_run
        ini = tmp_path / "run.ini"
        ini.write_text("[constraints]\n"
                       f"band_file = {out / 'band_impedance.csv'}\n"
                       "lambda_min_m = 40e-9\nlambda_max_m = 370e-9\n"
                       "lambda_points = 6\n")
        cdir = tmp_path / "c"
        assert main(["constraints", "--config", str(ini),
                     "--out", str(cdir)]) == 0
        curve = load_constraint_csv(cdir / "constraints.csv")
        assert len(curve.lambdas) == 6
        assert np.all(np.diff(curve.alpha_max) < 0)

    def test_uniform_band_matches_legacy_noise_level(self, tmp_path):
        z = np.geomspace(160e-9, 750e-9, 40)
        band = tmp_path / "band.csv"
        band.write_text("z_m,half_width_Pa\n" + "\n".join(
            f"{v:.10e},{2e-3:.10e}" for v in z) + "\n")
        base = ("lambda_min_m = 50e-9\nlambda_max_m = 300e-9\n"
                "lambda_points = 5\n")
        ini_band = tmp_path / "band.ini"
        ini_band.write_text(f"[constraints]\nband_file = {band}\n" + base)
        ini_rms = tmp_path / "rms.ini"
        ini_rms.write_text("[constraints]\nsigma_Pa = 2e-3\n"
                           "z_min_m = 160e-9\nz_max_m = 750e-9\n"
                           "z_points = 40\n" + base)
        out_band = tmp_path / "ob"
        out_rms = tmp_path / "or"
        assert main(["constraints", "--config", str(ini_band),
                     "--out", str(out_band)]) == 0
        assert main(["constraints", "--config", str(ini_rms),
                     "--out", str(out_rms)]) == 0
        a = load_constraint_csv(out_band / "constraints.csv")
        b = load_constraint_csv(out_rms / "constraints.csv")
        assert a.alpha_max == pytest.approx(b.alpha_max, rel=1e-9)

    def test_single_lambda_row(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[constraints]\nsigma_Pa = 1e-3\n"
                       "lambda_min_m = 100e-9\nlambda_max_m = 100e-9\n"
                       "lambda_points = 1\nz_points = 20\n")
        assert main(["constraints", "--config", str(ini),
                     "--out", str(tmp_path)]) == 0
        curve = load_constraint_csv(tmp_path / "constraints.csv")
        assert len(curve.lambdas) == 1
        assert curve.lambdas[0] == pytest.approx(100e-9)

    def test_reference_overlay_ratio_is_unity(self, tmp_path):
        ini = tmp_path / "a.ini"
        cfg = ("[constraints]\nsigma_Pa = 1e-3\n"
               "lambda_min_m = 60e-9\nlambda_max_m = 200e-9\n"
               "lambda_points = 4\nz_points = 20\n")
        ini.write_text(cfg)
        out_a = tmp_path / "a"
        assert main(["constraints", "--config", str(ini),
                     "--out", str(out_a)]) == 0
        ini_b = tmp_path / "b.ini"
        ini_b.write_text(cfg +
                         f"reference_curve = {out_a / 'constraints.csv'}\n")
        out_b = tmp_path / "b"
        assert main(["constraints", "--config", str(ini_b),
                     "--out", str(out_b)]) == 0
        _, cols = read_csv(out_b / "overlay.csv")
        assert cols["ratio"] == pytest.approx(np.ones(4), rel=1e-6)

    def test_needs_band_or_sigma(self, tmp_path, capsys):
        assert main(["constraints", "--out", str(tmp_path)]) == 1
        assert "band_file or sigma_Pa" in capsys.readouterr().err
