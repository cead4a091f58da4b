"""Command-line plumbing: run layout, exit codes, reproducibility.

Physics-level agreement between the pipelines is covered by the module
tests; here the assertions stop at what the CLI adds on top: flag
resolution, file layout, failure signaling, and byte determinism.
"""

import math

import numpy as np
import pytest

from sqcat import io
from sqcat.cli import build_parser, main

pytestmark = pytest.mark.filterwarnings("ignore")


def run(*argv):
    return main([str(a) for a in argv])


def small_state_config(tmp_path):
    """Config keeping tomography-heavy commands cheap."""
    path = tmp_path / "small.json"
    io.write_json(path, {"cavity_dim": 30})
    return path


class TestParser:
    def test_all_subcommands_present(self):
        parser = build_parser()
        actions = [a for a in parser._actions
                   if hasattr(a, "choices") and a.choices]
        names = set(actions[0].choices)
        assert names == {"compress", "cat", "charfun", "wigner", "decay",
                         "parity", "sweep", "budget", "optimize",
                         "calibrate"}

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run()
        assert err.value.code == 2


class TestRunLayout:
    def test_compress_writes_the_standard_files(self, tmp_path):
        out = tmp_path / "run"
        assert run("compress", "--out", out) == 0
        for name in ("config.json", "series.csv", "summary.json"):
            assert (out / name).exists()
        summary = io.read_json(out / "summary.json")
        assert summary["failed"] is False
        assert summary["command"] == "compress"

    def test_config_json_records_resolved_run(self, tmp_path):
        out = tmp_path / "run"
        run("compress", "--out", out, "--level", "-3", "--seed", "7")
        config = io.read_json(out / "config.json")
        assert config["seed"] == 7
        assert config["device"]["t1_cavity"] == 260e-6
        assert config["parameters"]["schedule"]["target_db"] == -3.0

    def test_series_csv_has_header_row(self, tmp_path):
        out = tmp_path / "run"
        run("compress", "--out", out)
        first = (out / "series.csv").read_text().split("\n")[0]
        assert first == "step,u,v"


class TestCompress:
    def test_preset_reaches_its_expected_levels(self, tmp_path):
        out = tmp_path / "run"
        assert run("compress", "--out", out, "--level", "-6") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["achieved_db_x"] == pytest.approx(-5.93, abs=0.3)
        assert summary["achieved_db_p"] == pytest.approx(5.71, abs=0.3)

    def test_config_schedule_overrides_level(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        io.write_json(cfg, {"schedule": {
            "target_db": -3.0, "variant": "compress-then-displace",
            "steps": [{"u": 1.39, "v": 0.51}, {"u": -0.2, "v": -0.46},
                      {"u": -0.32, "v": -0.65}]}})
        out = tmp_path / "run"
        assert run("compress", "--out", out, "--config", cfg,
                   "--level", "-7") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["target_db"] == -3.0
        assert summary["achieved_db_x"] == pytest.approx(-2.98, abs=0.3)

    def test_optional_grid_emission(self, tmp_path):
        out = tmp_path / "run"
        cfg = small_state_config(tmp_path)
        run("compress", "--out", out, "--config", cfg,
            "--grid=-3:3:31")
        re_axis, im_axis, vals = io.read_grid_csv(out / "char_grid.csv")
        assert vals.shape == (31, 31)
        assert abs(vals[15, 15]) == pytest.approx(1.0, abs=1e-9)


class TestCat:
    def test_projection_summary(self, tmp_path):
        out = tmp_path / "run"
        assert run("cat", "--out", out, "--label", "-3",
                   "--outcome", "e") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["outcome"] == "e"
        assert summary["outcome_probability"] == pytest.approx(0.5,
                                                               abs=0.05)
        assert summary["parity"] == pytest.approx(-1.0, abs=5e-3)

    def test_schedule_without_final_v_fails_cleanly(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        io.write_json(cfg, {"schedule": {
            "target_db": -3.0, "variant": "compress-then-displace",
            "steps": [{"u": 1.39, "v": 0.51}]}})
        out = tmp_path / "run"
        assert run("cat", "--out", out, "--config", cfg) == 2
        summary = io.read_json(out / "summary.json")
        assert summary["failed"] is True
        assert "final_v" in summary["error"]


class TestCharfun:
    def test_grid_round_trip_and_parity(self, tmp_path):
        # the plain cat needs about nu0 + 3.4 of axis for its blobs to
        # decay under the coverage threshold, hence the wide grid
        out = tmp_path / "run"
        assert run("charfun", "--out", out, "--grid=-7:7:141") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["parity_estimate"] == pytest.approx(-1.0, abs=0.01)
        re_axis, im_axis, vals = io.read_grid_csv(out / "char_grid.csv")
        assert vals.shape == (141, 141)
        assert vals[70, 70].real == pytest.approx(1.0, abs=1e-9)

    def test_tight_grid_skips_parity_and_warns(self, tmp_path):
        out = tmp_path / "run"
        assert run("charfun", "--out", out, "--grid=-2:2:41") == 0
        summary = io.read_json(out / "summary.json")
        assert "parity_estimate" not in summary
        assert summary["edge_max"] > 0.05
        assert summary["warnings"]

    def test_config_state_mapping(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        io.write_json(cfg, {"cavity_dim": 20,
                            "state": {"kind": "coherent",
                                      "alpha": {"re": 1.0, "im": 0.0}}})
        out = tmp_path / "run"
        assert run("charfun", "--out", out, "--config", cfg,
                   "--grid=-4:4:81") == 0
        re_axis, im_axis, vals = io.read_grid_csv(out / "char_grid.csv")
        # coherent-state characteristic magnitude is the displaced vacuum
        expected = math.exp(-0.5)
        j = np.argmin(np.abs(re_axis - 1.0))
        i = np.argmin(np.abs(im_axis))
        assert abs(vals[i, j]) == pytest.approx(expected, rel=0.05)


class TestWigner:
    def test_odd_cat_origin_is_negative(self, tmp_path):
        out = tmp_path / "run"
        cfg = small_state_config(tmp_path)
        assert run("wigner", "--out", out, "--config", cfg,
                   "--alpha", "1.4") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["origin_value"] < -0.4
        assert summary["integral"] == pytest.approx(1.0, abs=0.05)
        assert (out / "wigner_grid.csv").exists()


class TestDecay:
    def test_plain_cat_lifetime_and_band(self, tmp_path):
        out = tmp_path / "run"
        assert run("decay", "--out", out, "--bootstrap", "25") == 0
        summary = io.read_json(out / "summary.json")
        tau = summary["tau"]
        assert 35e-6 < tau < 49e-6
        assert summary["band_low"] < tau < summary["band_high"]
        assert summary["fit"]["offset_mode"] == "free"
        cols = io.read_series_csv(out / "series.csv")
        assert list(cols) == ["time", "amplitude", "center"]
        assert cols["time"].size == 16

    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run("decay", "--out", out1, "--bootstrap", "25", "--seed", "3")
        run("decay", "--out", out2, "--bootstrap", "25", "--seed", "3")
        for name in ("config.json", "series.csv", "summary.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_reaches_the_bootstrap(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run("decay", "--out", out1, "--bootstrap", "25", "--seed", "1")
        run("decay", "--out", out2, "--bootstrap", "25", "--seed", "2")
        fit1 = io.read_json(out1 / "summary.json")["fit"]
        fit2 = io.read_json(out2 / "summary.json")["fit"]
        assert fit1["tau"] == fit2["tau"]
        assert fit1["tau_stderr"] != fit2["tau_stderr"]

    def test_vacuum_input_exits_2_with_flag(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        io.write_json(cfg, {"state": {"kind": "vacuum"},
                            "cavity_dim": 20})
        out = tmp_path / "run"
        assert run("decay", "--out", out, "--config", cfg) == 2
        summary = io.read_json(out / "summary.json")
        assert summary["failed"] is True
        assert "blob" in summary["error"]

    def test_short_scan_notes_missing_band(self, tmp_path):
        out = tmp_path / "run"
        assert run("decay", "--out", out, "--times", "0:50e-6:8",
                   "--bootstrap", "0") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["band_low"] is None
        assert "band_note" in summary

    def test_device_override_scales_lifetime(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        io.write_json(cfg, {"device": {"t1_cavity": 130e-6}})
        out = tmp_path / "run"
        run("decay", "--out", out, "--config", cfg, "--bootstrap", "0")
        tau = io.read_json(out / "summary.json")["tau"]
        assert 0.4 * 41.6e-6 < tau < 0.6 * 41.6e-6
        config = io.read_json(out / "config.json")
        assert config["device"]["t1_cavity"] == 130e-6


class TestParity:
    def test_series_columns_and_summary(self, tmp_path):
        cfg = small_state_config(tmp_path)
        out = tmp_path / "run"
        assert run("parity", "--out", out, "--config", cfg,
                   "--alpha", "1.2", "--times", "0:60e-6:7",
                   "--shots", "200", "--bootstrap", "0") == 0
        cols = io.read_series_csv(out / "series.csv")
        assert list(cols) == ["times", "parity", "parity_measured",
                              "parity_sampled"]
        summary = io.read_json(out / "summary.json")
        assert summary["initial_parity"] == pytest.approx(-1.0, abs=0.01)

    def test_sampled_column_is_seed_deterministic(self, tmp_path):
        cfg = small_state_config(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            run("parity", "--out", out, "--config", cfg,
                "--alpha", "1.2", "--times", "0:60e-6:7",
                "--shots", "200", "--bootstrap", "0", "--seed", "5")
        assert (out1 / "series.csv").read_bytes() == \
            (out2 / "series.csv").read_bytes()

    def test_lindblad_mode_runs(self, tmp_path):
        cfg = small_state_config(tmp_path)
        out = tmp_path / "run"
        assert run("parity", "--out", out, "--config", cfg,
                   "--alpha", "1.2", "--times", "0:60e-6:7",
                   "--mode", "lindblad", "--bootstrap", "0") == 0
        assert io.read_json(out / "summary.json")["fit"]["mode"] == \
            "lindblad"


class TestSweep:
    def test_per_level_columns_and_taus(self, tmp_path):
        out = tmp_path / "run"
        assert run("sweep", "--out", out, "--levels=0,-6.5,-7",
                   "--times", "0:80e-6:6", "--alpha", "1.5") == 0
        cols = io.read_series_csv(out / "series.csv")
        assert {"times", "blob_0", "parity_0", "blob_-6.5",
                "parity_-6.5", "blob_-7", "parity_-7"} == set(cols)
        summary = io.read_json(out / "summary.json")
        assert set(summary["blob_tau"]) == {"0", "-6.5", "-7"}
        assert summary["blob_tau"]["-7"] > summary["blob_tau"]["0"]

    def test_levels_without_zero_fail_cleanly(self, tmp_path):
        out = tmp_path / "run"
        assert run("sweep", "--out", out, "--levels=-3,-6.5,-7",
                   "--times", "0:80e-6:6") == 2
        assert io.read_json(out / "summary.json")["failed"] is True


class TestBudget:
    def test_rows_and_contrast(self, tmp_path):
        out = tmp_path / "run"
        assert run("budget", "--out", out) == 0
        summary = io.read_json(out / "summary.json")
        budget = summary["budget"]
        assert budget["cavity_decay"] <= 1e-3
        assert 0.005 < budget["cavity_dephasing"] < 0.02
        assert 0.86 < summary["vacuum_contrast"] < 0.92
        cols = io.read_series_csv(out / "series.csv")
        assert cols["channel"].dtype.kind == "U"
        assert cols["infidelity"].dtype.kind == "f"


class TestOptimize:
    def test_small_search_converges(self, tmp_path):
        out = tmp_path / "run"
        assert run("optimize", "--out", out, "--target-db", "-3",
                   "--steps", "2", "--restarts", "2") == 0
        summary = io.read_json(out / "summary.json")
        assert summary["converged"] is True
        assert summary["achieved_overlap"] > 0.99
        assert len(summary["schedule"]["steps"]) == 2

    def test_starved_search_exits_2_but_reports(self, tmp_path):
        out = tmp_path / "run"
        assert run("optimize", "--out", out, "--target-db", "-7",
                   "--steps", "1", "--restarts", "1") == 2
        summary = io.read_json(out / "summary.json")
        assert summary["failed"] is True
        assert summary["converged"] is False
        assert summary["achieved_overlap"] < 0.95
        assert "schedule" in summary


class TestCalibrate:
    def test_recovers_device_parameters(self, tmp_path):
        out = tmp_path / "run"
        assert run("calibrate", "--out", out) == 0
        summary = io.read_json(out / "summary.json")
        assert abs(summary["chi_relative_error"]) < 1e-6
        assert abs(summary["t1_relative_error"]) < 1e-3
        assert (out / "series.csv").exists()
        assert (out / "t1_series.csv").exists()


class TestConfigErrors:
    def test_unknown_device_key_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        io.write_json(cfg, {"device": {"bogus": 1.0}})
        out = tmp_path / "run"
        assert run("decay", "--out", out, "--config", cfg) == 2
        summary = io.read_json(out / "summary.json")
        assert "bogus" in summary["error"]

    def test_missing_config_file_exits_2(self, tmp_path):
        out = tmp_path / "run"
        assert run("decay", "--out", out, "--config",
                   tmp_path / "nope.json") == 2
