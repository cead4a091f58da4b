"""Renderer tests: contract readers, spec validation, image output.

Unit tests feed handwritten files that conform to the simulation CLI's
file contract, so this suite runs without the simulation package.  The
final class is the exception by design: it drives the real CLI through
a subprocess and renders its emitted runs, which is the complete
consumer path.
"""

import hashlib
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from sqcat_figures.cli import main
from sqcat_figures.contract import (coerce_float, load_grid, load_json,
                                    load_series, load_tau_map)
from sqcat_figures.plots import PlotSpec, render

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write_series(path, columns):
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    lines = [",".join(names)]
    lines += [",".join(repr(float(c)) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_char_grid(path, n=41, extent=3.0):
    xs = np.linspace(-extent, extent, n)
    re, im = np.meshgrid(xs, xs)
    values = (np.exp(-(re ** 2 + im ** 2) / 4.0) * np.cos(2.0 * im)
              + 0.01j * re)
    lines = ["re_point,im_point,re_value,im_value"]
    for b, row in zip(xs, values):
        for a, v in zip(xs, row):
            lines.append(f"{float(a)!r},{float(b)!r},{float(v.real)!r},{float(v.imag)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return xs, values


def write_wigner_grid(path, n=31):
    xs = np.linspace(-2.0, 2.0, n)
    re, im = np.meshgrid(xs, xs)
    values = np.exp(-(re ** 2 + im ** 2)) * np.cos(3.0 * re)
    lines = ["re_point,im_point,value"]
    for b, row in zip(xs, values):
        for a, v in zip(xs, row):
            lines.append(f"{float(a)!r},{float(b)!r},{float(v)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return xs, values


def write_decay_run(root):
    root.mkdir(parents=True, exist_ok=True)
    times = np.linspace(0.0, 100e-6, 9)
    amps = 0.8 * np.exp(-times / 40e-6) + 0.02
    write_series(root / "series.csv",
                 {"time": times, "amplitude": amps, "center": amps * 0
                  + 3.6})
    summary = {"command": "decay", "failed": False, "tau": 4e-05,
               "fit": {"amplitude": 0.8, "rate": 25000.0,
                       "offset": 0.02}}
    (root / "summary.json").write_text(json.dumps(summary, indent=2),
                                       encoding="utf-8")
    return root


def write_sweep_summary(path):
    summary = {"command": "sweep", "failed": False,
               "blob_tau": {"0": 4.16e-05, "-3": 8.0e-05,
                            "-6": 1.8e-04, "-9": 4.4e-03,
                            "-12": "inf"},
               "parity_tau": {"0": 4.2e-05, "-3": 8.7e-05,
                              "-6": 1.5e-04, "-9": 1.1e-04,
                              "-12": 5.7e-05},
               "best_parity_level": -6.0}
    path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return path


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestContractReaders:
    def test_series_round_trip(self, tmp_path):
        path = tmp_path / "series.csv"
        write_series(path, {"time": [0.0, 1e-6], "amplitude": [1.0,
                                                               0.5]})
        cols = load_series(path, required=("time", "amplitude"))
        assert np.array_equal(cols["time"], [0.0, 1e-6])
        assert np.array_equal(cols["amplitude"], [1.0, 0.5])

    def test_series_missing_column_names_file_and_column(self, tmp_path):
        path = tmp_path / "series.csv"
        write_series(path, {"time": [0.0, 1.0]})
        with pytest.raises(ValueError, match="amplitude"):
            load_series(path, required=("time", "amplitude"))

    def test_series_keeps_text_columns(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("channel,infidelity\nqubit_decay,0.017\n",
                        encoding="utf-8")
        cols = load_series(path)
        assert cols["channel"][0] == "qubit_decay"
        assert cols["infidelity"][0] == pytest.approx(0.017)

    def test_series_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("a,b\n1.0\n", encoding="utf-8")
        with pytest.raises(ValueError, match="row 2"):
            load_series(path)

    def test_grid_complex_round_trip(self, tmp_path):
        path = tmp_path / "grid.csv"
        xs, values = write_char_grid(path, n=9)
        re_axis, im_axis, got = load_grid(path)
        assert np.array_equal(re_axis, xs)
        assert np.array_equal(im_axis, xs)
        assert np.array_equal(got, values)

    def test_grid_real_round_trip(self, tmp_path):
        path = tmp_path / "grid.csv"
        xs, values = write_wigner_grid(path, n=7)
        _, _, got = load_grid(path)
        assert got.dtype.kind == "f"
        assert np.array_equal(got, values)

    def test_grid_missing_value_columns(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("re_point,im_point,weird\n0.0,0.0,1.0\n",
                        encoding="utf-8")
        with pytest.raises(ValueError, match="re_value/im_value"):
            load_grid(path)

    def test_grid_incomplete_rectangle(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("re_point,im_point,value\n"
                        "0.0,0.0,1.0\n1.0,0.0,1.0\n0.0,1.0,1.0\n",
                        encoding="utf-8")
        with pytest.raises(ValueError, match="rectangle"):
            load_grid(path)

    def test_grid_wrong_row_order(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("re_point,im_point,value\n"
                        "0.0,0.0,1.0\n0.0,1.0,2.0\n"
                        "1.0,0.0,3.0\n1.0,1.0,4.0\n",
                        encoding="utf-8")
        with pytest.raises(ValueError, match="order"):
            load_grid(path)

    def test_nonfinite_spellings(self):
        assert coerce_float("inf") == np.inf
        assert coerce_float("-inf") == -np.inf
        assert np.isnan(coerce_float("nan"))
        assert coerce_float(2.5) == 2.5

    def test_json_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ValueError, match="object"):
            load_json(path)

    def test_tau_map_missing_key(self, tmp_path):
        with pytest.raises(ValueError, match="blob_tau"):
            load_tau_map({"parity_tau": {}}, "blob_tau", "s.json")


class TestPlotSpec:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            PlotSpec(kind="pie", inputs={"grid": "g.csv"})

    def test_missing_required_input(self):
        with pytest.raises(ValueError, match="grid"):
            PlotSpec(kind="char_heatmap", inputs={})

    def test_unknown_input_rejected(self):
        with pytest.raises(ValueError, match="extra"):
            PlotSpec(kind="sweep", inputs={"summary": "s.json",
                                           "extra": "x.csv"})

    def test_color_limits_only_on_maps(self):
        with pytest.raises(ValueError, match="phase-space"):
            PlotSpec(kind="decay", inputs={"series": "s.csv"},
                     color_limits=(-1.0, 1.0))

    def test_color_limits_must_be_symmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            PlotSpec(kind="char_heatmap", inputs={"grid": "g.csv"},
                     color_limits=(-0.5, 1.0))

    def test_from_mapping_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="caption"):
            PlotSpec.from_mapping({"kind": "sweep",
                                   "inputs": {"summary": "s.json"},
                                   "output": "o.png",
                                   "caption": "x"})

    def test_relative_paths_resolve_against_spec_dir(self, tmp_path):
        spec_file = tmp_path / "specs" / "plot.json"
        spec_file.parent.mkdir()
        spec_file.write_text(json.dumps(
            {"kind": "sweep", "inputs": {"summary": "../run/s.json"},
             "output": "out/sweep.png"}), encoding="utf-8")
        spec = PlotSpec.from_json(spec_file)
        assert spec.inputs["summary"] == tmp_path / "specs" / ".." \
            / "run" / "s.json"
        assert spec.output == tmp_path / "specs" / "out" / "sweep.png"


class TestRender:
    def test_char_heatmap_renders_and_is_deterministic(self, tmp_path):
        grid = tmp_path / "char_grid.csv"
        write_char_grid(grid)
        before = digest(grid)
        outs = []
        for name in ("a.png", "b.png"):
            spec = PlotSpec(kind="char_heatmap",
                            inputs={"grid": grid},
                            output=tmp_path / name)
            outs.append(render(spec))
        assert outs[0].read_bytes()[:8] == PNG_MAGIC
        assert outs[0].read_bytes() == outs[1].read_bytes()
        assert digest(grid) == before

    def test_wigner_map_renders(self, tmp_path):
        grid = tmp_path / "wigner_grid.csv"
        write_wigner_grid(grid)
        out = render(PlotSpec(kind="wigner_map",
                              inputs={"grid": grid},
                              output=tmp_path / "w.png",
                              color_limits=(-1.0, 1.0)))
        assert out.read_bytes()[:8] == PNG_MAGIC

    def test_decay_with_fit_overlay(self, tmp_path):
        run = write_decay_run(tmp_path / "run")
        out = render(PlotSpec(kind="decay",
                              inputs={"series": run / "series.csv",
                                      "summary": run / "summary.json"},
                              output=tmp_path / "decay.png"))
        assert out.stat().st_size > 1000

    def test_decay_without_summary(self, tmp_path):
        run = write_decay_run(tmp_path / "run")
        out = render(PlotSpec(kind="decay",
                              inputs={"series": run / "series.csv"},
                              output=tmp_path / "decay.png"))
        assert out.stat().st_size > 1000

    def test_decay_summary_without_fit_rejected(self, tmp_path):
        run = write_decay_run(tmp_path / "run")
        (run / "summary.json").write_text('{"tau": 1.0}',
                                          encoding="utf-8")
        with pytest.raises(ValueError, match="fit"):
            render(PlotSpec(kind="decay",
                            inputs={"series": run / "series.csv",
                                    "summary": run / "summary.json"},
                            output=tmp_path / "decay.png"))

    def test_sweep_handles_unbounded_lifetime(self, tmp_path):
        summary = write_sweep_summary(tmp_path / "summary.json")
        out = render(PlotSpec(kind="sweep",
                              inputs={"summary": summary},
                              output=tmp_path / "sweep.png"))
        assert out.read_bytes()[:8] == PNG_MAGIC

    def test_missing_input_file(self, tmp_path):
        spec = PlotSpec(kind="sweep",
                        inputs={"summary": tmp_path / "absent.json"},
                        output=tmp_path / "o.png")
        with pytest.raises(FileNotFoundError, match="absent"):
            render(spec)

    def test_svg_output_is_deterministic(self, tmp_path):
        summary = write_sweep_summary(tmp_path / "summary.json")
        outs = []
        for name in ("a.svg", "b.svg"):
            outs.append(render(PlotSpec(kind="sweep",
                                        inputs={"summary": summary},
                                        output=tmp_path / name)))
        assert outs[0].read_bytes() == outs[1].read_bytes()
        assert b"<svg" in outs[0].read_bytes()[:300]


class TestCli:
    def test_renders_spec_file(self, tmp_path, capsys):
        grid = tmp_path / "char_grid.csv"
        write_char_grid(grid, n=15)
        spec_file = tmp_path / "plot.json"
        spec_file.write_text(json.dumps(
            {"kind": "char_heatmap", "inputs": {"grid": "char_grid.csv"},
             "output": "fig.png"}), encoding="utf-8")
        assert main(["--spec", str(spec_file)]) == 0
        assert (tmp_path / "fig.png").exists()
        assert "wrote" in capsys.readouterr().out

    def test_bad_spec_exits_2_but_others_still_render(self, tmp_path,
                                                      capsys):
        grid = tmp_path / "char_grid.csv"
        write_char_grid(grid, n=15)
        good = tmp_path / "good.json"
        good.write_text(json.dumps(
            {"kind": "char_heatmap", "inputs": {"grid": "char_grid.csv"},
             "output": "fig.png"}), encoding="utf-8")
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kind": "pie", "inputs": {},
                                   "output": "x.png"}), encoding="utf-8")
        assert main(["--spec", str(bad), "--spec", str(good)]) == 2
        captured = capsys.readouterr()
        assert "pie" in captured.err
        assert (tmp_path / "fig.png").exists()

    def test_import_carries_no_simulation_code(self):
        code = ("import sys, sqcat_figures.plots, sqcat_figures.cli; "
                "bad = [m for m in sys.modules if m == 'sqcat' or "
                "m.startswith('sqcat.')]; sys.exit(1 if bad else 0)")
        proc = subprocess.run([sys.executable, "-c", code])
        assert proc.returncode == 0


@pytest.fixture(scope="session")
def emitted_runs(tmp_path_factory):
    """Real run directories written by the simulation CLI."""
    exe = shutil.which("sqcat")
    if exe is None:
        pytest.skip("simulation CLI not installed")
    root = tmp_path_factory.mktemp("runs")
    config = root / "config.json"
    config.write_text('{"cavity_dim": 30}', encoding="utf-8")
    calls = [
        [exe, "charfun", "--label", "-3", "--config", str(config),
         "--out", str(root / "charfun"), "--grid=-6:6:97"],
        [exe, "decay", "--config", str(config),
         "--out", str(root / "decay"), "--times", "0:100e-6:8",
         "--bootstrap", "50"],
        [exe, "sweep", "--levels=0,-6.5,-7", "--alpha", "1.5",
         "--times", "0:80e-6:6", "--bootstrap", "0",
         "--out", str(root / "sweep")],
    ]
    for argv in calls:
        proc = subprocess.run(argv, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    return root


class TestEmittedRuns:
    """The three reference figures render from real CLI output."""

    def test_charfun_heatmap(self, emitted_runs, tmp_path):
        out = render(PlotSpec(
            kind="char_heatmap",
            inputs={"grid": emitted_runs / "charfun" / "char_grid.csv"},
            output=tmp_path / "charfun.png"))
        assert out.read_bytes()[:8] == PNG_MAGIC

    def test_decay_plot_with_fit(self, emitted_runs, tmp_path):
        run = emitted_runs / "decay"
        out = render(PlotSpec(
            kind="decay",
            inputs={"series": run / "series.csv",
                    "summary": run / "summary.json"},
            output=tmp_path / "decay.png"))
        assert out.read_bytes()[:8] == PNG_MAGIC

    def test_sweep_plot(self, emitted_runs, tmp_path):
        out = render(PlotSpec(
            kind="sweep",
            inputs={"summary": emitted_runs / "sweep" / "summary.json"},
            output=tmp_path / "sweep.png"))
        assert out.read_bytes()[:8] == PNG_MAGIC
