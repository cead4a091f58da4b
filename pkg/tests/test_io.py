"""Serialization round trips and canonical-output guarantees."""

import json
import math

import numpy as np
import pytest

from sqcat import io
from sqcat.dynamics import CharGrid
from sqcat.gates import DeviceParams
from sqcat.tomography import WignerGrid


class TestJsonable:
    def test_plain_types_pass_through(self):
        assert io.jsonable({"a": 1, "b": "x", "c": None, "d": True}) == \
            {"a": 1, "b": "x", "c": None, "d": True}

    def test_numpy_scalars_become_python(self):
        out = io.jsonable({"f": np.float64(0.5), "i": np.int64(3)})
        assert out == {"f": 0.5, "i": 3}
        assert type(out["f"]) is float and type(out["i"]) is int

    def test_complex_becomes_re_im_mapping(self):
        assert io.jsonable(1.5 - 2.0j) == {"re": 1.5, "im": -2.0}
        assert io.jsonable(np.complex128(1j)) == {"re": 0.0, "im": 1.0}

    def test_nonfinite_floats_become_strings(self):
        assert io.jsonable(math.inf) == "inf"
        assert io.jsonable(-math.inf) == "-inf"
        assert io.jsonable(math.nan) == "nan"

    def test_arrays_and_tuples_become_lists(self):
        out = io.jsonable({"a": np.arange(3), "t": (1, 2)})
        assert out == {"a": [0, 1, 2], "t": [1, 2]}

    def test_dataclass_becomes_mapping(self):
        out = io.jsonable(DeviceParams())
        assert out["t1_cavity"] == 260e-6
        assert out["chi"] == pytest.approx(2 * math.pi * 40e3)

    def test_unserializable_raises(self):
        with pytest.raises(TypeError, match="serialize"):
            io.jsonable(object())


class TestJsonFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "x.json"
        io.write_json(path, {"b": 2.0, "a": [1, {"z": "inf"}]})
        assert io.read_json(path) == {"b": 2.0, "a": [1, {"z": "inf"}]}

    def test_output_is_canonical(self, tmp_path):
        p1, p2 = tmp_path / "1.json", tmp_path / "2.json"
        io.write_json(p1, {"b": 1, "a": 2})
        io.write_json(p2, {"a": 2, "b": 1})
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text().endswith("}\n")

    def test_keys_are_sorted(self, tmp_path):
        path = tmp_path / "x.json"
        io.write_json(path, {"zz": 1, "aa": 2})
        text = path.read_text()
        assert text.index('"aa"') < text.index('"zz"')


class TestSeriesCsv:
    def test_round_trip_floats(self, tmp_path):
        path = tmp_path / "s.csv"
        io.write_series_csv(path, {"t": [0.0, 1e-6, 2e-6],
                                   "y": [1.0, 0.5, 0.25]})
        cols = io.read_series_csv(path)
        np.testing.assert_allclose(cols["t"], [0.0, 1e-6, 2e-6])
        np.testing.assert_allclose(cols["y"], [1.0, 0.5, 0.25])

    def test_complex_column_splits_into_pairs(self, tmp_path):
        path = tmp_path / "s.csv"
        io.write_series_csv(path, {"t": [0.0, 1.0],
                                   "c": np.array([1 + 2j, -3j])})
        header = path.read_text().split("\n")[0]
        assert header == "t,re_c,im_c"
        cols = io.read_series_csv(path)
        np.testing.assert_allclose(cols["re_c"], [1.0, 0.0])
        np.testing.assert_allclose(cols["im_c"], [2.0, -3.0])

    def test_header_keeps_given_order(self, tmp_path):
        path = tmp_path / "s.csv"
        io.write_series_csv(path, {"z": [1.0], "a": [2.0], "m": [3.0]})
        assert path.read_text().split("\n")[0] == "z,a,m"

    def test_string_column_round_trips(self, tmp_path):
        path = tmp_path / "s.csv"
        io.write_series_csv(path, {"name": np.array(["x", "y"]),
                                   "v": [1.0, 2.0]})
        cols = io.read_series_csv(path)
        assert list(cols["name"]) == ["x", "y"]
        np.testing.assert_allclose(cols["v"], [1.0, 2.0])

    def test_length_mismatch_raises(self, tmp_path):
        with pytest.raises(ValueError, match="lengths"):
            io.write_series_csv(tmp_path / "s.csv",
                                {"a": [1.0], "b": [1.0, 2.0]})

    def test_comma_in_cell_raises(self, tmp_path):
        with pytest.raises(ValueError, match="CSV"):
            io.write_series_csv(tmp_path / "s.csv",
                                {"name": np.array(["a,b"])})

    def test_empty_columns_raise(self, tmp_path):
        with pytest.raises(ValueError, match="column"):
            io.write_series_csv(tmp_path / "s.csv", {})

    def test_shortest_repr_survives_round_trip(self, tmp_path):
        path = tmp_path / "s.csv"
        values = [0.1, 1 / 3, 41.61382e-6]
        io.write_series_csv(path, {"v": values})
        cols = io.read_series_csv(path)
        assert [float(v) for v in cols["v"]] == values


class TestGridCsv:
    def _char_grid(self):
        re_axis = np.linspace(-1.0, 1.0, 5)
        im_axis = np.linspace(-0.5, 0.5, 3)
        vals = np.exp(-(im_axis[:, None] ** 2 + re_axis[None, :] ** 2)
                      + 0.3j * re_axis[None, :])
        return CharGrid(re_axis, im_axis, vals)

    def test_complex_grid_round_trip(self, tmp_path):
        grid = self._char_grid()
        path = tmp_path / "g.csv"
        io.write_grid_csv(path, grid)
        re_axis, im_axis, vals = io.read_grid_csv(path)
        np.testing.assert_allclose(re_axis, grid.re_axis)
        np.testing.assert_allclose(im_axis, grid.im_axis)
        np.testing.assert_allclose(vals, grid.values)
        assert np.iscomplexobj(vals)

    def test_real_grid_round_trip(self, tmp_path):
        re_axis = np.linspace(-1.0, 1.0, 4)
        im_axis = np.linspace(-1.0, 1.0, 4)
        vals = np.outer(im_axis, re_axis)
        wig = WignerGrid(re_axis, im_axis, vals)
        path = tmp_path / "w.csv"
        io.write_grid_csv(path, wig)
        re_back, im_back, vals_back = io.read_grid_csv(path)
        np.testing.assert_allclose(vals_back, vals)
        assert not np.iscomplexobj(vals_back)

    def test_header_names_the_point_pair(self, tmp_path):
        path = tmp_path / "g.csv"
        io.write_grid_csv(path, self._char_grid())
        header = path.read_text().split("\n")[0]
        assert header == "re_point,im_point,re_value,im_value"

    def test_missing_point_column_raises(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("re_point,value\n0.0,1.0\n")
        with pytest.raises(ValueError, match="im_point"):
            io.read_grid_csv(path)

    def test_missing_value_column_raises(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("re_point,im_point\n0.0,0.0\n")
        with pytest.raises(ValueError, match="value"):
            io.read_grid_csv(path)

    def test_incomplete_rectangle_raises(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("re_point,im_point,value\n"
                        "0.0,0.0,1.0\n1.0,0.0,1.0\n0.0,1.0,1.0\n")
        with pytest.raises(ValueError, match="rectangle"):
            io.read_grid_csv(path)


class TestDeviceFromMapping:
    def test_empty_mapping_gives_defaults(self):
        assert io.device_from_mapping({}) == DeviceParams()

    def test_partial_override(self):
        device = io.device_from_mapping({"t1_cavity": 520e-6})
        assert device.t1_cavity == 520e-6
        assert device.chi == DeviceParams().chi

    def test_unknown_key_raises(self):
        with pytest.raises(ValueError, match="bogus"):
            io.device_from_mapping({"bogus": 1.0})

    def test_dependent_default_recomputed(self):
        # the dwell displacement default is tied to chi, so overriding
        # chi through a mapping must rescale it rather than freeze the
        # value computed for the default chi
        base = io.device_from_mapping({})
        faster = io.device_from_mapping({"chi": 2 * base.chi})
        assert faster.lever_alpha0 == pytest.approx(base.lever_alpha0 / 2)


class TestParseGridSpec:
    def test_basic(self):
        axis = io.parse_grid_spec("-1:1:5")
        np.testing.assert_allclose(axis, np.linspace(-1, 1, 5))

    def test_scientific_notation(self):
        axis = io.parse_grid_spec("0:150e-6:16")
        assert axis[-1] == 150e-6 and axis.size == 16

    @pytest.mark.parametrize("bad", ["1:2", "0:1:1", "1:0:5", "a:b:c"])
    def test_malformed_specs_raise(self, bad):
        with pytest.raises(ValueError):
            io.parse_grid_spec(bad)
