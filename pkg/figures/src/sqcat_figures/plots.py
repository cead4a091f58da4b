"""Figure rendering from emitted run files.

Every plot is declared as a PlotSpec naming its kind, its input files
inside a run directory, and the image to write.  Rendering is pure
consumption: inputs are opened read-only, output bytes depend only on
the input files and the spec, and no simulation code is imported.
Phase-space maps always get a diverging color scale symmetric about
zero, so sign structure in the interference pattern reads directly
from the colors.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from sqcat_figures.contract import (coerce_float, load_grid, load_json,
                                    load_series, load_tau_map)

KINDS = ("char_heatmap", "wigner_map", "decay", "sweep")

_MAP_KINDS = ("char_heatmap", "wigner_map")
_REQUIRED_INPUTS = {"char_heatmap": ("grid",), "wigner_map": ("grid",),
                    "decay": ("series",), "sweep": ("summary",)}
_OPTIONAL_INPUTS = {"decay": ("summary",)}

_DEFAULT_LABELS = {
    "char_heatmap": ("Re(nu)", "Im(nu)"),
    "wigner_map": ("Re(beta)", "Im(beta)"),
    "decay": ("time (us)", "blob amplitude"),
    "sweep": ("compression level (dB)", "fitted lifetime (us)"),
}
_COLORBAR_LABELS = {"char_heatmap": "Re C(nu)", "wigner_map": "W(beta)"}


@dataclass(frozen=True)
class PlotSpec:
    """One figure: where its data lives and how to draw it."""

    kind: str
    inputs: dict = field(default_factory=dict)
    output: Path = Path("figure.png")
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    color_limits: tuple | None = None
    dpi: int = 150
    embed_timestamps: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, "
                             f"got {self.kind!r}")
        allowed = set(_REQUIRED_INPUTS[self.kind]) \
            | set(_OPTIONAL_INPUTS.get(self.kind, ()))
        unknown = sorted(set(self.inputs) - allowed)
        if unknown:
            raise ValueError(f"kind {self.kind} does not take inputs "
                             f"{unknown}; allowed: {sorted(allowed)}")
        missing = [k for k in _REQUIRED_INPUTS[self.kind]
                   if k not in self.inputs]
        if missing:
            raise ValueError(f"kind {self.kind} needs inputs {missing}")
        object.__setattr__(self, "inputs",
                           {k: Path(v) for k, v in self.inputs.items()})
        object.__setattr__(self, "output", Path(self.output))
        if self.color_limits is not None:
            if self.kind not in _MAP_KINDS:
                raise ValueError(
                    "color scale limits only apply to phase-space maps")
            lo, hi = self.color_limits
            if not (hi > 0 and lo == -hi):
                raise ValueError(
                    f"map color limits must be symmetric about zero, "
                    f"got ({lo}, {hi})")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path | None = None
                     ) -> "PlotSpec":
        """Build a spec from parsed JSON.

        Relative paths are resolved against base_dir (the spec file's
        own directory when loaded from disk), so a spec can travel with
        the run directories it points at.
        """
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValueError(f"unknown spec fields {unknown}")
        for name in ("kind", "inputs", "output"):
            if name not in data:
                raise ValueError(f"spec is missing the {name} field")
        data = dict(data)
        if data.get("color_limits") is not None:
            data["color_limits"] = tuple(data["color_limits"])
        if base_dir is not None:
            base = Path(base_dir)
            data["inputs"] = {k: base / v if not Path(v).is_absolute()
                              else Path(v)
                              for k, v in data["inputs"].items()}
            out = Path(data["output"])
            data["output"] = out if out.is_absolute() else base / out
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "PlotSpec":
        path = Path(path)
        return cls.from_mapping(load_json(path), base_dir=path.parent)


def render(spec: PlotSpec) -> Path:
    """Draw the figure a spec describes and return the image path."""
    for name, path in spec.inputs.items():
        if not path.is_file():
            raise FileNotFoundError(f"{spec.kind} input {name} not "
                                    f"found at {path}")
    fig = Figure(figsize=_FIGSIZES[spec.kind], constrained_layout=True)
    FigureCanvasAgg(fig)
    ax = fig.subplots()
    _RENDERERS[spec.kind](spec, fig, ax)
    xlabel, ylabel = _DEFAULT_LABELS[spec.kind]
    ax.set_xlabel(spec.xlabel or xlabel)
    ax.set_ylabel(spec.ylabel or ylabel)
    if spec.title:
        ax.set_title(spec.title)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    suffix = spec.output.suffix.lower()
    metadata = None
    if not spec.embed_timestamps:
        # PNG carries no date chunk by default; SVG and PDF do, and a
        # dated image would break byte-level reproducibility
        metadata = {".svg": {"Date": None},
                    ".pdf": {"CreationDate": None}}.get(suffix)
    # SVG element ids are salted per process unless the salt is pinned
    with matplotlib.rc_context({"svg.hashsalt": "sqcat-figures"}):
        fig.savefig(spec.output, dpi=spec.dpi, metadata=metadata)
    return spec.output


def _render_map(spec: PlotSpec, fig, ax):
    re_axis, im_axis, values = load_grid(spec.inputs["grid"])
    data = np.real(values)
    if spec.color_limits is not None:
        _, vmax = spec.color_limits
    else:
        vmax = float(np.abs(data).max()) or 1.0
    mesh = ax.pcolormesh(re_axis, im_axis, data, cmap="RdBu_r",
                         vmin=-vmax, vmax=vmax, shading="nearest",
                         rasterized=True)
    ax.set_aspect("equal")
    fig.colorbar(mesh, ax=ax, label=_COLORBAR_LABELS[spec.kind])


def _render_decay(spec: PlotSpec, fig, ax):
    columns = load_series(spec.inputs["series"],
                          required=("time", "amplitude"))
    times = columns["time"]
    amps = columns["amplitude"]
    keep = amps > 0
    ax.semilogy(times[keep] * 1e6, amps[keep], marker="o",
                linestyle="none", markersize=4, color="#1f77b4",
                label="measured")
    if "summary" in spec.inputs:
        summary = load_json(spec.inputs["summary"])
        fit = summary.get("fit")
        if not isinstance(fit, dict) or not {"amplitude", "rate",
                                             "offset"} <= set(fit):
            raise ValueError(f"{spec.inputs['summary']} has no usable "
                             f"fit entry (amplitude, rate, offset)")
        dense = np.linspace(times.min(), times.max(), 400)
        model = (fit["amplitude"] * np.exp(-coerce_float(fit["rate"])
                                           * dense) + fit["offset"])
        good = model > 0
        label = "fit"
        tau = coerce_float(summary.get("tau", float("nan")))
        if np.isfinite(tau):
            label = f"fit: tau = {tau * 1e6:.3g} us"
        ax.semilogy(dense[good] * 1e6, model[good], color="#d62728",
                    label=label)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


def _render_sweep(spec: PlotSpec, fig, ax):
    summary = load_json(spec.inputs["summary"])
    path = spec.inputs["summary"]
    styles = {"blob_tau": ("blob lifetime", "o", "#1f77b4"),
              "parity_tau": ("parity lifetime", "s", "#2ca02c")}
    peak = None
    for key, (label, marker, color) in styles.items():
        mapping = load_tau_map(summary, key, path)
        levels = np.array(sorted(mapping))
        taus = np.array([mapping[lv] for lv in levels])
        # an unbounded fitted lifetime has no place on the axis; the
        # curve simply stops at the last finite level
        finite = np.isfinite(taus)
        ax.semilogy(levels[finite], taus[finite] * 1e6, marker=marker,
                    color=color, label=label)
        if key == "parity_tau" and finite.any():
            best = levels[finite][np.argmax(taus[finite])]
            peak = (best, mapping[best] * 1e6)
    if peak is not None:
        ax.plot(*peak, marker="*", markersize=15, color="#2ca02c",
                linestyle="none", zorder=5)
    ax.invert_xaxis()
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


_FIGSIZES = {"char_heatmap": (5.0, 4.2), "wigner_map": (5.0, 4.2),
             "decay": (5.6, 4.0), "sweep": (5.6, 4.0)}
_RENDERERS = {"char_heatmap": _render_map, "wigner_map": _render_map,
              "decay": _render_decay, "sweep": _render_sweep}
