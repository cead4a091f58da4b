"""Command-line driver for the experiment pipelines.

Each subcommand runs one pipeline and writes a run directory holding
config.json (the fully resolved configuration), series.csv, any grids
as CSV, and summary.json.  Exit status is 0 on success and 2 when a
fit or search fails to converge, in which case summary.json carries
the failure flag and the reason.  Nothing written depends on
wall-clock time, so identical configuration and seed give
byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from sqcat import io
from sqcat.experiments import (ReadoutModel, chi_fit,
                               compression_class_schedule,
                               compression_sweep, decay_scan,
                               decay_sensitivity_band,
                               dispersive_phase_series, error_budget,
                               parity_scan, photon_number_series,
                               t1_cavity_fit, vacuum_contrast_estimate)
from sqcat.hilbert import (CavitySpace, SpaceSpec, expectation,
                           make_operator, make_state)
from sqcat.protocol import (CatSpec, CompressionSchedule,
                            create_compressed_cat, measure_compression_db,
                            optimize_schedule, run_compression)
from sqcat.dynamics import NoiseConfig
from sqcat.reference_data import preset_schedule
from sqcat.tomography import (EDGE_ERROR_LEVEL, char_function,
                              parity_from_char, wigner_from_char)


def _from_json_complex(value) -> complex:
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)),
                       float(value.get("im", 0.0)))
    return complex(value)


def _resolve_schedule(args, config) -> CompressionSchedule:
    if "schedule" in config:
        return CompressionSchedule.from_mapping(config["schedule"])
    if getattr(args, "level", None) is not None:
        return preset_schedule(args.level)
    return compression_class_schedule(args.label, alpha=args.alpha)


def _resolve_state(args, config, params: dict):
    """Cavity state for the tomography and decay commands.

    Resolution order: an explicit state mapping in the config, then the
    measured-label presets (label 0 meaning the plain odd cat at the
    requested amplitude).  The resolved description lands in params so
    config.json records exactly what was run.
    """
    dim = int(config.get("cavity_dim", 60))
    cavity = CavitySpace(dim)
    params["cavity_dim"] = dim
    spec = config.get("state")
    if spec is not None:
        kwargs = {}
        for key, value in spec.items():
            if key == "kind":
                continue
            if key in ("alpha", "gamma"):
                kwargs[key] = _from_json_complex(value)
            elif key in ("n", "parity"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        params["state"] = spec
        return make_state(spec["kind"], cavity, **kwargs)
    label = float(args.label)
    params["label"] = label
    params["alpha"] = args.alpha
    if label == 0.0:
        return make_state("cat", cavity, alpha=args.alpha, parity=-1)
    schedule = compression_class_schedule(label, alpha=args.alpha)
    res = create_compressed_cat(schedule, SpaceSpec(dim),
                                outcome=args.outcome)
    params["outcome"] = args.outcome
    params["schedule"] = schedule.as_mapping()
    return res.cavity_state


def _edge_max(grid) -> float:
    vals = np.abs(grid.values)
    return float(max(vals[0, :].max(), vals[-1, :].max(),
                     vals[:, 0].max(), vals[:, -1].max()))


def _fock_parity(state, dim: int) -> float:
    op = make_operator("parity", CavitySpace(dim))
    return float(expectation(state, op).real)


def _run_compress(args, config, device, out):
    schedule = _resolve_schedule(args, config)
    dim = int(config.get("cavity_dim", 60))
    res = run_compression(schedule, SpaceSpec(dim))
    state = res.cavity_state
    db_x = measure_compression_db(state, "X")
    db_p = measure_compression_db(state, "P")
    io.write_series_csv(out / "series.csv",
                        {"step": np.arange(1, schedule.n_steps + 1),
                         "u": schedule.us, "v": schedule.vs})
    summary = {"target_db": schedule.target_db, "achieved_db_x": db_x,
               "achieved_db_p": db_p,
               "elapsed_model_time": res.elapsed_model_time}
    if args.grid is not None:
        ax = io.parse_grid_spec(args.grid)
        io.write_grid_csv(out / "char_grid.csv",
                          char_function(state, ax, ax,
                                        source_label="compress"))
        summary["grid_file"] = "char_grid.csv"
    return {"parameters": {"schedule": schedule.as_mapping(),
                           "cavity_dim": dim},
            "summary": summary}


def _run_cat(args, config, device, out):
    schedule = _resolve_schedule(args, config)
    if schedule.final_v is None:
        raise ValueError("cat preparation needs a schedule with final_v")
    dim = int(config.get("cavity_dim", 60))
    noise = NoiseConfig(device) if args.noisy else None
    res = create_compressed_cat(schedule, SpaceSpec(dim),
                                outcome=args.outcome, noise=noise)
    io.write_series_csv(out / "series.csv",
                        {"step": np.arange(1, schedule.n_steps + 1),
                         "u": schedule.us, "v": schedule.vs})
    summary = {"outcome": res.qubit_outcome,
               "outcome_probability": res.outcome_probability,
               "parity": _fock_parity(res.cavity_state, dim),
               "elapsed_model_time": res.elapsed_model_time,
               "noisy": bool(args.noisy)}
    if args.grid is not None:
        ax = io.parse_grid_spec(args.grid)
        io.write_grid_csv(out / "char_grid.csv",
                          char_function(res.cavity_state, ax, ax,
                                        source_label="cat"))
        summary["grid_file"] = "char_grid.csv"
    return {"parameters": {"schedule": schedule.as_mapping(),
                           "cavity_dim": dim, "outcome": args.outcome,
                           "noisy": bool(args.noisy)},
            "summary": summary}


def _run_charfun(args, config, device, out):
    params = {}
    state = _resolve_state(args, config, params)
    ax = io.parse_grid_spec(args.grid)
    grid = char_function(state, ax, ax, source_label="charfun")
    io.write_grid_csv(out / "char_grid.csv", grid)
    edge = _edge_max(grid)
    summary = {"center_value": grid.center_value(), "edge_max": edge,
               "grid_file": "char_grid.csv"}
    if edge < EDGE_ERROR_LEVEL:
        summary["parity_estimate"] = parity_from_char(grid)
    return {"parameters": {**params, "grid": args.grid},
            "summary": summary}


def _run_wigner(args, config, device, out):
    params = {}
    state = _resolve_state(args, config, params)
    ax = io.parse_grid_spec(args.grid)
    grid = char_function(state, ax, ax, source_label="wigner")
    wig = wigner_from_char(grid)
    io.write_grid_csv(out / "wigner_grid.csv", wig)
    return {"parameters": {**params, "grid": args.grid},
            "summary": {"origin_value": wig.origin_value(),
                        "integral": wig.integral(),
                        "edge_max": _edge_max(grid),
                        "grid_file": "wigner_grid.csv"}}


def _run_decay(args, config, device, out):
    params = {}
    state = _resolve_state(args, config, params)
    times = io.parse_grid_spec(args.times)
    series = decay_scan(state, times, device, mode=args.mode,
                        offset_mode=args.offset,
                        bootstrap=args.bootstrap, seed=args.seed)
    io.write_series_csv(out / "series.csv",
                        {"time": series.times,
                         "amplitude": series.amplitudes,
                         "center": series.centers})
    summary = {"fit": dict(series.fit), "tau": series.fit["tau"],
               "tau_stderr": series.fit["tau_stderr"]}
    try:
        band = decay_sensitivity_band(series, bootstrap=0,
                                      seed=args.seed)
    except ValueError:
        summary["band_low"] = summary["band_high"] = None
        summary["band_note"] = ("time range too short for the standard "
                                "fit-window band")
    else:
        summary["band_low"], summary["band_high"] = band["band"]
        summary["band_taus"] = {
            f"{k[0] * 1e6:g}:{k[1] * 1e6:g}:{k[2]}:{k[3]}": v
            for k, v in band["taus"].items()}
    return {"parameters": {**params, "times": args.times,
                           "mode": args.mode, "offset": args.offset,
                           "bootstrap": args.bootstrap},
            "summary": summary}


def _run_parity(args, config, device, out):
    params = {}
    state = _resolve_state(args, config, params)
    times = io.parse_grid_spec(args.times)
    readout = ReadoutModel(p_gg=device.readout_p_gg,
                           p_ee=device.readout_p_ee,
                           shots=args.shots or 1000)
    record = parity_scan(state, times, device, mode=args.mode,
                         readout=readout, bootstrap=args.bootstrap,
                         seed=args.seed)
    series = dict(record.series)
    if args.shots:
        rng = np.random.default_rng(args.seed)
        series["parity_sampled"] = np.array(
            [readout.measured_parity(p, rng)
             for p in record.series["parity"]])
    io.write_series_csv(out / "series.csv", series)
    return {"parameters": {**params, "times": args.times,
                           "mode": args.mode, "shots": args.shots,
                           "bootstrap": args.bootstrap},
            "summary": {"fit": dict(record.fit),
                        "tau": record.fit["tau"],
                        "initial_parity": float(
                            record.series["parity"][0])}}


def _run_sweep(args, config, device, out):
    levels = [float(x) for x in args.levels.split(",")]
    times = io.parse_grid_spec(args.times)
    record = compression_sweep(levels, args.alpha, times, device,
                               bootstrap=args.bootstrap, seed=args.seed)
    io.write_series_csv(out / "series.csv", record.series)
    blob = {f"{k:g}": v for k, v in record.extras["blob_tau"].items()}
    par = {f"{k:g}": v for k, v in record.extras["parity_tau"].items()}
    finite = {k: v for k, v in record.extras["parity_tau"].items()
              if math.isfinite(v)}
    best = max(finite, key=finite.get) if finite else None
    return {"parameters": {"levels_db": levels, "alpha": args.alpha,
                           "times": args.times,
                           "bootstrap": args.bootstrap,
                           "cavity_dim": record.parameters["cavity_dim"]},
            "summary": {"blob_tau": blob, "parity_tau": par,
                        "best_parity_level": best}}


def _run_budget(args, config, device, out):
    dim = int(config.get("cavity_dim", 30))
    rows = error_budget(device, cavity_dim=dim)
    contrast = vacuum_contrast_estimate(device, cavity_dim=dim)
    io.write_series_csv(out / "series.csv",
                        {"channel": np.array(list(rows)),
                         "infidelity": np.array(list(rows.values()))})
    return {"parameters": {"cavity_dim": dim},
            "summary": {"budget": rows, "vacuum_contrast": contrast}}


def _run_optimize(args, config, device, out):
    if "cat_target" in config:
        ct = dict(config["cat_target"])
        target = CatSpec(alpha=_from_json_complex(ct["alpha"]),
                         parity=int(ct.get("parity", -1)),
                         squeeze_r=float(ct.get("squeeze_r", 0.0)))
        target_desc = {"kind": "compressed-cat", **ct}
    else:
        target = float(args.target_db)
        target_desc = {"kind": "compressed-vacuum", "target_db": target}
    dim = int(config.get("cavity_dim", 60))
    schedule = optimize_schedule(target, n_steps=args.steps,
                                 restarts=args.restarts, seed=args.seed,
                                 cavity_dim=dim)
    io.write_series_csv(out / "series.csv",
                        {"step": np.arange(1, schedule.n_steps + 1),
                         "u": schedule.us, "v": schedule.vs})
    summary = {"schedule": schedule.as_mapping(),
               "achieved_overlap": schedule.achieved_overlap,
               "converged": schedule.converged}
    if not schedule.converged:
        summary["failed"] = True
        summary["error"] = ("search stalled below the 0.95 overlap "
                            "threshold")
    return {"parameters": {"target": target_desc, "n_steps": args.steps,
                           "restarts": args.restarts,
                           "cavity_dim": dim},
            "summary": summary}


def _run_calibrate(args, config, device, out):
    delta_ts = io.parse_grid_spec(args.chi_times)
    t1_times = io.parse_grid_spec(args.t1_times)
    phases = dispersive_phase_series(delta_ts, device)
    nbar = photon_number_series(t1_times, device)
    io.write_series_csv(out / "series.csv",
                        {"delta_t": delta_ts, "phase": phases})
    io.write_series_csv(out / "t1_series.csv",
                        {"time": t1_times, "nbar": nbar})
    slope = chi_fit(delta_ts, device)
    t1 = t1_cavity_fit(t1_times, device)
    # the symmetric dispersive convention splits chi across the two
    # qubit branches, so the calibrated value is twice the fitted slope
    chi_cal = 2.0 * slope
    return {"parameters": {"chi_times": args.chi_times,
                           "t1_times": args.t1_times},
            "summary": {"chi_slope": slope, "chi_calibrated": chi_cal,
                        "chi_device": device.chi,
                        "chi_relative_error": chi_cal / device.chi - 1.0,
                        "t1_cavity": t1,
                        "t1_device": device.t1_cavity,
                        "t1_relative_error": t1 / device.t1_cavity - 1.0}}


_HANDLERS = {
    "compress": _run_compress,
    "cat": _run_cat,
    "charfun": _run_charfun,
    "wigner": _run_wigner,
    "decay": _run_decay,
    "parity": _run_parity,
    "sweep": _run_sweep,
    "budget": _run_budget,
    "optimize": _run_optimize,
    "calibrate": _run_calibrate,
}


def _add_common(sub, name: str, help_text: str):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--config", metavar="PATH",
                   help="JSON file with device parameters and run options")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (default runs/<command>)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for every stochastic ingredient")
    return p


def _add_state_options(p, default_label: float = 0.0):
    p.add_argument("--label", type=float, default=default_label,
                   help="measured compression label of the prepared "
                        "class; 0 means the plain odd cat")
    p.add_argument("--alpha", type=float, default=1.8,
                   help="cat component amplitude")
    p.add_argument("--outcome", choices=("g", "e"), default="e",
                   help="qubit outcome selecting the cat parity branch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqcat",
        description="Run compressed-cat simulation experiments and write "
                    "their results as a directory of JSON and CSV files.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = _add_common(sub, "compress", "run a compression schedule and "
                                     "report the reached levels")
    p.add_argument("--level", type=int, default=-6,
                   help="design preset target in dB (ignored when the "
                        "config carries a schedule)")
    p.add_argument("--grid", metavar="MIN:MAX:N",
                   help="also emit the characteristic function on this grid")

    p = _add_common(sub, "cat", "prepare a compressed cat and report the "
                                "projection outcome")
    _add_state_options(p, default_label=-6.7)
    p.add_argument("--noisy", action="store_true",
                   help="run the preparation through the full noise model")
    p.add_argument("--grid", metavar="MIN:MAX:N",
                   help="also emit the characteristic function on this grid")

    p = _add_common(sub, "charfun", "characteristic function of a state "
                                    "on a grid")
    _add_state_options(p)
    p.add_argument("--grid", metavar="MIN:MAX:N", default="-5:5:201")

    p = _add_common(sub, "wigner", "Wigner map of a state via the "
                                   "characteristic transform")
    _add_state_options(p)
    p.add_argument("--grid", metavar="MIN:MAX:N", default="-5:5:201")

    p = _add_common(sub, "decay", "coherence-blob decay under photon loss")
    _add_state_options(p)
    p.add_argument("--times", metavar="MIN:MAX:N", default="0:150e-6:16")
    p.add_argument("--mode", choices=("filter", "lindblad"),
                   default="filter")
    p.add_argument("--offset", choices=("free", "zero"), default="free",
                   help="offset handling in the decay fit")
    p.add_argument("--bootstrap", type=int, default=200)

    p = _add_common(sub, "parity", "photon-number parity decay under "
                                   "photon loss")
    _add_state_options(p)
    p.add_argument("--times", metavar="MIN:MAX:N", default="0:150e-6:16")
    p.add_argument("--mode", choices=("filter", "lindblad"),
                   default="filter")
    p.add_argument("--shots", type=int, default=0,
                   help="add a binomially sampled readout column")
    p.add_argument("--bootstrap", type=int, default=200)

    p = _add_common(sub, "sweep", "blob and parity lifetimes across "
                                  "compression levels")
    p.add_argument("--levels", default="0,-3,-6,-9,-12",
                   help="comma-separated dB levels (must include 0)")
    p.add_argument("--alpha", type=float, default=1.8)
    p.add_argument("--times", metavar="MIN:MAX:N", default="0:150e-6:9")
    p.add_argument("--bootstrap", type=int, default=0)

    p = _add_common(sub, "budget", "per-channel preparation error budget")

    p = _add_common(sub, "optimize", "search step coefficients for a "
                                     "compression target")
    p.add_argument("--target-db", type=float, default=-6.0,
                   help="compression target in dB (ignored when the "
                        "config carries cat_target)")
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--restarts", type=int, default=8)

    p = _add_common(sub, "calibrate", "fit the dispersive shift and the "
                                      "cavity lifetime")
    p.add_argument("--chi-times", metavar="MIN:MAX:N", default="0:2e-6:9")
    p.add_argument("--t1-times", metavar="MIN:MAX:N",
                   default="10e-6:400e-6:9")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else Path("runs") / args.command
    out.mkdir(parents=True, exist_ok=True)
    try:
        config = io.read_json(args.config) if args.config else {}
        device = io.device_from_mapping(config.get("device", {}))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            payload = _HANDLERS[args.command](args, config, device, out)
        notes = sorted({str(w.message) for w in caught})
    except (ValueError, KeyError, OSError) as exc:
        io.write_json(out / "summary.json",
                      {"command": args.command, "failed": True,
                       "error": str(exc)})
        print(f"{args.command}: failed: {exc}", file=sys.stderr)
        return 2
    io.write_json(out / "config.json",
                  {"command": args.command, "seed": args.seed,
                   "device": dataclasses.asdict(device),
                   "parameters": payload["parameters"]})
    summary = {"command": args.command, "failed": False,
               "warnings": notes}
    summary.update(payload["summary"])
    io.write_json(out / "summary.json", summary)
    status = "failed" if summary["failed"] else "ok"
    print(f"{args.command}: {status}, wrote {out}")
    return 2 if summary["failed"] else 0


if __name__ == "__main__":
    sys.exit(main())
