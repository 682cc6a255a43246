"""Command-line entry points: ``scenario``, ``sweep``, ``track`` and ``residual``.

Every command reads an optional JSON config whose keys mirror the fields of
the matching spec dataclass (``coarse`` is a nested object), applies flag
overrides, and writes ``<command>.csv`` plus ``<command>.json`` into ``--out``.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 threshold
breach under ``--assert``.
"""

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import warnings

import numpy as np

from . import capture, coarse, experiments
from .coarse import CoarseConfig
from .errors import CaptureError, ConfigurationError, InputError
from .experiments import ResidualSpec, ScenarioSpec, SweepSpec, TrackSpec

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_BREACH = 0, 1, 2, 3

FULL_SCALE = {"scenario": 50, "sweep": 100}

SCENARIO_COLUMNS = ["realization", "f_mean_hz", "max_error_hz", "max_raw_error_hz", "blocks",
                    "ok_blocks", "seed", "noise_seed", "config_hash"]
SWEEP_COLUMNS = ["rs_hz", "snr_b_db", "df_max_hz", "max_error_hz", "realizations",
                 "blocks_discarded", "status", "master_seed", "config_hash"]
TRACK_COLUMNS = ["block", "t_mid_s", "raw_hz", "filtered_hz", "status"]
RESIDUAL_COLUMNS = ["cfo_hz", "snr_b_db", "realization", "coarse_hz", "coarse_max_error_hz",
                    "residual_x_hz", "residual_y_hz", "true_residual_hz", "final_error_hz",
                    "status", "master_seed", "config_hash"]
RESIDUAL_CELL_COLUMNS = ["cfo_hz", "snr_b_db", "max_residual_x_hz", "max_residual_y_hz",
                         "realizations", "status", "master_seed", "config_hash"]


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def load_config(path):
    """Read a JSON config object; ``None`` gives an empty config."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    return cfg


def _coerce(value):
    return tuple(value) if isinstance(value, list) else value


def build_spec(cls, data, base=None):
    """Instantiate ``cls`` from ``data`` layered over ``base`` (or defaults)."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kw = {}
    for key, value in data.items():
        if key == "coarse":
            if not isinstance(value, dict):
                raise ConfigurationError("'coarse' must be a JSON object")
            start = base.coarse if base is not None else CoarseConfig()
            value = build_spec(CoarseConfig, value, start)
        kw[key] = _coerce(value)
    try:
        if base is not None:
            return dataclasses.replace(base, **kw)
        return cls(**kw)
    except TypeError as exc:
        raise ConfigurationError(f"{cls.__name__}: {exc}") from exc


def _overrides(args, command):
    """Flag overrides in precedence order: full-scale first, explicit flags last."""
    out = {}
    if getattr(args, "full_scale", False):
        out["n_symbols"] = experiments.FULL_SYMBOLS
        if command in FULL_SCALE:
            out["n_realizations"] = FULL_SCALE[command]
    if args.seed is not None:
        out["master_seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        out["n_realizations"] = args.realizations
    if args.symbols is not None:
        out["n_symbols"] = args.symbols
    return out


def _check_counts(spec):
    n_sym = getattr(spec, "n_symbols", 1)
    n_real = getattr(spec, "n_realizations", 1)
    if int(n_sym) != n_sym or n_sym < 1:
        raise ConfigurationError(f"n_symbols must be a positive integer, got {n_sym}")
    if int(n_real) != n_real or n_real < 1:
        raise ConfigurationError(f"n_realizations must be a positive integer, got {n_real}")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, coarse.BlockStatus):
        return obj.value
    return obj


def _fmt(value):
    if isinstance(value, coarse.BlockStatus):
        return value.value
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_scenario(args):
    cfg = load_config(args.config)
    preset = args.preset or cfg.pop("preset", None)
    if preset is not None and preset not in experiments.SCENARIOS:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(experiments.SCENARIOS)}")
    if preset is None and "name" not in cfg:
        cfg.setdefault("name", "custom")
    base = experiments.SCENARIOS[preset] if preset else None
    if base is None:
        missing = {"rs_hz", "snr_b_db", "f_mean_max_hz"} - cfg.keys()
        if missing:
            raise ConfigurationError(f"scenario needs --preset or config keys {sorted(missing)}")
    cfg.update(_overrides(args, "scenario"))
    spec = build_spec(ScenarioSpec, cfg, base)
    _check_counts(spec)
    spec.check()
    rows, summary = experiments.run_scenario(spec)
    limit = args.threshold_hz if args.threshold_hz is not None else spec.rs_hz / 8
    summary["assert_threshold_hz"] = limit
    out = _outdir(args)
    write_csv(os.path.join(out, "scenario.csv"), SCENARIO_COLUMNS, rows)
    write_json(os.path.join(out, "scenario.json"), summary)
    err = summary["max_error_hz"]
    print(f"scenario {spec.name}: max error {err / 1e6:.2f} MHz over {len(rows)} realizations "
          f"(limit {limit / 1e6:.2f} MHz)")
    return not (err < limit)


def cmd_sweep(args):
    cfg = load_config(args.config)
    cfg.update(_overrides(args, "sweep"))
    spec = build_spec(SweepSpec, cfg)
    _check_counts(spec)
    rows = experiments.run_sweep(spec, workers=args.workers)
    out = _outdir(args)
    write_csv(os.path.join(out, "sweep.csv"), SWEEP_COLUMNS, rows)
    write_json(os.path.join(out, "sweep.json"), {
        "cells": len(rows),
        "above_rs_over_8": sum(r["status"] == "ABOVE_RS_OVER_8" for r in rows),
        "infeasible": sum(r["status"] == "INFEASIBLE" for r in rows),
        "master_seed": spec.master_seed,
        "config_hash": experiments.config_hash(spec),
        "spec": dataclasses.asdict(spec),
    })
    bad = [r for r in rows if r["status"] == "ABOVE_RS_OVER_8"]
    print(f"sweep: {len(rows)} cells, {len(bad)} above Rs/8")
    return bool(bad)


def _track_from_capture(args, cfg):
    ccfg = build_spec(CoarseConfig, cfg.get("coarse", {}))
    sig, meta = capture.read_capture(args.input, block_len=ccfg.n_fft)
    info = {"source": os.path.abspath(args.input), **dataclasses.asdict(meta),
            "coarse": dataclasses.asdict(ccfg)}
    return sig, None, ccfg, meta.symbol_rate_hz, meta.rolloff, info


def cmd_track(args):
    cfg = load_config(args.config)
    if args.input is not None:
        extra = set(cfg) - {"coarse"}
        if extra:
            raise ConfigurationError(f"with --input only 'coarse' may be configured, got {sorted(extra)}")
        if args.export_iq:
            raise ConfigurationError("--export-iq applies to synthetic tracks only")
        sig, cfo, ccfg, rs, rolloff, info = _track_from_capture(args, cfg)
        seed, h = None, experiments.config_hash(info)
    else:
        over = _overrides(args, "track")
        over.pop("n_realizations", None)
        cfg.update(over)
        spec = build_spec(TrackSpec, cfg)
        _check_counts(spec)
        spec.as_scenario().check()
        sig, cfo = experiments.synthesize_track_input(spec)
        ccfg, rs, rolloff = spec.coarse, spec.rs_hz, spec.rolloff
        seed, h = spec.master_seed, experiments.config_hash(spec)
        info = {"source": "synthetic", "spec": dataclasses.asdict(spec)}
        if args.export_iq:
            capture.write_capture(args.export_iq, sig, rs, rolloff)
    track = coarse.run_track(sig, ccfg, rs, rolloff)
    t_mid = track.t_mid_s
    true_hz = cfo.frequency(t_mid) if cfo is not None else None
    rows = []
    for k in range(len(track)):
        row = {"block": k, "t_mid_s": t_mid[k], "raw_hz": track.raw_hz[k],
               "filtered_hz": track.filtered_hz[k], "status": track.block_status[k],
               "config_hash": h}
        if true_hz is not None:
            row["true_hz"] = true_hz[k]
            row["master_seed"] = seed
        rows.append(row)
    columns = TRACK_COLUMNS + (["true_hz", "master_seed"] if cfo is not None else []) + ["config_hash"]
    out = _outdir(args)
    write_csv(os.path.join(out, "track.csv"), columns, rows)

    fit = track.final_fit()
    curve = track.final_curve
    summary = {
        **info,
        "config_hash": h,
        "blocks": len(track),
        "n_down": track.n_down,
        "final_filtered_hz": track.filtered_hz[-1],
        "status_counts": {s.value: sum(b is s for b in track.block_status) for s in coarse.BlockStatus},
        "curve": None if curve is None else {
            "x": curve.x, "y": curve.y, "hz_per_unit": curve.hz_per_unit,
        },
        "fit": None if fit is None else {
            **fit.as_dict(),
            "breakpoints_hz": [fit.psi1 * curve.hz_per_unit, fit.psi2 * curve.hz_per_unit],
        },
    }
    ok = True
    if cfo is not None:
        discard = min(ccfg.convergence_blocks, max(len(track) - 1, 0))
        err = track.max_error(cfo, discard)
        summary["max_error_hz"] = err
        summary["blocks_discarded"] = discard
        ok = err < rs / 8
        print(f"track: {len(track)} blocks, final {track.filtered_hz[-1] / 1e6:.2f} MHz, "
              f"max error {err / 1e6:.2f} MHz")
    else:
        ok = bool(np.isfinite(track.filtered_hz[-1]))
        print(f"track: {len(track)} blocks, final {track.filtered_hz[-1] / 1e6:.2f} MHz")
    write_json(os.path.join(out, "track.json"), summary)
    return not ok


def cmd_residual(args):
    cfg = load_config(args.config)
    cfg.update(_overrides(args, "residual"))
    spec = build_spec(ResidualSpec, cfg)
    _check_counts(spec)
    experiments._sps(spec.fs_hz, spec.rs_hz)
    rows, cells = experiments.run_residual(spec)
    out = _outdir(args)
    write_csv(os.path.join(out, "residual.csv"), RESIDUAL_COLUMNS, rows)
    write_csv(os.path.join(out, "residual_cells.csv"), RESIDUAL_CELL_COLUMNS, cells)
    write_json(os.path.join(out, "residual.json"), {
        "cells": cells, "master_seed": spec.master_seed,
        "config_hash": experiments.config_hash(spec), "spec": dataclasses.asdict(spec),
    })
    failed = [c for c in cells if c["status"] != "OK"]
    print(f"residual: {len(cells)} cells, {len(failed)} capture failures")
    return bool(failed)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p, realizations=True):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed")
    if realizations:
        p.add_argument("--realizations", type=int, help="number of channel realizations")
    p.add_argument("--symbols", type=int, help="transmitted symbols per realization")
    p.add_argument("--full-scale", action="store_true",
                   help="50 (scenario) or 100 (sweep) realizations and 2**18 symbols")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 3 if the result breaches its threshold")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not argparse's default exit 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="ccfoe", description="Coarse CFO estimation by segmented regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="stress scenario over random channel realizations")
    _common(p)
    p.add_argument("--preset", choices=sorted(experiments.SCENARIOS), help="built-in scenario")
    p.add_argument("--threshold-hz", type=float, help="--assert limit (default Rs/8)")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("sweep", help="max-error grid over (Rs, SNR_b, df_max)")
    _common(p)
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("track", help="per-block track of one capture or synthetic signal")
    _common(p, realizations=False)
    p.add_argument("--input", help="capture file (sidecar <file>.json required)")
    p.add_argument("--export-iq", help="write the synthetic signal as a capture file")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("residual", help="fine-stage residuals after coarse compensation")
    _common(p)
    p.set_defaults(func=cmd_residual)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            breach = args.func(args)
    except (ConfigurationError, InputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CaptureError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if breach and args.check:
        print("threshold breached", file=sys.stderr)
        return EXIT_BREACH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
