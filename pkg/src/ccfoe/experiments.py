"""Monte-Carlo campaigns: stress scenarios, heatmap sweeps, single tracks and
fine-stage residuals. Everything here is deterministic given ``master_seed``."""

import dataclasses
import hashlib
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import coarse, fine
from .coarse import CoarseConfig
from .errors import ConfigurationError
from .spectral import downsample_factor
from .waveform import CfoProfile, ChannelConfig, DualPolSignal, TxConfig, impair, synthesize

DESK_SYMBOLS = 2**16
FULL_SYMBOLS = 2**18


def config_hash(obj):
    """Short, stable digest of a (nested) dataclass or dict."""
    if dataclasses.is_dataclass(obj):
        obj = dataclasses.asdict(obj)
    blob = json.dumps(obj, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _sps(fs_hz, rs_hz):
    ratio = fs_hz / rs_hz
    sps = int(round(ratio))
    if abs(ratio - sps) > 1e-9 * ratio or sps < 2 or sps & (sps - 1):
        raise ConfigurationError(f"Fs/Rs = {ratio:.6g} must be a power of two >= 2")
    return sps


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    rs_hz: float
    snr_b_db: float
    f_mean_max_hz: float
    f_pkpk_hz: float = 200e6
    f_j_hz: float = 100e3
    n_symbols: int = DESK_SYMBOLS
    n_realizations: int = 10
    master_seed: int = 0
    fs_hz: float = 64e9
    rolloff: float = 0.1
    rrc_span_symbols: int = 20
    coarse: CoarseConfig = field(default_factory=CoarseConfig)

    @property
    def df_max_hz(self):
        return self.f_mean_max_hz + self.f_pkpk_hz / 2

    def coarse_config(self):
        return dataclasses.replace(self.coarse, df_max_hz=self.df_max_hz)

    def check(self):
        """Raise ConfigurationError if the estimator cannot run on this spec."""
        _sps(self.fs_hz, self.rs_hz)
        downsample_factor(self.fs_hz, self.rs_hz, self.rolloff, self.df_max_hz)
        self.coarse_config()
        return self


SCENARIOS = {
    "a": ScenarioSpec("a", rs_hz=32e9, snr_b_db=15.0, f_mean_max_hz=10e9),
    "b": ScenarioSpec("b", rs_hz=32e9, snr_b_db=0.0, f_mean_max_hz=5e9),
    "c": ScenarioSpec("c", rs_hz=4e9, snr_b_db=15.0, f_mean_max_hz=1e9),
}


@dataclass(frozen=True)
class Realization:
    """Everything random about one channel realization."""

    index: int
    f_mean_hz: float
    prbs_seed_x: int
    prbs_seed_y: int
    noise_seed: int


def draw_realization(master_seed, index, f_mean_max_hz, orders=(15, 11), key=()):
    """Split one seeded stream per realization into PRBS, f_mean and noise streams."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(key) + (index,))
    s_prbs, s_mean, s_noise = ss.spawn(3)
    rng = np.random.default_rng(s_prbs)
    seed_x = int(rng.integers(1, 2 ** orders[0]))
    seed_y = int(rng.integers(1, 2 ** orders[1]))
    f_mean = float(np.random.default_rng(s_mean).uniform(-f_mean_max_hz, f_mean_max_hz))
    return Realization(index, f_mean, seed_x, seed_y, int(s_noise.generate_state(1)[0]))


def build_signal(spec, real, f_mean_hz=None):
    """Synthesize and impair one realization of ``spec``."""
    tx = TxConfig(spec.rs_hz, spec.rolloff, _sps(spec.fs_hz, spec.rs_hz), spec.rrc_span_symbols,
                  15, 11, real.prbs_seed_x, real.prbs_seed_y)
    cfo = CfoProfile(real.f_mean_hz if f_mean_hz is None else f_mean_hz, spec.f_pkpk_hz, spec.f_j_hz)
    sig = impair(synthesize(tx, spec.n_symbols), ChannelConfig(cfo, spec.snr_b_db, real.noise_seed), spec.rs_hz)
    return tx, cfo, sig


def run_realization(spec, index, key=()):
    """Track one realization and score it against the applied CFO."""
    real = draw_realization(spec.master_seed, index, spec.f_mean_max_hz, key=key)
    _, cfo, sig = build_signal(spec, real)
    cfg = spec.coarse_config()
    track = coarse.run_track(sig, cfg, spec.rs_hz, spec.rolloff)
    discard = cfg.convergence_blocks
    ok = sum(s is coarse.BlockStatus.OK for s in track.block_status)
    return {
        "realization": index,
        "f_mean_hz": real.f_mean_hz,
        "max_error_hz": track.max_error(cfo, discard),
        "max_raw_error_hz": track.max_error(cfo, discard, filtered=False),
        "blocks": len(track),
        "ok_blocks": ok,
        "seed": spec.master_seed,
        "noise_seed": real.noise_seed,
    }


def run_scenario(spec):
    """Per-realization rows plus a max-over-realizations summary."""
    spec.check()
    rows = [run_realization(spec, r) for r in range(spec.n_realizations)]
    h = config_hash(spec)
    for row in rows:
        row["config_hash"] = h
    summary = {
        "name": spec.name,
        "max_error_hz": max((r["max_error_hz"] for r in rows), default=float("nan")),
        "capture_limit_hz": spec.rs_hz / 8,
        "realizations": len(rows),
        "blocks_discarded": spec.coarse.convergence_blocks,
        "master_seed": spec.master_seed,
        "config_hash": h,
        "spec": dataclasses.asdict(spec),
    }
    return rows, summary


# ---------------------------------------------------------------------------
# heatmap sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    rs_hz: tuple = (4e9, 32e9)
    snr_b_db: tuple = (2.5, 5.0, 10.0)
    df_max_hz: tuple = (1e9, 2e9, 4e9)
    f_pkpk_hz: float = 200e6
    f_j_hz: float = 100e3
    n_symbols: int = DESK_SYMBOLS
    n_realizations: int = 10
    master_seed: int = 0
    fs_hz: float = 64e9
    rolloff: float = 0.1
    coarse: CoarseConfig = field(default_factory=CoarseConfig)

    def cells(self):
        return [(rs, snr, df) for rs in sorted(self.rs_hz) for snr in sorted(self.snr_b_db)
                for df in sorted(self.df_max_hz)]

    def cell_spec(self, rs, snr, df):
        return ScenarioSpec(
            f"Rs={rs:g},SNRb={snr:g},dfmax={df:g}", rs, snr, df, self.f_pkpk_hz, self.f_j_hz,
            self.n_symbols, self.n_realizations, self.master_seed, self.fs_hz, self.rolloff,
            coarse=self.coarse,
        )


def cell_key(rs, snr, df):
    """Stable seed key so a cell's draws do not depend on the rest of the grid."""
    return (zlib.crc32(repr((float(rs), float(snr), float(df))).encode()),)


def run_cell(sweep, cell):
    rs, snr, df = cell
    spec = sweep.cell_spec(rs, snr, df)
    row = {
        "rs_hz": rs, "snr_b_db": snr, "df_max_hz": df, "max_error_hz": float("nan"),
        "realizations": 0, "blocks_discarded": sweep.coarse.convergence_blocks,
        "status": "OK", "master_seed": sweep.master_seed,
    }
    try:
        spec.check()
    except ConfigurationError:
        row["status"] = "INFEASIBLE"
        return row
    errs = [run_realization(spec, r, key=cell_key(rs, snr, df))["max_error_hz"]
            for r in range(spec.n_realizations)]
    row["max_error_hz"] = max(errs, default=float("nan"))
    row["realizations"] = len(errs)
    row["status"] = "OK" if row["max_error_hz"] < rs / 8 else "ABOVE_RS_OVER_8"
    return row


def run_sweep(sweep, workers=1):
    cells = sweep.cells()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run_cell, [sweep] * len(cells), cells))
    else:
        rows = [run_cell(sweep, c) for c in cells]
    h = config_hash(sweep)
    for row in rows:
        row["config_hash"] = h
    rows.sort(key=lambda r: (r["rs_hz"], r["snr_b_db"], r["df_max_hz"]))
    return rows


# ---------------------------------------------------------------------------
# single track
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrackSpec:
    rs_hz: float = 4e9
    snr_b_db: float = 5.0
    f_mean_hz: float = 640e6
    f_pkpk_hz: float = 0.0
    f_j_hz: float = 0.0
    n_symbols: int = DESK_SYMBOLS
    master_seed: int = 0
    fs_hz: float = 32e9
    rolloff: float = 0.1
    rrc_span_symbols: int = 20
    coarse: CoarseConfig = field(default_factory=CoarseConfig)

    def as_scenario(self):
        return ScenarioSpec("track", self.rs_hz, self.snr_b_db, abs(self.f_mean_hz), self.f_pkpk_hz,
                            self.f_j_hz, self.n_symbols, 1, self.master_seed, self.fs_hz, self.rolloff,
                            self.rrc_span_symbols, self.coarse)


def synthesize_track_input(spec):
    """Signal and true CFO profile for a synthetic track run."""
    scen = spec.as_scenario()
    _sps(spec.fs_hz, spec.rs_hz)
    real = draw_realization(spec.master_seed, 0, 0.0)
    _, cfo, sig = build_signal(scen, real, f_mean_hz=spec.f_mean_hz)
    return sig, cfo


# ---------------------------------------------------------------------------
# fine-stage residuals after coarse compensation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualSpec:
    rs_hz: float = 4e9
    fs_hz: float = 32e9
    cfo_hz: tuple = (-4e9, -2e9, 0.0, 2e9, 4e9)
    snr_b_db: tuple = (0.0, 5.0, 10.0)
    f_pkpk_hz: float = 0.0
    f_j_hz: float = 0.0
    n_symbols: int = DESK_SYMBOLS
    n_realizations: int = 10
    master_seed: int = 0
    rolloff: float = 0.1
    rrc_span_symbols: int = 20
    n_fft_fine: int = 2**14
    coarse: CoarseConfig = field(default_factory=CoarseConfig)

    def cells(self):
        return [(c, s) for c in sorted(self.cfo_hz) for s in sorted(self.snr_b_db)]


def compensate_track(sig, track):
    """Phase-continuous removal of the per-block filtered estimate.

    Samples of a block without an estimate (and past the last full block)
    use the nearest earlier estimate, or zero before the first one.
    """
    est = np.asarray(track.filtered_hz, dtype=float)
    valid = ~np.isnan(est)
    filled = np.where(valid, est, 0.0)
    if valid.any():
        idx = np.where(valid, np.arange(est.size), -1)
        idx = np.maximum.accumulate(idx)
        filled = np.where(idx >= 0, est[np.maximum(idx, 0)], 0.0)
    per_sample = np.repeat(filled, track.n_fft)
    if per_sample.size < len(sig):
        tail = filled[-1] if filled.size else 0.0
        per_sample = np.concatenate((per_sample, np.full(len(sig) - per_sample.size, tail)))
    phase = 2 * np.pi * np.concatenate(([0.0], np.cumsum(per_sample[:-1]))) / sig.sample_rate_hz
    rot = np.exp(-1j * phase)
    return sig.replace(sig.x_pol * rot, sig.y_pol * rot)


def run_residual_realization(spec, cfo_hz, snr_db, index):
    key = (zlib.crc32(repr((float(cfo_hz), float(snr_db))).encode()),)
    real = draw_realization(spec.master_seed, index, 0.0, key=key)
    scen = ScenarioSpec("residual", spec.rs_hz, snr_db, abs(cfo_hz), spec.f_pkpk_hz, spec.f_j_hz,
                        spec.n_symbols, 1, spec.master_seed, spec.fs_hz, spec.rolloff,
                        spec.rrc_span_symbols, spec.coarse)
    tx, cfo, sig = build_signal(scen, real, f_mean_hz=cfo_hz)
    cfg = spec.coarse  # estimator range is fixed by the config, not by the applied CFO
    track = coarse.run_track(sig, cfg, spec.rs_hz, spec.rolloff)
    discard = cfg.convergence_blocks
    coarse_err = track.max_error(cfo, discard)
    post = track.filtered_hz[discard:]
    coarse_mean = float(np.nanmean(post)) if np.isfinite(post).any() else float("nan")
    row = {
        "cfo_hz": cfo_hz, "snr_b_db": snr_db, "realization": index,
        "coarse_hz": coarse_mean, "coarse_max_error_hz": coarse_err,
        "residual_x_hz": float("nan"), "residual_y_hz": float("nan"),
        "final_error_hz": float("nan"), "true_residual_hz": float("nan"), "status": "OK",
        "master_seed": spec.master_seed,
    }
    if not coarse_err < spec.rs_hz / 8:
        row["status"] = "CAPTURE_FAIL"
        return row
    comp = compensate_track(sig, track)
    start = discard * cfg.n_fft
    start -= start % tx.sps
    comp = DualPolSignal(comp.x_pol[start:], comp.y_pol[start:], comp.sample_rate_hz)
    stream = fine.matched_filter_decimate(comp, tx)
    n_fine = min(spec.n_fft_fine, 1 << (len(stream).bit_length() - 1))
    fx, fy = fine.fourth_power_cfoe(stream, n_fine)
    true_resid = float(np.mean(cfo.frequency(track.t_mid_s[discard:]) - post))
    row.update(residual_x_hz=fx, residual_y_hz=fy, true_residual_hz=true_resid,
               final_error_hz=max(abs(true_resid - fx), abs(true_resid - fy)))
    return row


def run_residual(spec):
    """Per-realization rows and a per-cell summary (max |residual| per polarization)."""
    rows = [run_residual_realization(spec, c, s, r)
            for c, s in spec.cells() for r in range(spec.n_realizations)]
    h = config_hash(spec)
    for row in rows:
        row["config_hash"] = h
    cells = []
    for c, s in spec.cells():
        sel = [r for r in rows if r["cfo_hz"] == c and r["snr_b_db"] == s]
        failed = any(r["status"] == "CAPTURE_FAIL" for r in sel)
        cells.append({
            "cfo_hz": c, "snr_b_db": s,
            "max_residual_x_hz": float("nan") if failed else max(abs(r["residual_x_hz"]) for r in sel),
            "max_residual_y_hz": float("nan") if failed else max(abs(r["residual_y_hz"]) for r in sel),
            "realizations": len(sel), "status": "CAPTURE_FAIL" if failed else "OK",
            "master_seed": spec.master_seed, "config_hash": h,
        })
    return rows, cells
