"""Block-wise coarse CFO estimation from the cumulative PSD."""

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import slr, spectral
from .errors import (
    BreakpointOutOfRange,
    ConfigurationError,
    DegenerateQuadratic,
    IllConditioned,
    InputError,
    NoBreakpoints,
)
from .waveform import CfoProfile, apply_cfo


class BlockStatus(str, enum.Enum):
    OK = "OK"
    NO_BREAKPOINTS = "NoBreakpoints"
    OUT_OF_RANGE = "OutOfRange"
    ILL_CONDITIONED = "IllConditioned"
    HELD_OVER = "HeldOver"


_STATUS_OF = {
    NoBreakpoints: BlockStatus.NO_BREAKPOINTS,
    DegenerateQuadratic: BlockStatus.NO_BREAKPOINTS,
    BreakpointOutOfRange: BlockStatus.OUT_OF_RANGE,
    IllConditioned: BlockStatus.ILL_CONDITIONED,
}


@dataclass(frozen=True)
class CoarseConfig:
    n_fft: int = 1024
    xi_fft: float = 0.98
    xi_est: float = 0.98
    df_max_hz: float = 5e9
    trim_frac: float = 0.02
    convergence_blocks: int = 100

    def __post_init__(self):
        if self.n_fft < 16 or self.n_fft & (self.n_fft - 1):
            raise ConfigurationError(f"n_fft must be a power of two >= 16, got {self.n_fft}")
        for name in ("xi_fft", "xi_est"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1), got {v}")
        if self.convergence_blocks < 0:
            raise ConfigurationError("convergence_blocks must be >= 0")


class BlockEstimate(tuple):
    """``(raw_hz, filtered_hz, status)`` for one FFT block."""

    __slots__ = ()

    def __new__(cls, raw_hz, filtered_hz, status):
        return super().__new__(cls, (raw_hz, filtered_hz, status))

    raw_hz = property(lambda self: self[0])
    filtered_hz = property(lambda self: self[1])
    status = property(lambda self: self[2])


class CoarseEstimator:
    """Running estimator state: smoothed PSD plus the smoothed CFO estimate.

    Blocks must be fed in time order.
    """

    def __init__(self, cfg, fs_hz, rs_hz, rolloff):
        self.cfg = cfg
        self.fs_hz = float(fs_hz)
        self.n_down = spectral.downsample_factor(fs_hz, rs_hz, rolloff, cfg.df_max_hz)
        if cfg.n_fft % self.n_down or cfg.n_fft // self.n_down < 16:
            raise ConfigurationError(
                f"n_fft={cfg.n_fft} too small for a decimation of {self.n_down}"
            )
        self.state = spectral.SpectralState(cfg.xi_fft)
        self.filtered_hz = np.nan
        self._est_weight = 0.0
        self.last_curve = None
        self.last_breakpoints = None

    @property
    def df_hz(self):
        """Bin width of the periodogram (unchanged by truncation)."""
        return self.fs_hz / self.cfg.n_fft

    @property
    def hz_per_unit(self):
        return self.fs_hz / self.n_down

    def curve(self):
        """Normalized cumulative curve of the current smoothed PSD."""
        trunc = spectral.truncate_spectrum(self.state.ewma_psd, self.n_down)
        cum = spectral.accumulate(trunc)
        return spectral.trim_and_normalize(cum, trunc.df_hz, self.cfg.trim_frac)

    def update(self, x_block, y_block):
        block = spectral.block_psd(x_block, y_block, self.cfg.n_fft, self.fs_hz)
        self.state = spectral.ewma_update(self.state, block)
        try:
            curve = self.curve()
        except InputError:
            return BlockEstimate(np.nan, self.filtered_hz, BlockStatus.HELD_OVER)
        try:
            psi1, psi2, _ = slr.fit_breakpoints(curve.x, curve.y)
        except tuple(_STATUS_OF) as exc:
            return BlockEstimate(np.nan, self.filtered_hz, _STATUS_OF[type(exc)])
        self.last_curve = curve
        self.last_breakpoints = (psi1, psi2)
        raw = 0.5 * (psi1 + psi2) * curve.hz_per_unit
        gain, self._est_weight = spectral.ewma_gain(self.cfg.xi_est, self._est_weight)
        if np.isnan(self.filtered_hz):
            self.filtered_hz = raw
        else:
            self.filtered_hz += gain * (raw - self.filtered_hz)
        return BlockEstimate(raw, self.filtered_hz, BlockStatus.OK)


def estimate_block(estimator, x_block, y_block):
    return estimator.update(x_block, y_block)


@dataclass
class CfoTrack:
    raw_hz: np.ndarray
    filtered_hz: np.ndarray
    block_status: list
    n_fft: int
    fs_hz: float
    n_down: int
    final_curve: Optional[spectral.CumulativeCurve] = None
    final_breakpoints: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.raw_hz.shape[0]

    @property
    def t_mid_s(self):
        """Temporal midpoint of every block."""
        return (np.arange(len(self)) * self.n_fft + (self.n_fft - 1) / 2) / self.fs_hz

    @property
    def df_truncated_hz(self):
        return self.fs_hz / self.n_fft

    def final_fit(self):
        if self.final_curve is None:
            return None
        c = self.final_curve
        return slr.fit_slopes(c.x, c.y, *self.final_breakpoints)

    def max_error(self, cfo, discard=0, filtered=True):
        """Largest ``|true - estimate|`` over blocks ``k >= discard``.

        Blocks with no estimate yet count as infinite error.
        """
        est = self.filtered_hz if filtered else self.raw_hz
        err = np.abs(cfo.frequency(self.t_mid_s) - est)[discard:]
        if err.size == 0:
            return np.nan
        return float(np.max(np.where(np.isnan(err), np.inf, err)))


def run_track(sig, cfg, rs_hz, rolloff):
    n_blocks = len(sig) // cfg.n_fft
    if n_blocks < 1:
        raise InputError(f"signal of {len(sig)} samples is shorter than one {cfg.n_fft}-sample block")
    if n_blocks < cfg.convergence_blocks:
        warnings.warn(
            f"only {n_blocks} blocks available, fewer than convergence_blocks={cfg.convergence_blocks}",
            stacklevel=2,
        )
    est = CoarseEstimator(cfg, sig.sample_rate_hz, rs_hz, rolloff)
    raw = np.empty(n_blocks)
    filt = np.empty(n_blocks)
    status = []
    for k, (xb, yb) in enumerate(spectral.iter_blocks(sig, cfg.n_fft)):
        raw[k], filt[k], s = est.update(xb, yb)
        status.append(s)
    return CfoTrack(
        raw, filt, status, cfg.n_fft, sig.sample_rate_hz, est.n_down,
        est.last_curve, est.last_breakpoints,
    )


def compensate(sig, df_hz):
    """Remove a constant frequency offset."""
    return apply_cfo(sig, CfoProfile(-float(df_hz)))
