"""Block periodogram, EWMA smoothing and the normalized cumulative PSD."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InputError


@dataclass(frozen=True)
class SpectralBlock:
    """Periodogram bins ``|Y[k]|**2`` in DC-centered order.

    Bin ``k`` sits at ``(k - n_fft // 2) * df_hz``.
    """

    bins: np.ndarray
    df_hz: float
    n_fft: int

    def __post_init__(self):
        if self.bins.shape != (self.n_fft,):
            raise InputError(f"expected {self.n_fft} bins, got shape {self.bins.shape}")

    def frequencies(self):
        return (np.arange(self.n_fft) - self.n_fft // 2) * self.df_hz


@dataclass(frozen=True)
class SpectralState:
    """Running PSD average; ``weight`` is the accumulated EWMA weight
    ``1 - xi**blocks_seen`` used to normalize the average."""

    xi_fft: float
    ewma_psd: Optional[SpectralBlock] = None
    blocks_seen: int = 0
    weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.xi_fft < 1.0:
            raise ConfigurationError(f"xi_fft must lie in [0, 1), got {self.xi_fft}")


@dataclass(frozen=True)
class CumulativeCurve:
    """Normalized cumulative PSD ready for the segmented fit.

    ``x`` is frequency in units of ``hz_per_unit`` (the full retained band
    before edge trimming), so ``x * hz_per_unit`` is absolute frequency.
    """

    x: np.ndarray
    y: np.ndarray
    hz_per_unit: float

    def to_hz(self, x):
        return np.asarray(x) * self.hz_per_unit


def _is_pow2(n):
    return n >= 1 and not n & (n - 1)


def block_psd(x_block, y_block, n_fft, fs_hz):
    """Combined periodogram of both polarizations (rectangular window)."""
    if not _is_pow2(n_fft):
        raise ConfigurationError(f"n_fft must be a power of two, got {n_fft}")
    x_block = np.asarray(x_block)
    y_block = np.asarray(y_block)
    if x_block.shape != (n_fft,) or y_block.shape != (n_fft,):
        raise InputError(f"blocks must have length {n_fft}, got {x_block.shape} and {y_block.shape}")
    spec = np.fft.fftshift(np.fft.fft(np.stack((x_block, y_block))), axes=-1)
    bins = spec.real**2 + spec.imag**2
    return SpectralBlock(bins[0] + bins[1], fs_hz / n_fft, n_fft)


def ewma_gain(xi, weight):
    """Gain and updated weight of a weight-normalized EWMA.

    The average equals ``sum(xi**(k-i) * v_i) / sum(xi**(k-i))``: the first
    sample initializes it (gain 1) and the gain decays to ``1 - xi``.
    """
    weight = xi * weight + (1.0 - xi)
    return (1.0 - xi) / weight, weight


def ewma_update(state, new):
    """Fold one periodogram into the running average."""
    prev = state.ewma_psd
    gain, weight = ewma_gain(state.xi_fft, state.weight)
    if prev is None:
        bins = new.bins.copy()
    else:
        if prev.n_fft != new.n_fft or not math.isclose(prev.df_hz, new.df_hz, rel_tol=1e-12):
            raise InputError("bin grid of the new block does not match the running PSD")
        bins = prev.bins + gain * (new.bins - prev.bins)
    return SpectralState(
        state.xi_fft, SpectralBlock(bins, new.df_hz, new.n_fft), state.blocks_seen + 1, weight
    )


def downsample_factor(fs_hz, rs_hz, rolloff, df_max_hz):
    """Largest power-of-two decimation that keeps the offset signal band and
    the noise-floor margin inside Nyquist."""
    half_band = max(rs_hz * (1 + rolloff) / 2 + abs(df_max_hz), rs_hz)
    need = 2 * half_band
    if fs_hz < need * (1 - 1e-12):
        raise ConfigurationError(
            f"sample rate {fs_hz:.6g} Hz cannot hold the offset band: need >= {need:.6g} Hz "
            f"(Rs={rs_hz:.6g}, rolloff={rolloff}, df_max={df_max_hz:.6g})"
        )
    return 1 << max(0, int(math.floor(math.log2(fs_hz / need) + 1e-12)))


def truncate_spectrum(block, n_down):
    """Keep the central ``n_fft / n_down`` bins."""
    if not _is_pow2(n_down) or block.n_fft % n_down:
        raise ConfigurationError(f"n_down={n_down} is not a power-of-two divisor of {block.n_fft}")
    if n_down == 1:
        return block
    m = block.n_fft // n_down
    start = block.n_fft // 2 - m // 2
    return SpectralBlock(block.bins[start : start + m].copy(), block.df_hz, m)


def accumulate(block):
    """Running integral of the PSD over frequency, ``(1/N) sum |Y|^2 df``."""
    if np.any(block.bins < 0):
        raise InputError("PSD bins must be nonnegative")
    return np.cumsum(block.bins) * (block.df_hz / block.n_fft)


def trim_and_normalize(cum, df_hz, trim_frac):
    """Drop edge bins and scale both axes.

    Sample ``m`` of an ``M``-point cumulative sequence integrates up to the
    upper edge of bin ``m``, placed at ``(m - M/2 + 1/2) / M`` on the
    normalized axis. ``ceil(trim_frac * M)`` points are removed at each end;
    the remaining ``y`` is mapped onto ``[0, 1]``.
    """
    if not 0.0 <= trim_frac < 0.25:
        raise ConfigurationError(f"trim_frac must lie in [0, 0.25), got {trim_frac}")
    cum = np.asarray(cum, dtype=float)
    m = cum.shape[0]
    x = (np.arange(m) - m / 2 + 0.5) / m
    k = math.ceil(round(trim_frac * m, 9))
    if m - 2 * k < 8:
        raise InputError(f"only {m - 2 * k} points left after trimming {k} per edge")
    x = x[k : m - k]
    y = cum[k : m - k]
    lo = y.min()
    span = y.max() - lo
    if not span > 0:
        raise InputError("cumulative PSD is flat; nothing to normalize")
    return CumulativeCurve(x, (y - lo) / span, m * df_hz)


def iter_blocks(sig, n_fft):
    """Consecutive non-overlapping blocks; a trailing partial block is dropped."""
    for k in range(len(sig) // n_fft):
        s = slice(k * n_fft, (k + 1) * n_fft)
        yield sig.x_pol[s], sig.y_pol[s]
