"""Fine stage: matched filter, symbol-rate decimation and the 4th-power estimator."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve

from .errors import ConfigurationError, InputError


@dataclass(frozen=True)
class SymbolStream:
    x_symbols: np.ndarray
    y_symbols: np.ndarray
    symbol_rate_hz: float

    def __len__(self):
        return self.x_symbols.shape[0]


def matched_filter_decimate(sig, cfg, discard_symbols=None):
    """Filter with the transmit RRC taps and sample at the symbol instants.

    Timing is ideal: symbol ``k`` sits at sample ``k * sps`` because the
    transmit shaping removes its own group delay. The first and last
    ``discard_symbols`` symbols (default: the RRC span) carry filter
    transients and are dropped.
    """
    ratio = sig.sample_rate_hz / cfg.symbol_rate_hz
    sps = int(round(ratio))
    if sps < 1 or abs(ratio - sps) > 1e-9 * ratio:
        raise ConfigurationError(f"samples per symbol {ratio:.6g} is not an integer")
    if sps != cfg.sps:
        raise ConfigurationError(f"signal has {sps} samples/symbol but TxConfig says {cfg.sps}")
    span = cfg.rrc_span_symbols if discard_symbols is None else int(discard_symbols)
    taps = cfg.taps()
    delay = (len(taps) - 1) // 2
    n_sym = len(sig) // sps
    if n_sym <= 2 * span:
        raise InputError(f"{n_sym} symbols do not survive discarding {span} at each end")
    out = []
    for pol in (sig.x_pol, sig.y_pol):
        filt = oaconvolve(pol, taps)[delay : delay + len(sig)]
        out.append(filt[: n_sym * sps : sps][span : n_sym - span] / np.sqrt(sps))
    return SymbolStream(out[0], out[1], cfg.symbol_rate_hz)


def fourth_power_spectrum(symbols, n_fft):
    """DC-centered magnitude spectrum of ``symbols**4`` over the first ``n_fft`` symbols."""
    symbols = np.asarray(symbols)
    if symbols.shape[0] < n_fft:
        raise InputError(f"need {n_fft} symbols, got {symbols.shape[0]}")
    return np.abs(np.fft.fftshift(np.fft.fft(symbols[:n_fft] ** 4)))


def estimate_fourth_power(symbols, symbol_rate_hz, n_fft):
    """Frequency offset of one polarization, folded into ``(-Rs/8, Rs/8]``."""
    mag = fourth_power_spectrum(symbols, n_fft)
    k = int(np.argmax(mag))
    # parabolic peak interpolation on log-magnitude (neighbours wrap around)
    tiny = np.finfo(float).tiny
    lm, c, rm = np.log(np.maximum(mag[[(k - 1) % n_fft, k, (k + 1) % n_fft]], tiny))
    den = lm - 2 * c + rm
    delta = 0.5 * (lm - rm) / den if den < 0 else 0.0
    est = (k - n_fft // 2 + delta) * symbol_rate_hz / n_fft / 4
    quarter = symbol_rate_hz / 4
    if est <= -quarter / 2:
        est += quarter
    elif est > quarter / 2:
        est -= quarter
    return float(est)


def fourth_power_cfoe(stream, n_fft_fine):
    """Per-polarization 4th-power estimates ``(f_x, f_y)`` in Hz."""
    return (
        estimate_fourth_power(stream.x_symbols, stream.symbol_rate_hz, n_fft_fine),
        estimate_fourth_power(stream.y_symbols, stream.symbol_rate_hz, n_fft_fine),
    )
