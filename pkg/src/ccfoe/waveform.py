"""Dual-polarization QPSK synthesis and channel impairments."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import upfirdn

from . import kernels
from .errors import ConfigurationError, InputError

# Exponent of the middle term of the primitive trinomial x^order + x^tap + 1.
PRBS_TAPS = {7: 6, 9: 5, 11: 9, 15: 14, 23: 18, 31: 28}


@dataclass(frozen=True)
class DualPolSignal:
    x_pol: np.ndarray
    y_pol: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        x = np.asarray(self.x_pol, dtype=np.complex128)
        y = np.asarray(self.y_pol, dtype=np.complex128)
        if x.ndim != 1 or x.shape != y.shape or x.shape[0] < 1:
            raise InputError(f"polarizations must be equal-length 1-D arrays, got {x.shape} and {y.shape}")
        if not self.sample_rate_hz > 0:
            raise InputError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "x_pol", x)
        object.__setattr__(self, "y_pol", y)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.x_pol.shape[0]

    def times(self):
        return np.arange(len(self)) / self.sample_rate_hz

    def replace(self, x_pol, y_pol):
        return DualPolSignal(x_pol, y_pol, self.sample_rate_hz)


@dataclass(frozen=True)
class TxConfig:
    symbol_rate_hz: float
    rolloff: float = 0.1
    sps: int = 16
    rrc_span_symbols: int = 20
    prbs_order_x: int = 15
    prbs_order_y: int = 11
    prbs_seed: int = 1
    prbs_seed_y: Optional[int] = None  # None: reuse prbs_seed

    def __post_init__(self):
        if not self.symbol_rate_hz > 0:
            raise ConfigurationError("symbol_rate_hz must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigurationError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if self.sps < 2 or self.sps & (self.sps - 1):
            raise ConfigurationError(f"sps must be a power of two >= 2, got {self.sps}")
        if self.rrc_span_symbols < 2 or self.rrc_span_symbols % 2:
            raise ConfigurationError(f"rrc_span_symbols must be a positive even integer, got {self.rrc_span_symbols}")
        for order in (self.prbs_order_x, self.prbs_order_y):
            if order not in PRBS_TAPS:
                raise ConfigurationError(f"unsupported PRBS order {order}")

    @property
    def sample_rate_hz(self):
        return self.symbol_rate_hz * self.sps

    @property
    def n_taps(self):
        return self.rrc_span_symbols * self.sps + 1

    def taps(self):
        return rrc_taps(self.rolloff, self.rrc_span_symbols, self.sps)


@dataclass(frozen=True)
class CfoProfile:
    """Sinusoidal frequency deviation ``f_mean + (f_pkpk / 2) sin(2 pi f_j t)``."""

    f_mean_hz: float
    f_pkpk_hz: float = 0.0
    f_j_hz: float = 0.0

    def __post_init__(self):
        if self.f_pkpk_hz < 0 or self.f_j_hz < 0:
            raise ConfigurationError("f_pkpk_hz and f_j_hz must be nonnegative")
        if self.f_pkpk_hz > 0 and not self.f_j_hz > 0:
            raise ConfigurationError("a nonzero excursion needs a positive f_j_hz")

    @property
    def max_abs_hz(self):
        return abs(self.f_mean_hz) + 0.5 * self.f_pkpk_hz

    def frequency(self, t):
        t = np.asarray(t, dtype=float)
        if self.f_pkpk_hz == 0:
            return np.full_like(t, self.f_mean_hz)
        return self.f_mean_hz + 0.5 * self.f_pkpk_hz * np.sin(2 * np.pi * self.f_j_hz * t)

    def phase(self, t):
        """Integral of ``2 pi frequency`` from 0 to ``t`` (zero at ``t = 0``)."""
        t = np.asarray(t, dtype=float)
        phi = 2 * np.pi * self.f_mean_hz * t
        if self.f_pkpk_hz:
            phi = phi + (self.f_pkpk_hz / (2 * self.f_j_hz)) * (1 - np.cos(2 * np.pi * self.f_j_hz * t))
        return phi


@dataclass(frozen=True)
class ChannelConfig:
    cfo: CfoProfile = field(default_factory=lambda: CfoProfile(0.0))
    snr_per_bit_db: float = float("inf")
    noise_seed: int = 0


def gen_prbs(order, seed, n_bits):
    """Maximal-length LFSR bits for the primitive trinomial of ``order``.

    Bits ``0 .. order-1`` of ``seed`` are the first ``order`` output bits;
    the sequence repeats with period ``2**order - 1``.
    """
    if order not in PRBS_TAPS:
        raise ConfigurationError(f"unsupported PRBS order {order}; choose from {sorted(PRBS_TAPS)}")
    state = int(seed) & ((1 << order) - 1)
    if state == 0:
        raise ConfigurationError(f"seed {seed} gives an all-zero register for order {order}")
    if n_bits < 1:
        raise InputError("n_bits must be >= 1")
    return kernels.lfsr(order, PRBS_TAPS[order], state, int(n_bits))


def map_qpsk_gray(bits):
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1 or bits.shape[0] % 2:
        raise InputError(f"QPSK mapping needs an even number of bits, got {bits.shape[0]}")
    b_im = bits[0::2].astype(float)
    b_re = bits[1::2].astype(float)
    return ((1 - 2 * b_re) + 1j * (1 - 2 * b_im)) / np.sqrt(2)


def rrc_taps(rolloff, span_symbols, sps):
    """Unit-energy root-raised-cosine taps, ``span_symbols * sps + 1`` long."""
    if not 0.0 <= rolloff <= 1.0:
        raise ConfigurationError(f"rolloff must lie in [0, 1], got {rolloff}")
    if span_symbols < 2 or span_symbols % 2:
        raise ConfigurationError(f"span must be a positive even integer, got {span_symbols}")
    if sps < 2:
        raise ConfigurationError(f"sps must be >= 2, got {sps}")
    a = float(rolloff)
    half = span_symbols * sps // 2
    t = np.arange(-half, half + 1) / sps
    h = np.empty_like(t)

    at_zero = t == 0
    if a > 0:
        at_sing = np.isclose(np.abs(t), 1 / (4 * a), rtol=0, atol=1e-12)
    else:
        at_sing = np.zeros_like(at_zero)
    reg = ~(at_zero | at_sing)
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - a)) + 4 * a * tr * np.cos(np.pi * tr * (1 + a))) / (
        np.pi * tr * (1 - (4 * a * tr) ** 2)
    )
    h[at_zero] = 1 - a + 4 * a / np.pi
    if a > 0:
        h[at_sing] = (a / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * a)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a))
        )
    return h / np.sqrt(np.sum(h * h))


def pulse_shape(symbols, taps, sps):
    """Zero-stuff by ``sps`` and filter; output is trimmed to ``len(symbols) * sps``
    samples with the group delay removed, and scaled to unit mean power."""
    delay = (len(taps) - 1) // 2
    full = upfirdn(taps, symbols, up=sps)
    n = len(symbols) * sps
    out = np.zeros(n, dtype=np.complex128)
    seg = full[delay : delay + n]
    out[: seg.shape[0]] = seg
    return out * np.sqrt(sps)


def tx_symbols(cfg, n_symbols):
    """Transmitted QPSK symbols for both polarizations."""
    seed_y = cfg.prbs_seed if cfg.prbs_seed_y is None else cfg.prbs_seed_y
    sx = map_qpsk_gray(gen_prbs(cfg.prbs_order_x, cfg.prbs_seed, 2 * n_symbols))
    sy = map_qpsk_gray(gen_prbs(cfg.prbs_order_y, seed_y, 2 * n_symbols))
    return sx, sy


def synthesize(cfg, n_symbols):
    """PRBS -> Gray QPSK -> RRC pulse shaping, per polarization."""
    if n_symbols < cfg.rrc_span_symbols:
        raise InputError(f"n_symbols must be >= rrc_span_symbols ({cfg.rrc_span_symbols})")
    taps = cfg.taps()
    sx, sy = tx_symbols(cfg, n_symbols)
    return DualPolSignal(
        pulse_shape(sx, taps, cfg.sps), pulse_shape(sy, taps, cfg.sps), cfg.sample_rate_hz
    )


def apply_cfo(sig, cfo):
    if cfo.f_mean_hz == 0 and cfo.f_pkpk_hz == 0:
        return sig
    rot = np.exp(1j * cfo.phase(sig.times()))
    return sig.replace(sig.x_pol * rot, sig.y_pol * rot)


def noise_variance(signal_power, snr_per_bit_db, sps):
    """Per-sample complex noise variance for a given SNR per bit (QPSK, 2 bits/symbol)."""
    return signal_power * sps / (2 * 10 ** (snr_per_bit_db / 10))


def add_awgn(sig, cfg, symbol_rate_hz):
    if symbol_rate_hz > sig.sample_rate_hz:
        raise ConfigurationError("symbol rate exceeds sample rate")
    if np.isposinf(cfg.snr_per_bit_db):
        return sig
    rng = np.random.default_rng(cfg.noise_seed)
    sps = sig.sample_rate_hz / symbol_rate_hz
    out = []
    for pol in (sig.x_pol, sig.y_pol):
        var = noise_variance(np.mean(np.abs(pol) ** 2), cfg.snr_per_bit_db, sps)
        noise = rng.standard_normal(pol.shape[0]) + 1j * rng.standard_normal(pol.shape[0])
        out.append(pol + np.sqrt(var / 2) * noise)
    return sig.replace(*out)


def impair(sig, channel, symbol_rate_hz):
    return add_awgn(apply_cfo(sig, channel.cfo), channel, symbol_rate_hz)
