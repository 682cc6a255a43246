"""Wide-range coarse carrier frequency offset estimation for dual-polarization
coherent receivers, by closed-form segmented regression of the cumulative PSD."""

from . import capture, coarse, experiments, fine, kernels, slr, spectral, waveform
from .coarse import BlockStatus, CfoTrack, CoarseConfig, CoarseEstimator, compensate, run_track
from .errors import (
    BreakpointOutOfRange,
    CaptureError,
    CcfoeError,
    ConfigurationError,
    DegenerateQuadratic,
    IllConditioned,
    InputError,
    NoBreakpoints,
    SLRError,
)
from .fine import SymbolStream, fourth_power_cfoe, matched_filter_decimate
from .slr import PiecewiseFit, fit, fit_breakpoints, fit_slopes
from .waveform import CfoProfile, ChannelConfig, DualPolSignal, TxConfig, impair, synthesize

__version__ = "0.1.0"

__all__ = [
    "BlockStatus", "BreakpointOutOfRange", "CaptureError", "CcfoeError", "CfoProfile", "CfoTrack",
    "ChannelConfig", "CoarseConfig", "CoarseEstimator", "ConfigurationError", "DegenerateQuadratic",
    "DualPolSignal", "IllConditioned", "InputError", "NoBreakpoints", "PiecewiseFit", "SLRError",
    "SymbolStream", "TxConfig", "capture", "coarse", "compensate", "experiments", "fine", "fit",
    "fit_breakpoints", "fit_slopes", "fourth_power_cfoe", "impair", "kernels",
    "matched_filter_decimate", "run_track", "slr", "spectral", "synthesize", "waveform",
]
