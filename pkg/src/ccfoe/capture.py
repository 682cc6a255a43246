"""Recorded IQ captures: headerless float32 ``[XI, XQ, YI, YQ]`` frames plus a
JSON sidecar with the sample rate and signal parameters."""

import json
import os
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CaptureError
from .waveform import DualPolSignal

FORMAT_VERSION = 1
FRAME_BYTES = 16  # four little-endian float32 per sample instant
_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class CaptureMeta:
    sample_rate_hz: float
    symbol_rate_hz: float
    rolloff: float
    format_version: int = FORMAT_VERSION


def sidecar_path(path):
    return os.fspath(path) + ".json"


def write_capture(path, sig, symbol_rate_hz, rolloff):
    """Write ``sig`` as interleaved float32 frames and its sidecar."""
    frames = np.empty((len(sig), 4), dtype=_DTYPE)
    frames[:, 0] = sig.x_pol.real
    frames[:, 1] = sig.x_pol.imag
    frames[:, 2] = sig.y_pol.real
    frames[:, 3] = sig.y_pol.imag
    meta = CaptureMeta(sig.sample_rate_hz, float(symbol_rate_hz), float(rolloff))
    try:
        with open(path, "wb") as fh:
            fh.write(frames.tobytes())
        with open(sidecar_path(path), "w") as fh:
            json.dump(asdict(meta), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise CaptureError(f"cannot write capture {path}: {exc}") from exc
    return meta


def read_meta(path):
    side = sidecar_path(path)
    try:
        with open(side) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise CaptureError(f"missing metadata sidecar {side}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise CaptureError(f"unreadable metadata sidecar {side}: {exc}") from exc
    if not isinstance(raw, dict):
        raise CaptureError(f"{side}: expected a JSON object")
    missing = {"sample_rate_hz", "symbol_rate_hz", "rolloff"} - raw.keys()
    if missing:
        raise CaptureError(f"{side}: missing keys {sorted(missing)}")
    version = int(raw.get("format_version", FORMAT_VERSION))
    if version != FORMAT_VERSION:
        raise CaptureError(f"{side}: unsupported format_version {version}")
    try:
        meta = CaptureMeta(float(raw["sample_rate_hz"]), float(raw["symbol_rate_hz"]),
                           float(raw["rolloff"]), version)
    except (TypeError, ValueError) as exc:
        raise CaptureError(f"{side}: {exc}") from exc
    if not (meta.sample_rate_hz > 0 and meta.symbol_rate_hz > 0):
        raise CaptureError(f"{side}: rates must be positive")
    return meta


def read_capture(path, block_len=None):
    """Load a capture as a :class:`DualPolSignal`.

    Parameters
    ----------
    path : str or path-like
        Sample file; metadata is read from ``path + ".json"``.
    block_len : int, optional
        If given, samples past the last complete block are dropped with a
        warning.

    Returns
    -------
    sig : DualPolSignal
    meta : CaptureMeta

    Raises
    ------
    CaptureError
        Missing, empty or misframed file, or bad metadata.
    """
    meta = read_meta(path)
    try:
        size = os.path.getsize(path)
    except OSError as exc:
        raise CaptureError(f"cannot open capture {path}: {exc}") from exc
    if size == 0:
        raise CaptureError(f"{path}: capture is empty")
    if size % FRAME_BYTES:
        bad = size - size % FRAME_BYTES
        raise CaptureError(
            f"{path}: incomplete frame at byte offset {bad} "
            f"(file size {size} is not a multiple of {FRAME_BYTES})"
        )
    frames = np.fromfile(path, dtype=_DTYPE).reshape(-1, 4).astype(np.float64)
    n = frames.shape[0]
    if block_len is not None:
        keep = n - n % block_len
        if keep == 0:
            raise CaptureError(f"{path}: {n} samples are shorter than one {block_len}-sample block")
        if keep < n:
            warnings.warn(
                f"{path}: dropping {n - keep} samples of a partial final block "
                f"(byte offset {keep * FRAME_BYTES})",
                stacklevel=2,
            )
            frames = frames[:keep]
    sig = DualPolSignal(frames[:, 0] + 1j * frames[:, 1], frames[:, 2] + 1j * frames[:, 3],
                        meta.sample_rate_hz)
    return sig, meta
