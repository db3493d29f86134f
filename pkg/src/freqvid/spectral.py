"""2D discrete Fourier analysis of frames.

Forward transform is unnormalized (plain double sum); the inverse carries
the 1/(M*N) factor.  Amplitude/phase use the four-quadrant arctangent, with
phase pinned to 0 wherever amplitude falls below ``PHASE_AMPLITUDE_FLOOR``.
Shifting (DC to center) and log scaling are display-only transforms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError, InvalidStateError

PHASE_AMPLITUDE_FLOOR = 1e-12
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class Layout(enum.IntEnum):
    UNSHIFTED = 0  # DC at index (0, 0)
    SHIFTED = 1    # DC at (M//2, N//2)


@dataclass(frozen=True)
class Spectrum:
    """Complex M x N frequency grid plus its index layout."""

    values: np.ndarray
    layout: Layout = Layout.UNSHIFTED

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise InvalidInputError(f"spectrum must be 2D and nonempty, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self):
        return self.values.shape


def validate_frame(frame) -> np.ndarray:
    """Coerce to float64 and check shape/finiteness.

    Accepts (M, N) single-channel grids or (M, N, C) with C in {1, 3}.
    """
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise InvalidInputError(f"frame must be 2D or 3D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"frame has a zero dimension: {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] not in (1, 3):
        raise InvalidInputError(f"frame must have 1 or 3 channels, got {arr.shape[2]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("frame contains non-finite values")
    return arr


def frame_channels(frame: np.ndarray) -> list[np.ndarray]:
    """Return the list of 2D channel grids of a validated frame."""
    if frame.ndim == 2:
        return [frame]
    return [frame[:, :, c] for c in range(frame.shape[2])]


def dft2(frame) -> Spectrum:
    """Unnormalized forward 2D DFT of a single-channel grid."""
    grid = validate_frame(frame)
    if grid.ndim != 2:
        raise InvalidInputError("dft2 expects a single-channel (M, N) grid")
    return Spectrum(np.fft.fft2(grid), Layout.UNSHIFTED)


def idft2(spectrum: Spectrum) -> np.ndarray:
    """Inverse 2D DFT with the 1/(M*N) factor; the imaginary residue is discarded."""
    if spectrum.layout != Layout.UNSHIFTED:
        raise InvalidStateError("idft2 expects an UNSHIFTED spectrum")
    return np.real(np.fft.ifft2(spectrum.values))


def _as_complex(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.values
    return np.asarray(spectrum, dtype=np.complex128)


def amplitude(spectrum) -> np.ndarray:
    """Per-frequency magnitude sqrt(R^2 + I^2)."""
    return np.abs(_as_complex(spectrum))


def phase(spectrum) -> np.ndarray:
    """Four-quadrant arctangent of (I, R) in (-pi, pi]; 0 where amplitude ~ 0."""
    vals = _as_complex(spectrum)
    ang = np.arctan2(vals.imag, vals.real)
    # arctan2 maps (-0.0, -a) to -pi; fold it onto +pi for the (-pi, pi] range
    ang = np.where(ang == -np.pi, np.pi, ang)
    return np.where(np.abs(vals) < PHASE_AMPLITUDE_FLOOR, 0.0, ang)


def shift_spectrum(spectrum: Spectrum) -> Spectrum:
    """Move DC from (0, 0) to the grid center for display."""
    if spectrum.layout == Layout.SHIFTED:
        raise InvalidStateError("spectrum is already SHIFTED")
    return Spectrum(np.fft.fftshift(spectrum.values), Layout.SHIFTED)


def shift_grid(grid: np.ndarray) -> np.ndarray:
    """fftshift for real-valued grids (amplitude, TFC) in UNSHIFTED layout."""
    return np.fft.fftshift(np.asarray(grid, dtype=np.float64))


def log_amplitude(amp_grid) -> np.ndarray:
    """Elementwise log(1 + a) for display; requires a nonnegative grid."""
    grid = np.asarray(amp_grid, dtype=np.float64)
    if np.any(grid < 0):
        raise InvalidInputError("log_amplitude requires a nonnegative grid")
    return np.log1p(grid)


def to_luma(frame) -> np.ndarray:
    """Collapse an RGB frame to a single luma channel (0.299, 0.587, 0.114)."""
    arr = validate_frame(frame)
    if arr.ndim == 2:
        return arr
    if arr.shape[2] == 1:
        return arr[:, :, 0]
    return arr @ np.asarray(LUMA_WEIGHTS)


def load_frame(path, channels: str = "rgb") -> np.ndarray:
    """Load a PNG or binary PPM (P6) frame, scaled to [0, 1].

    channels="rgb" keeps three channels (grayscale sources are returned as
    single-channel); channels="luma" collapses to one channel.
    """
    if channels not in ("rgb", "luma"):
        raise InvalidInputError(f"unknown channel mode {channels!r}")
    with Image.open(Path(path)) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        arr = np.asarray(img, dtype=np.float64) / 255.0
    arr = np.clip(arr, 0.0, 1.0)
    if channels == "luma":
        return to_luma(arr)
    return arr
