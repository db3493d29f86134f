"""Temporal Frequency Change analysis between adjacent frames.

TAC is the absolute per-frequency amplitude difference, TPC the absolute
phase difference (optionally wrapped to [0, pi]).  Grids are computed on
UNSHIFTED spectra; shifting and log scaling happen only at export time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import FormatError, InvalidInputError
from .spectral import (
    Layout,
    amplitude,
    dft2,
    frame_channels,
    phase,
    shift_grid,
    validate_frame,
)

PHASE_MODES = ("raw", "wrapped")

GRID_DUMP_MAGIC = b"TFCG"
_GRID_DUMP_HEADER = struct.Struct("<4sIII")  # magic, M, N, layout


@dataclass(frozen=True)
class TfcPair:
    """TAC and TPC grids for one frame transition."""

    tac: np.ndarray
    tpc: np.ndarray
    layout: Layout = Layout.UNSHIFTED


@dataclass(frozen=True)
class MeanTfc:
    """Per-frequency mean of TAC/TPC over all transitions of a video."""

    mean_tac: np.ndarray
    mean_tpc: np.ndarray
    layout: Layout = Layout.UNSHIFTED


def phase_difference(curr: np.ndarray, prev: np.ndarray, phase_mode: str) -> np.ndarray:
    """Absolute phase difference, wrapped to [0, pi] in "wrapped" mode."""
    if phase_mode not in PHASE_MODES:
        raise InvalidInputError(f"unknown phase mode {phase_mode!r}")
    d = np.abs(curr - prev)
    if phase_mode == "wrapped":
        d = np.minimum(d, 2.0 * np.pi - d)
    return d


def tfc_pair(prev, curr, phase_mode: str = "wrapped") -> TfcPair:
    """TAC/TPC grids for one transition, averaged over channels."""
    a = validate_frame(prev)
    b = validate_frame(curr)
    if a.shape != b.shape:
        raise InvalidInputError(f"frame shapes differ: {a.shape} vs {b.shape}")
    tac_acc = None
    tpc_acc = None
    chans_a = frame_channels(a)
    chans_b = frame_channels(b)
    for ch_a, ch_b in zip(chans_a, chans_b):
        fa = dft2(ch_a)
        fb = dft2(ch_b)
        tac = np.abs(amplitude(fb) - amplitude(fa))
        tpc = phase_difference(phase(fb), phase(fa), phase_mode)
        tac_acc = tac if tac_acc is None else tac_acc + tac
        tpc_acc = tpc if tpc_acc is None else tpc_acc + tpc
    n = len(chans_a)
    return TfcPair(tac_acc / n, tpc_acc / n, Layout.UNSHIFTED)


def mean_tfc(frames: Sequence, phase_mode: str = "wrapped") -> MeanTfc:
    """Arithmetic mean of per-transition TAC/TPC grids (division by T-1)."""
    frames = [validate_frame(f) for f in frames]
    if len(frames) < 2:
        raise InvalidInputError(f"need at least 2 frames, got {len(frames)}")
    for f in frames[1:]:
        if f.shape != frames[0].shape:
            raise InvalidInputError("frames in a sequence must share dimensions and channels")
    tac_sum = np.zeros(frames[0].shape[:2])
    tpc_sum = np.zeros(frames[0].shape[:2])
    for prev, curr in zip(frames, frames[1:]):
        pair = tfc_pair(prev, curr, phase_mode)
        tac_sum += pair.tac
        tpc_sum += pair.tpc
    n = len(frames) - 1
    return MeanTfc(tac_sum / n, tpc_sum / n, Layout.UNSHIFTED)


def _signed_frequencies(n: int) -> np.ndarray:
    # signed frequency of each UNSHIFTED index, i.e. its offset from DC
    # after an fftshift
    k = np.arange(n)
    return np.where(k < (n + 1) // 2, k, k - n)


def band_energy(grid, band_fraction: float) -> tuple[float, float]:
    """Split a grid's total into low/high radial-frequency sums.

    The grid must be in UNSHIFTED layout; entries whose radial distance from
    DC is <= band_fraction * R_max count as low.
    """
    if not 0.0 < band_fraction <= 1.0:
        raise InvalidInputError(f"band_fraction must be in (0, 1], got {band_fraction}")
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InvalidInputError("band_energy expects a 2D grid")
    fu = _signed_frequencies(g.shape[0])[:, None].astype(np.float64)
    fv = _signed_frequencies(g.shape[1])[None, :].astype(np.float64)
    dist = np.hypot(fu, fv)
    r_max = dist.max()
    low_mask = dist <= band_fraction * r_max + 1e-12
    low = float(g[low_mask].sum())
    high = float(g[~low_mask].sum())
    return low, high


def normalize_to_bytes(grid: np.ndarray) -> np.ndarray:
    """Min-max normalize to uint8; a constant grid maps to all zeros."""
    lo = float(grid.min())
    hi = float(grid.max())
    if hi - lo <= 0.0:
        return np.zeros(grid.shape, dtype=np.uint8)
    scaled = (grid - lo) / (hi - lo) * 255.0
    return np.rint(scaled).astype(np.uint8)


def write_pgm(pixels: np.ndarray, path) -> None:
    """Write an 8-bit grayscale binary PGM (P5)."""
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.astype(np.uint8).tobytes())


def export_heatmap(grid, layout: Layout, path, log_scale: bool = False) -> None:
    """Render a TFC grid as an 8-bit grayscale PGM or PNG.

    UNSHIFTED grids are shifted so DC sits at the center; log_scale applies
    log(1 + x) (use for amplitude-type grids).
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InvalidInputError("heatmap export expects a 2D grid")
    if not np.all(np.isfinite(g)) or np.any(g < 0):
        raise InvalidInputError("heatmap export expects a finite nonnegative grid")
    if layout == Layout.UNSHIFTED:
        g = shift_grid(g)
    if log_scale:
        g = np.log1p(g)
    pixels = normalize_to_bytes(g)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(pixels, path)
    else:
        Image.fromarray(pixels, mode="L").save(path, format="PNG")


def write_grid_dump(grid, layout: Layout, path) -> None:
    """Raw grid dump: 16-byte header (magic, M, N, layout) + f64 LE row-major."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InvalidInputError("grid dump expects a 2D grid")
    with open(path, "wb") as fh:
        fh.write(_GRID_DUMP_HEADER.pack(GRID_DUMP_MAGIC, g.shape[0], g.shape[1], int(layout)))
        fh.write(g.astype("<f8").tobytes())


def read_grid_dump(path) -> tuple[np.ndarray, Layout]:
    """Inverse of write_grid_dump; raises FormatError with the byte offset."""
    data = Path(path).read_bytes()
    if len(data) < _GRID_DUMP_HEADER.size:
        raise FormatError("truncated grid dump header", len(data))
    magic, m, n, layout_raw = _GRID_DUMP_HEADER.unpack_from(data, 0)
    if magic != GRID_DUMP_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {GRID_DUMP_MAGIC!r}", 0)
    if layout_raw not in (int(Layout.UNSHIFTED), int(Layout.SHIFTED)):
        raise FormatError(f"unknown layout flag {layout_raw}", 12)
    expected = _GRID_DUMP_HEADER.size + m * n * 8
    if len(data) < expected:
        raise FormatError("truncated grid dump payload", len(data))
    grid = np.frombuffer(data, dtype="<f8", count=m * n, offset=_GRID_DUMP_HEADER.size)
    return grid.reshape(m, n).copy(), Layout(layout_raw)
