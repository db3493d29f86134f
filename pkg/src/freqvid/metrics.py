"""Video evaluation: warping-based temporal consistency (TCM), PSNR, SSIM,
Middlebury .flo I/O, and a phase-correlation translational flow estimator.

Flow convention: a FlowField is an (M, N, 2) grid of (dx, dy) displacements
in pixels with dx along columns and dy along rows.  Backward warping samples
the source at (col + dx, row + dy), clamped to the border, so
warp(prev, flow) is the predicted current frame.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.signal import fftconvolve

from .errors import FormatError, InvalidInputError
from .spectral import frame_channels, to_luma, validate_frame

FLO_MAGIC = 202021.25
PSNR_CAP = 99.0
_TINY_ERROR = 1e-12

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def validate_flow(flow) -> np.ndarray:
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InvalidInputError(f"flow field must be (M, N, 2), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("flow field contains non-finite values")
    return arr


def constant_flow(m: int, n: int, dx: float, dy: float) -> np.ndarray:
    flow = np.empty((m, n, 2))
    flow[:, :, 0] = dx
    flow[:, :, 1] = dy
    return flow


def warp(frame, flow) -> np.ndarray:
    """Backward warp with bilinear sampling and clamp-to-edge borders."""
    f = validate_frame(frame)
    fl = validate_flow(flow)
    if fl.shape[:2] != f.shape[:2]:
        raise InvalidInputError(
            f"flow shape {fl.shape[:2]} does not match frame shape {f.shape[:2]}"
        )
    m, n = f.shape[:2]
    rows, cols = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    coords = [rows + fl[:, :, 1], cols + fl[:, :, 0]]
    warped = [
        map_coordinates(ch, coords, order=1, mode="nearest")
        for ch in frame_channels(f)
    ]
    if f.ndim == 2:
        return warped[0]
    return np.stack(warped, axis=-1)


def warping_error(curr, prev, flow) -> float:
    """Sum of squared differences between curr and the warped prev frame."""
    diff = validate_frame(curr) - warp(prev, flow)
    return float(np.sum(diff * diff))


def tcm(ref_prev, ref_curr, syn_prev, syn_curr, flow) -> float:
    """exp(-|E_ref / E_syn - 1|) from warping errors of the two transitions.

    If both errors are ~0 the sequences are equally consistent (returns 1);
    if only the synthetic error is ~0 the ratio is undefined and the maximal
    mismatch value 0 is returned.
    """
    e_ref = warping_error(ref_curr, ref_prev, flow)
    e_syn = warping_error(syn_curr, syn_prev, flow)
    if e_syn < _TINY_ERROR:
        return 1.0 if e_ref < _TINY_ERROR else 0.0
    return float(np.exp(-abs(e_ref / e_syn - 1.0)))


def _signed_wrap(idx: int, n: int) -> int:
    return idx - n if idx > n // 2 else idx


def estimate_flow_translation(prev, curr) -> np.ndarray:
    """Global integer translation via phase correlation on luma channels.

    Returns a constant flow usable directly by :func:`warp`, i.e. (dx, dy)
    such that curr[r, c] ~ prev[r + dy, c + dx].  Coarse fallback only; use
    .flo files from a real flow estimator when available.
    """
    a = to_luma(prev)
    b = to_luma(curr)
    if a.shape != b.shape:
        raise InvalidInputError(f"frame shapes differ: {a.shape} vs {b.shape}")
    m, n = a.shape
    a = a - a.mean()
    b = b - b.mean()
    fa = np.fft.fft2(a)
    fb = np.fft.fft2(b)
    cross = fb * np.conj(fa)
    mag = np.abs(cross)
    if mag.max() < _TINY_ERROR:
        return constant_flow(m, n, 0.0, 0.0)
    corr = np.real(np.fft.ifft2(cross / np.maximum(mag, _TINY_ERROR)))
    peak_r, peak_c = np.unravel_index(int(np.argmax(corr)), corr.shape)
    # peak sits at the roll amount (sy, sx) with curr = roll(prev, (sy, sx));
    # the warp-compatible displacement is its negation
    dy = -_signed_wrap(int(peak_r), m)
    dx = -_signed_wrap(int(peak_c), n)
    return constant_flow(m, n, float(dx), float(dy))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for unit-range frames, capped at 99."""
    x = validate_frame(a)
    y = validate_frame(b)
    if x.shape != y.shape:
        raise InvalidInputError(f"frame shapes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse < 1e-10:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a, b) -> float:
    """Structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Standard constants K1=0.01, K2=0.03 at dynamic range 1; the SSIM map is
    averaged over valid window positions and channels.  For frames smaller
    than the window the window shrinks to the largest odd size that fits.
    """
    x = validate_frame(a)
    y = validate_frame(b)
    if x.shape != y.shape:
        raise InvalidInputError(f"frame shapes differ: {x.shape} vs {y.shape}")
    size = min(SSIM_WINDOW, x.shape[0], x.shape[1])
    if size % 2 == 0:
        size -= 1
    win = _gaussian_window(size, SSIM_SIGMA)
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    def filt(img):
        return fftconvolve(img, win, mode="valid")

    scores = []
    for cx, cy in zip(frame_channels(x), frame_channels(y)):
        mu_x = filt(cx)
        mu_y = filt(cy)
        xx = filt(cx * cx) - mu_x**2
        yy = filt(cy * cy) - mu_y**2
        xy = filt(cx * cy) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
        den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


def write_flo(flow, path) -> None:
    """Write a Middlebury .flo file (magic 202021.25, w, h, interleaved f32)."""
    fl = validate_flow(flow)
    m, n = fl.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLO_MAGIC))
        fh.write(struct.pack("<ii", n, m))
        fh.write(fl.astype("<f4").tobytes())


def read_flo(path) -> np.ndarray:
    """Read a Middlebury .flo file; raises FormatError with byte offsets."""
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError("truncated .flo header", len(data))
    magic = struct.unpack_from("<f", data, 0)[0]
    if magic != np.float32(FLO_MAGIC):
        raise FormatError(f"bad magic {magic!r}, expected {FLO_MAGIC}", 0)
    w, h = struct.unpack_from("<ii", data, 4)
    if w <= 0 or h <= 0 or w * h > 1 << 26:
        raise FormatError(f"implausible dimensions {w}x{h}", 4)
    expected = 12 + w * h * 2 * 4
    if len(data) < expected:
        raise FormatError("truncated .flo payload", len(data))
    flow = np.frombuffer(data, dtype="<f4", count=w * h * 2, offset=12)
    return flow.reshape(h, w, 2).astype(np.float64)


def video_metrics(
    ref_frames: Sequence,
    syn_frames: Sequence,
    flows: Optional[Sequence] = None,
    video_id: str = "",
) -> dict:
    """Per-transition TCM and per-frame PSNR/SSIM over aligned sequences.

    flows, when given, must hold one flow per transition (t = 2..T); with
    flows=None the phase-correlation estimator runs on the reference frames.
    """
    if len(ref_frames) != len(syn_frames):
        raise InvalidInputError(
            f"sequence lengths differ: ref has {len(ref_frames)}, syn has {len(syn_frames)}"
        )
    if len(ref_frames) < 2:
        raise InvalidInputError(f"need at least 2 frames, got {len(ref_frames)}")
    if flows is not None and len(flows) != len(ref_frames) - 1:
        raise InvalidInputError(
            f"need {len(ref_frames) - 1} flow fields, got {len(flows)}"
        )
    flow_source = "files" if flows is not None else "phase-correlation"

    per_transition = []
    for t in range(1, len(ref_frames)):
        if flows is not None:
            flow = validate_flow(flows[t - 1])
            if flow.shape[:2] != validate_frame(ref_frames[t]).shape[:2]:
                raise InvalidInputError(
                    f"transition {t + 1}: flow shape {flow.shape[:2]} does not match frames"
                )
        else:
            flow = estimate_flow_translation(ref_frames[t - 1], ref_frames[t])
        value = tcm(ref_frames[t - 1], ref_frames[t], syn_frames[t - 1], syn_frames[t], flow)
        per_transition.append({"t": t + 1, "tcm": value})

    per_frame = [
        {"t": t + 1, "psnr": psnr(r, s), "ssim": ssim(r, s)}
        for t, (r, s) in enumerate(zip(ref_frames, syn_frames))
    ]
    return {
        "video_id": video_id,
        "flow_source": flow_source,
        "per_transition": per_transition,
        "per_frame": per_frame,
        "means": {
            "tcm": float(np.mean([e["tcm"] for e in per_transition])),
            "psnr": float(np.mean([e["psnr"] for e in per_frame])),
            "ssim": float(np.mean([e["ssim"] for e in per_frame])),
        },
    }
