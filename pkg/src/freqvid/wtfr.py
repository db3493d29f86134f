"""Weighted temporal frequency regularization loss with analytic gradients.

The loss compares the temporal amplitude/phase changes of a reference
transition against a synthetic one, weighted towards high frequencies:

    L_TAC = (1/(M N)) * sum_{u,v} w(u,v) * |TAC_ref - TAC_syn|
    L_TPC = (1/(M N)) * sum_{u,v} w(u,v) * |TPC_ref - TPC_syn|
    total = alpha * L_TAC + beta * L_TPC

The gradient is taken with respect to the current synthetic frame's pixels
(the previous synthetic frame is treated as a constant), via the chain rule
through the DFT, amplitude/phase, and the absolute values (subgradient 0 at
kinks).  Defaults alpha=0.5, beta=1, delta=0.05.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .spectral import PHASE_AMPLITUDE_FLOOR, frame_channels, validate_frame
from .tfc import PHASE_MODES, phase_difference


@dataclass(frozen=True)
class WtfrConfig:
    alpha: float = 0.5
    beta: float = 1.0
    delta: float = 0.05
    phase_mode: str = "wrapped"
    weighting: bool = True

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidInputError("alpha and beta must be nonnegative")
        if self.alpha + self.beta <= 0:
            raise InvalidInputError("alpha + beta must be positive")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise InvalidInputError("delta must be a finite nonnegative real")
        if self.phase_mode not in PHASE_MODES:
            raise InvalidInputError(f"unknown phase mode {self.phase_mode!r}")


@dataclass(frozen=True)
class WtfrResult:
    total: float
    l_tac: float
    l_tpc: float
    gradient: Optional[np.ndarray] = None


_CONFIG_KEYS = ("alpha", "beta", "delta", "phase_mode", "weighting")


def load_config(path) -> WtfrConfig:
    """Parse a flat key=value config file; unknown keys are rejected."""
    cfg = WtfrConfig()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise InvalidInputError(f"line {lineno}: unknown config key {key!r}")
        if key in ("alpha", "beta", "delta"):
            cfg = replace(cfg, **{key: float(value)})
        elif key == "phase_mode":
            cfg = replace(cfg, phase_mode=value)
        else:
            if value.lower() not in ("on", "off", "true", "false", "1", "0"):
                raise InvalidInputError(f"line {lineno}: bad boolean {value!r}")
            cfg = replace(cfg, weighting=value.lower() in ("on", "true", "1"))
    return cfg


def weight_grid(m: int, n: int, delta: float) -> np.ndarray:
    """Radial frequency weighting on UNSHIFTED indices.

    w(u,v) = R^delta - r(u,v)^delta + 1 with R = (M/2)^2 + (N/2)^2 and
    r = (u - M/2)^2 + (v - N/2)^2; r^delta is defined as 0 at r = 0, so the
    Nyquist corner (u, v) = (M/2, N/2) gets the maximum weight.
    """
    if m < 1 or n < 1:
        raise InvalidInputError("weight grid needs positive dimensions")
    u = np.arange(m, dtype=np.float64)[:, None]
    v = np.arange(n, dtype=np.float64)[None, :]
    r2 = (u - m / 2.0) ** 2 + (v - n / 2.0) ** 2
    ref = (m / 2.0) ** 2 + (n / 2.0) ** 2
    radial = np.where(r2 > 0, r2**delta, 0.0)
    return ref**delta - radial + 1.0


def _phase_diff_derivative(delta_angle: np.ndarray, phase_mode: str) -> np.ndarray:
    """d/d(delta_angle) of the absolute (optionally wrapped) phase difference."""
    sign = np.sign(delta_angle)
    if phase_mode == "raw":
        return sign
    mag = np.abs(delta_angle)
    deriv = np.where(mag < np.pi, sign, -sign)
    return np.where(mag == np.pi, 0.0, deriv)


def wtfr_loss(
    ref_prev,
    ref_curr,
    syn_prev,
    syn_curr,
    cfg: WtfrConfig = WtfrConfig(),
    want_gradient: bool = False,
) -> WtfrResult:
    """Loss of Eq-style TAC/TPC comparison for one transition.

    Returns the scalar components and, when requested, the gradient of the
    total with respect to the current synthetic frame's pixels (same shape
    as the frame).
    """
    frames = [validate_frame(f) for f in (ref_prev, ref_curr, syn_prev, syn_curr)]
    shape = frames[0].shape
    for f in frames[1:]:
        if f.shape != shape:
            raise InvalidInputError("all four frames must share dimensions and channels")
    m, n = shape[:2]
    mn = m * n
    w = weight_grid(m, n, cfg.delta) if cfg.weighting else np.ones((m, n))

    rp, rc, sp, sc = frames
    num_channels = 1 if rp.ndim == 2 else rp.shape[2]
    l_tac = 0.0
    l_tpc = 0.0
    grad = np.zeros(shape) if want_gradient else None

    for c, (rp_c, rc_c, sp_c, sc_c) in enumerate(
        zip(*(frame_channels(f) for f in (rp, rc, sp, sc)))
    ):
        f_rp = np.fft.fft2(rp_c)
        f_rc = np.fft.fft2(rc_c)
        f_sp = np.fft.fft2(sp_c)
        f_sc = np.fft.fft2(sc_c)

        amp_rp, amp_rc = np.abs(f_rp), np.abs(f_rc)
        amp_sp, amp_sc = np.abs(f_sp), np.abs(f_sc)
        ph_rp = _masked_phase(f_rp, amp_rp)
        ph_rc = _masked_phase(f_rc, amp_rc)
        ph_sp = _masked_phase(f_sp, amp_sp)
        ph_sc = _masked_phase(f_sc, amp_sc)

        tac_ref = np.abs(amp_rc - amp_rp)
        amp_gap_syn = amp_sc - amp_sp
        tac_syn = np.abs(amp_gap_syn)
        tac_resid = tac_ref - tac_syn

        tpc_ref = phase_difference(ph_rc, ph_rp, cfg.phase_mode)
        ang_gap_syn = ph_sc - ph_sp
        tpc_syn = phase_difference(ph_sc, ph_sp, cfg.phase_mode)
        tpc_resid = tpc_ref - tpc_syn

        l_tac += float((w * np.abs(tac_resid)).sum()) / mn
        l_tpc += float((w * np.abs(tpc_resid)).sum()) / mn

        if not want_gradient:
            continue

        # dL/d(amplitude of F_syn_curr) and dL/d(phase of F_syn_curr)
        dl_damp = -(cfg.alpha * w / mn) * np.sign(tac_resid) * np.sign(amp_gap_syn)
        dl_dph = (
            -(cfg.beta * w / mn)
            * np.sign(tpc_resid)
            * _phase_diff_derivative(ang_gap_syn, cfg.phase_mode)
        )

        live = amp_sc >= PHASE_AMPLITUDE_FLOOR
        amp_safe = np.where(live, amp_sc, 1.0)
        r_part, i_part = f_sc.real, f_sc.imag
        g_real = np.where(live, dl_damp * r_part / amp_safe - dl_dph * i_part / amp_safe**2, 0.0)
        g_imag = np.where(live, dl_damp * i_part / amp_safe + dl_dph * r_part / amp_safe**2, 0.0)
        # dF(u,v)/df(x,y) = e^{-i theta}: pull the spectral gradient back to
        # pixels with an unnormalized inverse transform
        grad_ch = mn * np.real(np.fft.ifft2(g_real + 1j * g_imag)) / num_channels
        if rp.ndim == 2:
            grad += grad_ch
        else:
            grad[:, :, c] += grad_ch

    l_tac /= num_channels
    l_tpc /= num_channels
    total = cfg.alpha * l_tac + cfg.beta * l_tpc
    return WtfrResult(total, l_tac, l_tpc, grad)


def _masked_phase(values: np.ndarray, amp: np.ndarray) -> np.ndarray:
    ang = np.arctan2(values.imag, values.real)
    ang = np.where(ang == -np.pi, np.pi, ang)
    return np.where(amp < PHASE_AMPLITUDE_FLOOR, 0.0, ang)


def wtfr_sequence_loss(
    ref_frames: Sequence,
    syn_frames: Sequence,
    cfg: WtfrConfig = WtfrConfig(),
) -> tuple[list[WtfrResult], WtfrResult]:
    """Per-transition losses over aligned sequences plus their mean."""
    if len(ref_frames) != len(syn_frames):
        raise InvalidInputError(
            f"sequence lengths differ: ref has {len(ref_frames)}, syn has {len(syn_frames)}"
        )
    if len(ref_frames) < 2:
        raise InvalidInputError(f"need at least 2 frames, got {len(ref_frames)}")
    results = [
        wtfr_loss(ref_frames[t - 1], ref_frames[t], syn_frames[t - 1], syn_frames[t], cfg)
        for t in range(1, len(ref_frames))
    ]
    k = len(results)
    mean = WtfrResult(
        total=sum(r.total for r in results) / k,
        l_tac=sum(r.l_tac for r in results) / k,
        l_tpc=sum(r.l_tpc for r in results) / k,
    )
    return results, mean
