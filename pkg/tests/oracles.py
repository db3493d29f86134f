"""Independent reference computations used to check the library.

Everything here is deliberately written from the definitions (explicit
exponential sums, scalar loops) and never calls numpy.fft or the package's
fast paths.
"""

import math

import numpy as np


def naive_dft2(frame: np.ndarray) -> np.ndarray:
    """Direct double-sum 2D DFT via explicit DFT matrices."""
    m, n = frame.shape
    em = np.exp(-2j * np.pi * np.outer(np.arange(m), np.arange(m)) / m)
    en = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    return em @ frame.astype(np.complex128) @ en.T


def naive_idft2(spectrum: np.ndarray) -> np.ndarray:
    m, n = spectrum.shape
    em = np.exp(+2j * np.pi * np.outer(np.arange(m), np.arange(m)) / m)
    en = np.exp(+2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    return (em @ spectrum @ en.T) / (m * n)


def naive_phase(spectrum: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    m, n = spectrum.shape
    out = np.zeros((m, n))
    for u in range(m):
        for v in range(n):
            z = spectrum[u, v]
            if abs(z) >= floor:
                ang = math.atan2(z.imag, z.real)
                # documented phase range is (-pi, pi]
                out[u, v] = math.pi if ang == -math.pi else ang
    return out


def naive_weight(m: int, n: int, delta: float) -> np.ndarray:
    ref = (m / 2.0) ** 2 + (n / 2.0) ** 2
    out = np.zeros((m, n))
    for u in range(m):
        for v in range(n):
            r2 = (u - m / 2.0) ** 2 + (v - n / 2.0) ** 2
            radial = r2**delta if r2 > 0 else 0.0
            out[u, v] = ref**delta - radial + 1.0
    return out


def _phase_dist(a: float, b: float, wrapped: bool) -> float:
    d = abs(a - b)
    if wrapped:
        d = min(d, 2.0 * math.pi - d)
    return d


def naive_wtfr_scalar(ref_prev, ref_curr, syn_prev, syn_curr,
                      alpha=0.5, beta=1.0, delta=0.05,
                      wrapped=True, weighting=True):
    """Scalar-loop recomputation of the loss; channel-mean for RGB input."""
    frames = [np.asarray(f, dtype=np.float64) for f in (ref_prev, ref_curr, syn_prev, syn_curr)]
    if frames[0].ndim == 2:
        frames = [f[:, :, None] for f in frames]
    m, n, channels = frames[0].shape
    w = naive_weight(m, n, delta) if weighting else np.ones((m, n))
    l_tac = 0.0
    l_tpc = 0.0
    for c in range(channels):
        f_rp = naive_dft2(frames[0][:, :, c])
        f_rc = naive_dft2(frames[1][:, :, c])
        f_sp = naive_dft2(frames[2][:, :, c])
        f_sc = naive_dft2(frames[3][:, :, c])
        ph_rp = naive_phase(f_rp)
        ph_rc = naive_phase(f_rc)
        ph_sp = naive_phase(f_sp)
        ph_sc = naive_phase(f_sc)
        for u in range(m):
            for v in range(n):
                tac_r = abs(abs(f_rc[u, v]) - abs(f_rp[u, v]))
                tac_s = abs(abs(f_sc[u, v]) - abs(f_sp[u, v]))
                tpc_r = _phase_dist(ph_rc[u, v], ph_rp[u, v], wrapped)
                tpc_s = _phase_dist(ph_sc[u, v], ph_sp[u, v], wrapped)
                l_tac += w[u, v] * abs(tac_r - tac_s)
                l_tpc += w[u, v] * abs(tpc_r - tpc_s)
    l_tac /= m * n * channels
    l_tpc /= m * n * channels
    return alpha * l_tac + beta * l_tpc, l_tac, l_tpc
