"""Frequency-domain analysis, regularization losses, and temporal-consistency
metrics for frame sequences."""

__version__ = "0.1.0"

from .errors import (
    FormatError,
    FreqvidError,
    InvalidInputError,
    InvalidStateError,
    NumericalError,
)
from .spectral import (
    Layout,
    Spectrum,
    amplitude,
    dft2,
    idft2,
    load_frame,
    log_amplitude,
    phase,
    shift_spectrum,
    to_luma,
)
from .tfc import MeanTfc, TfcPair, band_energy, export_heatmap, mean_tfc, tfc_pair
from .wtfr import WtfrConfig, WtfrResult, weight_grid, wtfr_loss, wtfr_sequence_loss
from .ffc import FfcBlock, FfcWeights, ffc_forward, spectral_transform, split_channels
from .metrics import (
    estimate_flow_translation,
    psnr,
    read_flo,
    ssim,
    tcm,
    video_metrics,
    warp,
    write_flo,
)

__all__ = [
    "__version__",
    "FreqvidError", "InvalidInputError", "InvalidStateError", "FormatError", "NumericalError",
    "Layout", "Spectrum", "dft2", "idft2", "amplitude", "phase", "shift_spectrum",
    "log_amplitude", "load_frame", "to_luma",
    "TfcPair", "MeanTfc", "tfc_pair", "mean_tfc", "band_energy", "export_heatmap",
    "WtfrConfig", "WtfrResult", "weight_grid", "wtfr_loss", "wtfr_sequence_loss",
    "FfcBlock", "FfcWeights", "split_channels", "spectral_transform", "ffc_forward",
    "warp", "tcm", "psnr", "ssim", "estimate_flow_translation", "read_flo", "write_flo",
    "video_metrics",
]
