"""Inference-only fast Fourier convolution block.

Two streams over a channel split: a local 3x3 convolution path and a global
"spectral transform" path that applies a 1x1 convolution in the real-FFT
domain (real/imaginary parts stacked along channels).  The streams exchange
information via cross convolutions:

    Y_local  = conv_local(X_local)  + conv_g2l(X_global)
    Y_global = spectral(X_global)   + conv_l2g(X_local)

Weights live in a binary "FFCW" container holding a sequence of blocks; a
matching "FFCT" container carries raw tensors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import FormatError, InvalidInputError

WEIGHTS_MAGIC = b"FFCW"
TENSOR_MAGIC = b"FFCT"
WEIGHTS_VERSION = 1

BLOCK_MODES = ("same", "down", "up")


@dataclass(frozen=True)
class ConvKernel:
    weight: np.ndarray  # (C_out, C_in, kh, kw)
    bias: np.ndarray    # (C_out,)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 4:
            raise InvalidInputError(f"conv weight must be rank 4, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise InvalidInputError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class AffineNorm:
    """Per-channel affine normalization with precomputed statistics."""

    scale: np.ndarray
    shift: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x * np.asarray(self.scale)[:, None, None] + np.asarray(self.shift)[:, None, None]


@dataclass(frozen=True)
class SpectralParams:
    pre: ConvKernel        # 1x1 over C_g channels
    freq: ConvKernel       # 1x1 over 2*C_g stacked real/imag channels
    post: ConvKernel       # 1x1 over C_g channels
    freq_norm: Optional[AffineNorm] = None
    activation: bool = False


@dataclass(frozen=True)
class FfcBlock:
    global_ratio: float
    local: ConvKernel          # f_l: C_l -> C_l, 3x3
    g2l: ConvKernel            # f_{g->l}: C_g -> C_l, 3x3
    l2g: ConvKernel            # f_{l->g}: C_l -> C_g, 3x3
    spectral: SpectralParams   # f_g
    norm_local: Optional[AffineNorm] = None
    norm_global: Optional[AffineNorm] = None
    activation: bool = False
    mode: str = "same"

    def __post_init__(self):
        if not 0.0 <= self.global_ratio <= 1.0:
            raise InvalidInputError(f"global_ratio must be in [0, 1], got {self.global_ratio}")
        if self.mode not in BLOCK_MODES:
            raise InvalidInputError(f"unknown block mode {self.mode!r}")


@dataclass(frozen=True)
class FfcWeights:
    blocks: list[FfcBlock] = field(default_factory=list)


def global_channel_count(channels: int, ratio: float) -> int:
    """Channels assigned to the global branch; round-half-up."""
    return int(np.floor(ratio * channels + 0.5))


def split_channels(x: np.ndarray, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Partition a (C, H, W) tensor into local (leading) and global (trailing) parts."""
    x = _validate_tensor(x)
    if not 0.0 <= ratio <= 1.0:
        raise InvalidInputError(f"ratio must be in [0, 1], got {ratio}")
    cg = global_channel_count(x.shape[0], ratio)
    cl = x.shape[0] - cg
    return x[:cl], x[cl:]


def _validate_tensor(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(f"feature tensor must be (C, H, W), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("feature tensor contains non-finite values")
    return arr


def conv2d(x: np.ndarray, kernel: ConvKernel, stride: int = 1) -> np.ndarray:
    """Zero-padded cross-correlation keeping spatial size at stride 1."""
    w, b = kernel.weight, kernel.bias
    c_out, c_in, kh, kw = w.shape
    if x.shape[0] != c_in:
        raise InvalidInputError(f"tensor has {x.shape[0]} channels, kernel expects {c_in}")
    _, h, wd = x.shape
    if c_in == 0 or c_out == 0:
        oh = -(-h // stride)
        ow = -(-wd // stride)
        return np.zeros((c_out, oh, ow)) + b[:, None, None] if c_out else np.zeros((0, oh, ow))
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    out = np.einsum("chwij,ocij->ohw", windows, w, optimize=True)
    return out + b[:, None, None]


def _conv1x1(x: np.ndarray, kernel: ConvKernel) -> np.ndarray:
    w, b = kernel.weight, kernel.bias
    if w.shape[2:] != (1, 1):
        raise InvalidInputError(f"expected a 1x1 kernel, got {w.shape[2:]}")
    if x.shape[0] != w.shape[1]:
        raise InvalidInputError(f"tensor has {x.shape[0]} channels, kernel expects {w.shape[1]}")
    return np.tensordot(w[:, :, 0, 0], x, axes=(1, 0)) + b[:, None, None]


def spectral_transform(xg: np.ndarray, params: SpectralParams) -> np.ndarray:
    """Real-FFT domain 1x1 convolution; output shape equals input shape."""
    xg = _validate_tensor(xg)
    cg, h, w = xg.shape
    if cg == 0:
        return xg.copy()
    y = _conv1x1(xg, params.pre)
    spec = np.fft.rfft2(y, axes=(1, 2))                      # (cg, h, w//2 + 1)
    stacked = np.concatenate([spec.real, spec.imag], axis=0)  # (2*cg, h, bins)
    z = _conv1x1(stacked, params.freq)
    if params.freq_norm is not None:
        z = params.freq_norm.apply(z)
    if params.activation:
        z = np.maximum(z, 0.0)
    spec_out = z[: z.shape[0] // 2] + 1j * z[z.shape[0] // 2 :]
    out = np.fft.irfft2(spec_out, s=(h, w), axes=(1, 2))
    return _conv1x1(out, params.post)


def ffc_forward(x: np.ndarray, block: FfcBlock) -> np.ndarray:
    """One FFC block: split, two streams with cross talk, merge."""
    x = _validate_tensor(x)
    if block.mode == "up":
        x = np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)  # nearest-neighbor upsample
    stride = 2 if block.mode == "down" else 1
    xl, xg = split_channels(x, block.global_ratio)

    yl = conv2d(xl, block.local, stride) + conv2d(xg, block.g2l, stride)
    yg_spec = spectral_transform(xg, block.spectral)
    if stride == 2:
        yg_spec = yg_spec[:, ::2, ::2]
    yg = yg_spec + conv2d(xl, block.l2g, stride)

    if block.norm_local is not None:
        yl = block.norm_local.apply(yl)
    if block.norm_global is not None:
        yg = block.norm_global.apply(yg)
    if block.activation:
        yl = np.maximum(yl, 0.0)
        yg = np.maximum(yg, 0.0)
    return np.concatenate([yl, yg], axis=0)


def run_blocks(x: np.ndarray, weights: FfcWeights) -> tuple[np.ndarray, list[tuple]]:
    """Apply all blocks sequentially; returns the output and the shape trace."""
    trace = [tuple(np.asarray(x).shape)]
    for i, block in enumerate(weights.blocks):
        try:
            x = ffc_forward(x, block)
        except InvalidInputError as exc:
            raise InvalidInputError(f"block {i}: {exc}") from exc
        trace.append(tuple(x.shape))
    return x, trace


# ---------------------------------------------------------------------------
# Binary containers

class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated while reading {what}", self.pos)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32(self, what: str) -> float:
        return struct.unpack("<f", self.take(4, what))[0]


def _write_named_tensor(fh, name: str, values: np.ndarray) -> None:
    raw = name.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)
    arr = np.asarray(values, dtype=np.float64)
    fh.write(struct.pack("<I", arr.ndim))
    for d in arr.shape:
        fh.write(struct.pack("<I", d))
    fh.write(arr.astype("<f4").tobytes())


def _read_named_tensor(r: _Reader) -> tuple[str, np.ndarray]:
    name_len = r.u32("tensor name length")
    name = r.take(name_len, "tensor name").decode("utf-8")
    rank = r.u32(f"rank of {name}")
    if rank > 8:
        raise FormatError(f"implausible rank {rank} for tensor {name}", r.pos - 4)
    dims = tuple(r.u32(f"dim of {name}") for _ in range(rank))
    count = int(np.prod(dims)) if dims else 1
    if count > 1 << 28:
        raise FormatError(f"tensor {name} too large ({count} values)", r.pos)
    raw = r.take(count * 4, f"values of {name}")
    return name, np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)


_MODE_CODES = {"same": 0, "down": 1, "up": 2}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}


def write_weights(weights: FfcWeights, path) -> None:
    """Serialize to the FFCW container."""
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<II", WEIGHTS_VERSION, len(weights.blocks)))
        for i, blk in enumerate(weights.blocks):
            flags = 0
            if blk.activation:
                flags |= 1
            if blk.spectral.activation:
                flags |= 2
            flags |= _MODE_CODES[blk.mode] << 2
            fh.write(struct.pack("<fI", blk.global_ratio, flags))
            tensors: list[tuple[str, np.ndarray]] = []
            for part, kern in (("local", blk.local), ("g2l", blk.g2l), ("l2g", blk.l2g),
                               ("spectral.pre", blk.spectral.pre),
                               ("spectral.freq", blk.spectral.freq),
                               ("spectral.post", blk.spectral.post)):
                tensors.append((f"block{i}.{part}.weight", kern.weight))
                tensors.append((f"block{i}.{part}.bias", kern.bias))
            for part, norm in (("norm_local", blk.norm_local),
                               ("norm_global", blk.norm_global),
                               ("spectral.freq_norm", blk.spectral.freq_norm)):
                if norm is not None:
                    tensors.append((f"block{i}.{part}.scale", np.asarray(norm.scale)))
                    tensors.append((f"block{i}.{part}.shift", np.asarray(norm.shift)))
            fh.write(struct.pack("<I", len(tensors)))
            for name, values in tensors:
                _write_named_tensor(fh, name, values)


def read_weights(path) -> FfcWeights:
    """Parse an FFCW container; raises FormatError with byte offsets."""
    r = _Reader(Path(path).read_bytes())
    magic = r.take(4, "magic")
    if magic != WEIGHTS_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {WEIGHTS_MAGIC!r}", 0)
    version = r.u32("version")
    if version != WEIGHTS_VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    num_blocks = r.u32("block count")
    blocks = []
    for i in range(num_blocks):
        ratio = r.f32(f"block {i} global_ratio")
        flags = r.u32(f"block {i} flags")
        mode_code = (flags >> 2) & 0x3
        if mode_code not in _MODE_NAMES:
            raise FormatError(f"block {i}: unknown mode code {mode_code}", r.pos - 4)
        count = r.u32(f"block {i} tensor count")
        table = {}
        for _ in range(count):
            name, values = _read_named_tensor(r)
            table[name] = values

        def kern(part: str) -> ConvKernel:
            try:
                return ConvKernel(table[f"block{i}.{part}.weight"], table[f"block{i}.{part}.bias"])
            except KeyError as exc:
                raise FormatError(f"block {i}: missing tensor {exc.args[0]}", r.pos) from exc

        def norm(part: str) -> Optional[AffineNorm]:
            key = f"block{i}.{part}.scale"
            if key not in table:
                return None
            return AffineNorm(table[key], table[f"block{i}.{part}.shift"])

        blocks.append(FfcBlock(
            global_ratio=ratio,
            local=kern("local"),
            g2l=kern("g2l"),
            l2g=kern("l2g"),
            spectral=SpectralParams(
                pre=kern("spectral.pre"),
                freq=kern("spectral.freq"),
                post=kern("spectral.post"),
                freq_norm=norm("spectral.freq_norm"),
                activation=bool(flags & 2),
            ),
            norm_local=norm("norm_local"),
            norm_global=norm("norm_global"),
            activation=bool(flags & 1),
            mode=_MODE_NAMES[mode_code],
        ))
    return FfcWeights(blocks)


def write_tensor(values: np.ndarray, path) -> None:
    """Serialize a tensor to the FFCT container (f32 LE, row-major)."""
    arr = np.asarray(values, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<I", arr.ndim))
        for d in arr.shape:
            fh.write(struct.pack("<I", d))
        fh.write(arr.astype("<f4").tobytes())


def read_tensor(path) -> np.ndarray:
    """Parse an FFCT container; raises FormatError with byte offsets."""
    r = _Reader(Path(path).read_bytes())
    magic = r.take(4, "magic")
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {TENSOR_MAGIC!r}", 0)
    rank = r.u32("rank")
    if rank > 8:
        raise FormatError(f"implausible rank {rank}", 4)
    dims = tuple(r.u32("dim") for _ in range(rank))
    count = int(np.prod(dims)) if dims else 1
    if count > 1 << 28:
        raise FormatError(f"tensor too large ({count} values)", r.pos)
    raw = r.take(count * 4, "values")
    return np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)


def identity_block(channels: int, ratio: float = 0.5) -> FfcBlock:
    """A block whose spectral path is the identity and whose convs pass input through."""
    cg = global_channel_count(channels, ratio)
    cl = channels - cg

    def passthrough3x3(c: int) -> ConvKernel:
        w = np.zeros((c, c, 3, 3))
        for j in range(c):
            w[j, j, 1, 1] = 1.0
        return ConvKernel(w, np.zeros(c))

    def zero3x3(c_out: int, c_in: int) -> ConvKernel:
        return ConvKernel(np.zeros((c_out, c_in, 3, 3)), np.zeros(c_out))

    def eye1x1(c: int) -> ConvKernel:
        return ConvKernel(np.eye(c).reshape(c, c, 1, 1), np.zeros(c))

    return FfcBlock(
        global_ratio=ratio,
        local=passthrough3x3(cl),
        g2l=zero3x3(cl, cg),
        l2g=zero3x3(cg, cl),
        spectral=SpectralParams(pre=eye1x1(cg), freq=eye1x1(2 * cg), post=eye1x1(cg)),
    )
