"""Deterministic frame fixtures shared by the CLI tests and golden files."""

import numpy as np
from PIL import Image


def save_frames(frames, directory, prefix="frame"):
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames, start=1):
        pixels = np.rint(np.clip(frame, 0.0, 1.0) * 255).astype(np.uint8)
        path = directory / f"{prefix}_{i:03d}.png"
        Image.fromarray(pixels, mode="L").save(path, format="PNG")
        paths.append(path)
    return paths


def static_clip(size=8, count=3, value=0.5):
    return [np.full((size, size), value) for _ in range(count)]


def moving_square(size=16, count=5, square=4):
    frames = []
    for t in range(count):
        frame = np.full((size, size), 0.1)
        frame[4:4 + square, 2 + t:2 + t + square] = 0.9
        frames.append(frame)
    return frames


def noisy_copy(frames, sigma=0.05, seed=2023):
    rng = np.random.default_rng(seed)
    return [np.clip(f + rng.normal(0.0, sigma, f.shape), 0.0, 1.0) for f in frames]
