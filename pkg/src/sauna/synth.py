"""Reproducible synthetic vessel masks and matching grayscale images.

Randomness: every sample ``k`` of a run seeded with ``seed`` draws from its
own PCG64 stream built from ``numpy.random.SeedSequence(seed,
spawn_key=(k,))``. PCG64 (128-bit LCG state, 64-bit XSL-RR output) and the
SeedSequence hashing constants are fixed by numpy, so the streams do not
depend on platform or on how many samples are generated.

A mask is a union of branches. Each branch is a random walk with angular
momentum that starts on the border (or on an earlier branch), and is drawn
as a chain of discs whose radius tapers linearly along the branch.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import InputError
from .grid import BinaryMask, ScalarField

__all__ = ["SynthConfig", "sample_rng", "generate", "generate_one", "FG_FRACTION_RANGE"]

FG_FRACTION_RANGE = (0.02, 0.40)
MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    size: int = 128
    n_branches: tuple[int, int] = (3, 8)
    thickness_range: tuple[float, float] = (1.0, 6.0)
    noise_sigma: float = 0.1
    blur_radius: int = 1

    def __post_init__(self):
        if self.size < 32:
            raise InputError(f"size must be >= 32, got {self.size}")
        lo, hi = self.thickness_range
        if lo < 1 or hi < lo:
            raise InputError(f"bad thickness_range {self.thickness_range}")
        blo, bhi = self.n_branches
        if blo < 1 or bhi < blo:
            raise InputError(f"bad n_branches {self.n_branches}")
        if self.noise_sigma < 0 or self.blur_radius < 0:
            raise InputError("noise_sigma and blur_radius must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_branches"] = list(self.n_branches)
        d["thickness_range"] = list(self.thickness_range)
        return d


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _stamp_disc(mask: np.ndarray, r0: float, c0: float, radius: float) -> None:
    h, w = mask.shape
    rlo, rhi = max(0, math.floor(r0 - radius)), min(h - 1, math.ceil(r0 + radius))
    clo, chi = max(0, math.floor(c0 - radius)), min(w - 1, math.ceil(c0 + radius))
    if rlo > rhi or clo > chi:
        return
    rr, cc = np.mgrid[rlo : rhi + 1, clo : chi + 1]
    mask[rlo : rhi + 1, clo : chi + 1] |= (rr - r0) ** 2 + (cc - c0) ** 2 <= radius * radius


def _border_start(rng: np.random.Generator, size: int) -> tuple[float, float, float]:
    side = int(rng.integers(4))
    pos = rng.uniform(0.1 * size, 0.9 * size)
    inward = rng.normal(0.0, 0.35)
    edge = size - 1.0
    if side == 0:
        return 0.0, pos, math.pi / 2 + inward  # top edge, heading down
    if side == 1:
        return edge, pos, -math.pi / 2 + inward
    if side == 2:
        return pos, 0.0, inward
    return pos, edge, math.pi + inward


def _draw_mask(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    size = cfg.size
    mask = np.zeros((size, size), dtype=bool)
    lo, hi = cfg.thickness_range
    n = int(rng.integers(cfg.n_branches[0], cfg.n_branches[1] + 1))
    # (row, col, heading, half-width) samples along drawn branches
    anchors: list[tuple[float, float, float, float]] = []
    step = 1.0
    for b in range(n):
        if b == 0 or not anchors or rng.random() < 0.4:
            r, c, theta = _border_start(rng, size)
            w0 = rng.uniform(lo, hi)
        else:
            r, c, parent_theta, parent_w = anchors[int(rng.integers(len(anchors)))]
            theta = parent_theta + rng.choice([-1.0, 1.0]) * rng.uniform(0.4, 1.2)
            w0 = rng.uniform(lo, max(lo, parent_w))
        w1 = rng.uniform(lo, w0)
        n_steps = int(rng.uniform(0.5, 1.5) * size / step)
        omega = 0.0
        for k in range(n_steps):
            half = w0 + (w1 - w0) * k / max(1, n_steps - 1)
            _stamp_disc(mask, r, c, half)
            if k % 4 == 0:
                anchors.append((r, c, theta, half))
            omega = 0.85 * omega + rng.normal(0.0, 0.04)
            theta += omega
            r += step * math.sin(theta)
            c += step * math.cos(theta)
            if not (-half <= r <= size - 1 + half and -half <= c <= size - 1 + half):
                break
    return mask


def _render_image(rng: np.random.Generator, mask: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    img = mask.astype(np.float64)
    if cfg.blur_radius > 0:
        img = uniform_filter(img, size=2 * cfg.blur_radius + 1, mode="nearest")
    if cfg.noise_sigma > 0:
        img = img + rng.normal(0.0, cfg.noise_sigma, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def generate_one(cfg: SynthConfig, index: int) -> tuple[ScalarField, BinaryMask]:
    rng = sample_rng(cfg.seed, index)
    lo, hi = FG_FRACTION_RANGE
    for _ in range(MAX_ATTEMPTS):
        mask = _draw_mask(rng, cfg)
        frac = mask.mean()
        if lo <= frac <= hi and not mask.all():
            return ScalarField(_render_image(rng, mask, cfg), "image"), BinaryMask(mask)
    raise InputError(f"sample {index}: no mask with FG fraction in [{lo}, {hi}] after {MAX_ATTEMPTS} attempts")


def generate(cfg: SynthConfig, count: int) -> list[tuple[ScalarField, BinaryMask]]:
    if count < 0:
        raise InputError("count must be non-negative")
    return [generate_one(cfg, k) for k in range(count)]
