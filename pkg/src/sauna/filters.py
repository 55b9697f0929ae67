"""Low-level grid kernels: exact squared EDT and sliding-window maximum.

Both are exact integer/ordering computations, so results are bit-stable.
"""

from __future__ import annotations

import numpy as np

__all__ = ["squared_edt", "sliding_max_1d", "chebyshev_max_filter"]


def _column_pass(features: np.ndarray, inf: int) -> np.ndarray:
    # distance (in rows) to the nearest feature in the same column
    h, w = features.shape
    g = np.empty((h, w), dtype=np.int64)
    g[0] = np.where(features[0], 0, inf)
    for i in range(1, h):
        g[i] = np.where(features[i], 0, np.minimum(g[i - 1] + 1, inf))
    for i in range(h - 2, -1, -1):
        g[i] = np.minimum(g[i], g[i + 1] + 1)
    return g


def _lower_envelope(f: list[int]) -> list[int]:
    """1-D squared distance transform of a sampled function (Felzenszwalb &
    Huttenlocher). Integer inputs give integer outputs."""
    n = len(f)
    v = [0] * n
    z = [0.0] * (n + 1)
    k = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        fq = f[q] + q * q
        while True:
            p = v[k]
            s = (fq - (f[p] + p * p)) / (2 * q - 2 * p)
            if s <= z[k]:
                k -= 1
                continue
            break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    out = [0] * n
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        out[q] = (q - p) * (q - p) + f[p]
    return out


def squared_edt(features: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance from every pixel to the nearest
    ``True`` pixel of ``features``. Requires at least one feature pixel."""
    features = np.asarray(features, dtype=bool)
    if not features.any():
        raise ValueError("squared_edt needs at least one feature pixel")
    h, w = features.shape
    # large enough to never win, small enough that inf**2 stays exact in int64/f64
    inf = h + w + 1
    g = _column_pass(features, inf)
    g2 = g * g
    out = np.empty((h, w), dtype=np.int64)
    for i in range(h):
        out[i] = _lower_envelope(g2[i].tolist())
    return out


def sliding_max_1d(a: np.ndarray, radius: int, axis: int = -1, fill=-np.inf) -> np.ndarray:
    """Centered running maximum over ``2*radius+1`` samples along ``axis``.

    van Herk / Gil-Werman: block-wise prefix and suffix maxima, so the cost
    per sample is constant regardless of ``radius``. Samples outside the
    array count as ``fill``.
    """
    a = np.moveaxis(np.asarray(a, dtype=np.float64), axis, -1)
    if radius <= 0:
        return np.moveaxis(a.copy(), -1, axis)
    n = a.shape[-1]
    k = 2 * radius + 1
    total = n + 2 * radius
    nblocks = -(-total // k)
    padded = np.full(a.shape[:-1] + (nblocks * k,), fill, dtype=np.float64)
    padded[..., radius : radius + n] = a
    blocks = padded.reshape(a.shape[:-1] + (nblocks, k))
    prefix = np.maximum.accumulate(blocks, axis=-1).reshape(padded.shape)
    suffix = np.maximum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1].reshape(padded.shape)
    # window over padded[x : x + k] for x = 0..n-1
    out = np.maximum(suffix[..., :n], prefix[..., k - 1 : k - 1 + n])
    return np.moveaxis(out, -1, axis)


def chebyshev_max_filter(a: np.ndarray, radius: int, fill=-np.inf) -> np.ndarray:
    """Max over the (2r+1)x(2r+1) square window, clipped at the borders."""
    return sliding_max_1d(sliding_max_1d(a, radius, axis=0, fill=fill), radius, axis=1, fill=fill)
