"""Binary mask -> SAUNA soft label.

Pipeline for a mask ``y``:

1. ``d``: exact Euclidean distance from each pixel to the nearest pixel of
   the opposite class.
2. ``m``: the largest ``d`` over foreground pixels (half-width of the
   thickest structure).
3. ``t``: max of foreground ``d`` values in the Chebyshev window of radius
   ``floor(m)``; ``m`` where the window holds no foreground.
4. ``yB = s * min(1, d/m)`` and ``yT = s * (1 - min(1, t/m))`` with
   ``s = +1`` on foreground and ``-1`` on background.
5. SAUNA map ``clip(yB + yT, -1, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .errors import DegenerateMaskError, InputError
from .filters import chebyshev_max_filter, squared_edt
from .grid import BinaryMask, ScalarField

__all__ = [
    "SaunaParams",
    "SaunaComponents",
    "distance_transform",
    "max_fg_distance",
    "thickness_transform",
    "boundary_map",
    "thickness_map",
    "sauna_transform",
    "sauna_components",
    "brute_force_oracles",
    "ORACLE_MAX_PIXELS",
]

ORACLE_MAX_PIXELS = 64 * 64


@dataclass(frozen=True)
class SaunaParams:
    clamp_output: bool = True
    empty_window_thickness: Literal["set-to-m"] = "set-to-m"
    window_radius_rounding: Literal["floor"] = "floor"
    include_boundary_map: bool = True
    include_thickness_map: bool = True

    def __post_init__(self):
        if not (self.include_boundary_map or self.include_thickness_map):
            raise InputError("SaunaParams: at least one of the boundary/thickness maps is required")
        if self.empty_window_thickness != "set-to-m":
            raise InputError(f"unsupported empty_window_thickness {self.empty_window_thickness!r}")
        if self.window_radius_rounding != "floor":
            raise InputError(f"unsupported window_radius_rounding {self.window_radius_rounding!r}")


def _signs(mask: BinaryMask) -> np.ndarray:
    return np.where(mask.data == 1, 1.0, -1.0)


def _check_same_shape(mask: BinaryMask, f: ScalarField):
    if mask.shape != f.shape:
        raise InputError(f"shape mismatch: mask {mask.shape} vs field {f.shape}")


def distance_transform(mask: BinaryMask) -> ScalarField:
    """Exact distance to the nearest opposite-class pixel, for every pixel."""
    fg = mask.data == 1
    if fg.all() or not fg.any():
        raise DegenerateMaskError("degenerate mask: both classes must be present")
    sq = np.where(fg, squared_edt(~fg), squared_edt(fg))
    return ScalarField(np.sqrt(sq.astype(np.float64)), "distance")


def max_fg_distance(mask: BinaryMask, d: ScalarField) -> float:
    _check_same_shape(mask, d)
    fg = mask.data == 1
    if not fg.any():
        raise DegenerateMaskError("degenerate mask: no foreground")
    return float(d.data[fg].max())


def _window_radius(m: float) -> int:
    return int(math.floor(m))


def thickness_transform(
    mask: BinaryMask, d: ScalarField, m: float, params: SaunaParams = SaunaParams()
) -> ScalarField:
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    _check_same_shape(mask, d)
    fg = mask.data == 1
    r = _window_radius(m)
    t = chebyshev_max_filter(np.where(fg, d.data, -np.inf), r)
    t = np.where(np.isneginf(t), m, t)
    return ScalarField(t, "thickness")


def boundary_map(mask: BinaryMask, d: ScalarField, m: float) -> ScalarField:
    _check_same_shape(mask, d)
    return ScalarField(_signs(mask) * np.minimum(1.0, d.data / m), "boundary-map")


def thickness_map(mask: BinaryMask, t: ScalarField, m: float) -> ScalarField:
    _check_same_shape(mask, t)
    return ScalarField(_signs(mask) * (1.0 - np.minimum(1.0, t.data / m)), "thickness-map")


class SaunaComponents(NamedTuple):
    distance: ScalarField
    thickness: ScalarField
    m: float
    boundary: ScalarField
    thickness_map: ScalarField
    sauna: ScalarField


def _compose(yb: np.ndarray | None, yt: np.ndarray | None, params: SaunaParams) -> ScalarField:
    total = np.zeros_like(yb if yb is not None else yt)
    if params.include_boundary_map:
        total = total + yb
    if params.include_thickness_map:
        total = total + yt
    if params.clamp_output:
        return ScalarField(np.clip(total, -1.0, 1.0), "sauna")
    return ScalarField(total)


def sauna_components(mask: BinaryMask, params: SaunaParams = SaunaParams()) -> SaunaComponents:
    """All intermediate maps for a two-class mask."""
    d = distance_transform(mask)
    m = max_fg_distance(mask, d)
    t = thickness_transform(mask, d, m, params)
    yb = boundary_map(mask, d, m)
    yt = thickness_map(mask, t, m)
    return SaunaComponents(d, t, m, yb, yt, _compose(yb.data, yt.data, params))


def sauna_transform(mask: BinaryMask, params: SaunaParams = SaunaParams()) -> ScalarField:
    """SAUNA soft label in [-1, 1].

    An all-background mask maps to a constant -1 field (``m`` is undefined
    there); an all-foreground mask raises :class:`DegenerateMaskError`.
    """
    n_fg = mask.n_foreground
    if n_fg == 0:
        return ScalarField(np.full(mask.shape, -1.0), "sauna")
    if n_fg == mask.data.size:
        raise DegenerateMaskError("degenerate mask: no background")
    return sauna_components(mask, params).sauna


def brute_force_oracles(mask: BinaryMask, params: SaunaParams = SaunaParams()):
    """Reference ``(d, t, yB, sauna)`` by direct quantifier evaluation.

    O(N^2) in the pixel count; test use only. For an all-background mask
    ``d`` and ``t`` are undefined and returned as ``None``.
    """
    h, w = mask.shape
    if h * w > ORACLE_MAX_PIXELS:
        raise InputError(f"oracle input too large: {h}x{w} > {ORACLE_MAX_PIXELS} pixels")
    y = mask.data.reshape(-1).astype(np.int64)
    rows, cols = np.divmod(np.arange(h * w), w)
    if y.sum() == 0:
        minus = ScalarField(np.full((h, w), -1.0), "sauna")
        return None, None, ScalarField(np.full((h, w), -1.0), "boundary-map"), minus
    if y.sum() == y.size:
        raise DegenerateMaskError("degenerate mask: no background")

    d = np.empty(h * w)
    t = np.empty(h * w)
    chunk = 256
    for start in range(0, h * w, chunk):
        i = np.arange(start, min(start + chunk, h * w))
        dr = rows[i, None] - rows[None, :]
        dc = cols[i, None] - cols[None, :]
        sq = dr * dr + dc * dc
        other = y[i, None] != y[None, :]
        d[i] = np.sqrt(np.where(other, sq, np.iinfo(np.int64).max).min(axis=1).astype(np.float64))
    m = max(d[k] for k in range(h * w) if y[k] == 1)
    r = math.floor(m)
    for start in range(0, h * w, chunk):
        i = np.arange(start, min(start + chunk, h * w))
        cheb = np.maximum(np.abs(rows[i, None] - rows[None, :]), np.abs(cols[i, None] - cols[None, :]))
        eligible = (cheb <= r) & (y[None, :] == 1)
        vals = np.where(eligible, d[None, :], -np.inf).max(axis=1)
        t[i] = np.where(np.isneginf(vals), m, vals)

    s = 2.0 * y - 1.0
    yb = s * np.minimum(1.0, d / m)
    yt = s * (1.0 - np.minimum(1.0, t / m))
    total = 0.0
    if params.include_boundary_map:
        total = total + yb
    if params.include_thickness_map:
        total = total + yt
    if params.clamp_output:
        total = np.clip(total, -1.0, 1.0)
    shape = (h, w)
    return (
        ScalarField(d.reshape(shape), "distance"),
        ScalarField(t.reshape(shape), "thickness"),
        ScalarField(yb.reshape(shape), "boundary-map"),
        ScalarField(np.asarray(total).reshape(shape), "sauna" if params.clamp_output else None),
    )
