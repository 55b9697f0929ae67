"""Grid data model, validation and file I/O.

Two containers are used throughout the package:

* :class:`BinaryMask` - a 2-D grid of {0, 1} labels.
* :class:`ScalarField` - a 2-D grid of finite reals tagged with a ``kind``
  (distance, thickness, signed maps, SAUNA maps, predictions, images).

Both are immutable: the wrapped array is copied on construction and marked
read-only.  Coordinates are ``(row, col)``, 0-based, top-left origin.

Field files use a small lossless binary layout::

    b"SAUNA1" | u32 LE height | u32 LE width | height*width f32 LE, row-major
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FieldFormatError, InputError

__all__ = [
    "BinaryMask",
    "ScalarField",
    "FIELD_KINDS",
    "SIGNED_KINDS",
    "load_mask",
    "save_mask",
    "save_field",
    "load_field",
    "encode_field",
    "decode_field",
    "heatmap_indices",
    "render_heatmap",
    "atomic_write_bytes",
]

FIELD_MAGIC = b"SAUNA1"
_HEADER = struct.Struct("<II")

SIGNED_KINDS = frozenset({"boundary-map", "thickness-map", "sauna", "prediction"})
NONNEG_KINDS = frozenset({"distance", "thickness"})
FIELD_KINDS = SIGNED_KINDS | NONNEG_KINDS | {"image"}


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Ground-truth labels in {0, 1}, stored as a read-only ``uint8`` array."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise InputError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("mask has zero dimensions")
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
        elif not np.all((arr == 0) | (arr == 1)):
            raise InputError("mask values must be exactly 0 or 1")
        object.__setattr__(self, "data", _readonly(arr.astype(np.uint8)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def n_foreground(self) -> int:
        return int(self.data.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"BinaryMask(shape={self.shape}, fg={self.n_foreground})"


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real-valued grid. ``kind=None`` means untagged (finiteness only)."""

    data: np.ndarray = field(repr=False)
    kind: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"field must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("field has zero dimensions")
        if not np.all(np.isfinite(arr)):
            raise InputError("field contains non-finite values")
        kind = self.kind
        if kind is not None and kind not in FIELD_KINDS:
            raise InputError(f"unknown field kind {kind!r}")
        if kind in SIGNED_KINDS and (arr.min() < -1.0 or arr.max() > 1.0):
            raise InputError(f"{kind} values must lie in [-1, 1]")
        if kind in NONNEG_KINDS and arr.min() < 0.0:
            raise InputError(f"{kind} values must be non-negative")
        if kind == "image" and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InputError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _readonly(arr))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def with_kind(self, kind: str | None) -> "ScalarField":
        return ScalarField(self.data, kind)

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"ScalarField(shape={self.shape}, kind={self.kind!r})"


# --------------------------------------------------------------------------
# file helpers


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write ``payload`` to ``path`` via a temp file in the same directory."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_mask(path, fg_threshold: int = 127) -> BinaryMask:
    """Read an 8-bit grayscale PNG or binary PGM; intensity > threshold is FG."""
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "1":
                img = img.convert("L")
            elif mode != "L":
                if mode in ("I;16", "I;16B", "I;16L", "I"):
                    raise InputError(f"{path}: expected 8-bit grayscale, got mode {mode}")
                raise InputError(f"{path}: non-grayscale input (mode {mode})")
            arr = np.asarray(img, dtype=np.uint8)
    except InputError:
        raise
    except (OSError, SyntaxError, ValueError) as exc:
        raise OSError(f"cannot read mask {path}: {exc}") from exc
    if arr.ndim != 2 or 0 in arr.shape:
        raise InputError(f"{path}: zero dimensions")
    return BinaryMask((arr > fg_threshold).astype(np.uint8))


def save_mask(mask: BinaryMask, path) -> None:
    """Write a mask as {0, 255}. ``.pgm`` gives binary P5, anything else PNG."""
    img = Image.fromarray((mask.data * 255).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    fmt = "PPM" if str(path).lower().endswith((".pgm", ".pnm")) else "PNG"
    img.save(buf, format=fmt)
    atomic_write_bytes(path, buf.getvalue())


def encode_field(f: ScalarField) -> bytes:
    h, w = f.shape
    return FIELD_MAGIC + _HEADER.pack(h, w) + f.data.astype("<f4").tobytes(order="C")


def decode_field(payload: bytes, kind: str | None = None) -> ScalarField:
    head = len(FIELD_MAGIC) + _HEADER.size
    if len(payload) < len(FIELD_MAGIC) or payload[: len(FIELD_MAGIC)] != FIELD_MAGIC:
        raise FieldFormatError("bad magic")
    if len(payload) < head:
        raise FieldFormatError("truncated header")
    h, w = _HEADER.unpack_from(payload, len(FIELD_MAGIC))
    if h < 1 or w < 1:
        raise FieldFormatError("zero dimensions")
    expected = head + 4 * h * w
    if len(payload) < expected:
        raise FieldFormatError(f"truncated payload: {len(payload)} < {expected} bytes")
    if len(payload) > expected:
        raise FieldFormatError(f"trailing bytes after payload ({len(payload) - expected})")
    values = np.frombuffer(payload, dtype="<f4", count=h * w, offset=head)
    if np.isnan(values).any():
        raise FieldFormatError("NaN in payload")
    if not np.isfinite(values).all():
        raise FieldFormatError("Inf in payload")
    return ScalarField(values.astype(np.float64).reshape(h, w), kind)


def save_field(f: ScalarField, path) -> None:
    """Store a field as little-endian f32.

    The round trip is bit-exact for values representable in float32 (all
    values produced by :func:`load_field` are).
    """
    atomic_write_bytes(path, encode_field(f))


def load_field(path, kind: str | None = None) -> ScalarField:
    with open(path, "rb") as fh:
        payload = fh.read()
    return decode_field(payload, kind)


# --------------------------------------------------------------------------
# heatmaps


def heatmap_indices(f: ScalarField) -> np.ndarray:
    """Map a field to 8-bit intensities.

    Signed kinds (and untagged fields) use ``round((v + 1) * 127.5)`` with
    halves rounded up, so -1 -> 0, 0 -> 128, +1 -> 255.  Distance-like kinds
    are divided by their maximum and mapped as ``round(v * 255)``.
    """
    v = f.data
    if f.kind in NONNEG_KINDS or f.kind == "image":
        peak = v.max()
        scaled = v / peak if peak > 0 else np.zeros_like(v)
        idx = np.floor(scaled * 255.0 + 0.5)
    else:
        idx = np.floor((np.clip(v, -1.0, 1.0) + 1.0) * 127.5 + 0.5)
    return idx.astype(np.uint8)


def _palette(name: str) -> list[int]:
    from matplotlib import colormaps

    rgba = colormaps[name](np.linspace(0.0, 1.0, 256))
    rgb = np.floor(rgba[:, :3] * 255.0 + 0.5).astype(np.uint8)
    return rgb.reshape(-1).tolist()


def render_heatmap(f: ScalarField, path) -> None:
    """Write an 8-bit palette PNG whose pixel indices are the intensities.

    The palette is a diverging blue-white-red ramp for signed fields and a
    sequential one for distance-like fields.
    """
    idx = heatmap_indices(f)
    img = Image.fromarray(idx, mode="P")
    signed = not (f.kind in NONNEG_KINDS or f.kind == "image")
    img.putpalette(_palette("RdBu_r" if signed else "magma"))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())
