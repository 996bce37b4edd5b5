"""Raster types, 8-bit image I/O and the SSTF binary tensor format.

All rasters are float32, channel-major ``(C, H, W)`` and read-only once
constructed. Image samples live in [0, 1]; feature maps are unbounded.

SSTF layout (little endian)::

    b"SSTF" | u16 version=1 | u16 dtype (1 = float32) | u32 ndim
    | ndim x u64 dims | row-major payload
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    BadMagicError,
    DimensionOverflowError,
    ImageReadError,
    PixelRangeError,
    TensorFormatError,
    TruncatedPayloadError,
    UnsupportedImageError,
    VersionMismatchError,
)

SSTF_MAGIC = b"SSTF"
SSTF_VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sHHI")
_MAX_NDIM = 8
# Refuse payloads whose byte size does not fit in a signed 64-bit offset.
_MAX_PAYLOAD_BYTES = 2**63 - 1


class _Raster:
    __slots__ = ("_data",)

    def __init__(self, data):
        with np.errstate(over="ignore"):  # overflow surfaces as inf, rejected below
            arr = np.array(data, dtype=np.float32, order="C", copy=True)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise ValueError(f"expected (C, H, W) or (H, W) data, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("raster data contains NaN or Inf")
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def channels(self) -> int:
        return self._data.shape[0]

    @property
    def height(self) -> int:
        return self._data.shape[1]

    @property
    def width(self) -> int:
        return self._data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self._data.shape

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    __hash__ = None

    def __repr__(self):
        c, h, w = self.shape
        return f"{type(self).__name__}(C={c}, H={h}, W={w})"


class ImageTensor(_Raster):
    """Pixel raster, canonical range [0, 1] (not enforced: translations may overshoot)."""

    __slots__ = ()


class FeatureMap(_Raster):
    """Unbounded real-valued activations with the same layout as ImageTensor."""

    __slots__ = ()


@dataclass(frozen=True)
class ChannelStats:
    means: tuple[float, ...]
    stds: tuple[float, ...]
    epsilon: float

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        stds = tuple(float(s) for s in self.stds)
        if len(means) != len(stds) or not means:
            raise ValueError("means and stds must be non-empty and of equal length")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        floor = math.sqrt(self.epsilon)
        if any(not math.isfinite(m) for m in means) or any(not s >= floor for s in stds):
            raise ValueError("stds must be >= sqrt(epsilon) and all values finite")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def channels(self) -> int:
        return len(self.means)


# -- 8-bit images -----------------------------------------------------------

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _png_bit_depth(path: Path) -> tuple[int, int] | None:
    with open(path, "rb") as fh:
        head = fh.read(26)
    if len(head) < 26 or not head.startswith(_PNG_SIGNATURE):
        return None
    return head[24], head[25]


def load_image(path) -> ImageTensor:
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError as exc:
        raise ImageReadError(f"{path}: no such file") from exc
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageReadError(f"{path}: cannot decode image ({exc})") from exc

    if img.format not in ("PNG", "JPEG"):
        raise UnsupportedImageError(f"{path}: unsupported format {img.format}")
    if img.format == "PNG":
        depth, color_type = _png_bit_depth(path)
        # color type 3 is palette: indices may be < 8 bit, entries are 8-bit RGB
        if depth != 8 and color_type != 3:
            raise UnsupportedImageError(f"{path}: unsupported bit depth {depth}")
    if img.mode == "P":
        if "transparency" in img.info:
            raise UnsupportedImageError(f"{path}: palette with transparency")
        img = img.convert("RGB")
    if img.mode not in ("L", "RGB"):
        raise UnsupportedImageError(f"{path}: unsupported color model {img.mode}")

    arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    else:
        arr = arr.transpose(2, 0, 1)
    return ImageTensor(arr.astype(np.float32) / np.float32(255.0))


def save_image(img: ImageTensor, path, clamp: bool = False) -> None:
    """Quantize with round(v * 255) and write a PNG."""
    data = img.data.astype(np.float64)
    if img.channels not in (1, 3):
        raise ValueError(f"can only save 1 or 3 channel images, got C={img.channels}")
    if clamp:
        data = np.clip(data, 0.0, 1.0)
    elif data.min() < 0.0 or data.max() > 1.0:
        raise PixelRangeError(
            f"samples outside [0, 1] (min={data.min():.6g}, max={data.max():.6g}); "
            "pass clamp=True to clip"
        )
    q = np.rint(data * 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = Image.fromarray(q[0], mode="L")
    else:
        pil = Image.fromarray(np.ascontiguousarray(q.transpose(1, 2, 0)), mode="RGB")
    pil.save(Path(path), format="PNG")


# -- SSTF tensors -----------------------------------------------------------

def _encode(arr: np.ndarray) -> bytes:
    header = _HEADER.pack(SSTF_MAGIC, SSTF_VERSION, DTYPE_FLOAT32, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return header + dims + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _decode(buf: bytes, name="<buffer>") -> np.ndarray:
    if len(buf) < _HEADER.size:
        if not SSTF_MAGIC.startswith(buf[:4]):
            raise BadMagicError(f"{name}: not an SSTF file")
        raise TruncatedPayloadError(f"{name}: header truncated")
    magic, version, dtype, ndim = _HEADER.unpack_from(buf)
    if magic != SSTF_MAGIC:
        raise BadMagicError(f"{name}: bad magic {magic!r}")
    if version != SSTF_VERSION:
        raise VersionMismatchError(f"{name}: version {version}, expected {SSTF_VERSION}")
    if dtype != DTYPE_FLOAT32:
        raise TensorFormatError(f"{name}: unsupported dtype code {dtype}")
    if ndim < 1 or ndim > _MAX_NDIM:
        raise TensorFormatError(f"{name}: ndim {ndim} outside 1..{_MAX_NDIM}")
    off = _HEADER.size
    if len(buf) < off + 8 * ndim:
        raise TruncatedPayloadError(f"{name}: dimension table truncated")
    dims = struct.unpack_from(f"<{ndim}Q", buf, off)
    off += 8 * ndim
    count = math.prod(dims)
    if count * 4 > _MAX_PAYLOAD_BYTES:
        raise DimensionOverflowError(f"{name}: dims {dims} overflow the payload size")
    payload = len(buf) - off
    if payload < count * 4:
        raise TruncatedPayloadError(
            f"{name}: payload has {payload} bytes, dims {dims} need {count * 4}"
        )
    if payload > count * 4:
        raise TensorFormatError(f"{name}: {payload - count * 4} trailing bytes")
    return np.frombuffer(buf, dtype="<f4", count=count, offset=off).reshape(dims)


def write_tensor(t, path) -> None:
    """Write a FeatureMap/ImageTensor as a 3-D SSTF file."""
    Path(path).write_bytes(_encode(t.data))


def read_tensor(path) -> FeatureMap:
    path = Path(path)
    arr = _decode(path.read_bytes(), name=str(path))
    if arr.ndim not in (2, 3):
        raise TensorFormatError(f"{path}: expected a 2-D or 3-D tensor, got {arr.ndim}-D")
    if 0 in arr.shape:
        raise TensorFormatError(f"{path}: zero-length dimension in {arr.shape}")
    return FeatureMap(arr)


IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
TENSOR_SUFFIX = ".sstf"


def load_raster(path) -> ImageTensor:
    """Load an 8-bit image or an SSTF tensor file as an ImageTensor."""
    path = Path(path)
    if path.suffix.lower() == TENSOR_SUFFIX:
        try:
            return ImageTensor(read_tensor(path).data)
        except FileNotFoundError as exc:
            raise ImageReadError(f"{path}: no such file") from exc
    return load_image(path)
