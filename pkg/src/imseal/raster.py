"""Core raster container, color conversion, resizing and PNG/BMP file I/O.

Pixels are kept as float64 in [0, 255] internally; quantization to 8 bit
happens only when a file is written.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

__all__ = [
    "Raster", "RasterError", "load_image", "save_image", "save_bitmatrix",
    "load_bitmatrix", "rgb_to_yuv", "yuv_to_rgb", "resize_nearest",
]

# BT.601 analog luma/chroma matrix, chroma stored zero-centered (no offset)
_RGB2YUV = np.array([
    [0.299, 0.587, 0.114],
    [-0.14713, -0.28886, 0.436],
    [0.615, -0.51499, -0.10001],
])
_YUV2RGB = np.linalg.inv(_RGB2YUV)


class RasterError(ValueError):
    """Bad raster shape, channel count or file format."""


@dataclass
class Raster:
    """Planar image: `data` has shape (channels, height, width), float64."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3 or data.shape[0] not in (1, 3):
            raise RasterError(f"expected 1 or 3 planes, got shape {data.shape}")
        self.data = data

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def is_gray(self):
        return self.channels == 1

    def plane(self, i=0):
        return self.data[i]

    def copy(self):
        return Raster(self.data.copy())

    def clipped(self):
        return Raster(np.clip(self.data, 0.0, 255.0))

    def validate_block_grid(self):
        """Hard check used by the embedder: dims must be multiples of 4."""
        if self.height % 4 or self.width % 4:
            raise RasterError(
                f"image is {self.height}x{self.width}; both dims must be multiples of 4")


def rgb_to_yuv(img: Raster) -> Raster:
    """BT.601 RGB -> YUV. Channel 0 of the result is luminance in [0, 255]."""
    if img.is_gray:
        raise RasterError("already grayscale; no color conversion applies")
    yuv = np.einsum("ij,jhw->ihw", _RGB2YUV, img.data)
    return Raster(yuv)


def yuv_to_rgb(img: Raster) -> Raster:
    """Inverse of rgb_to_yuv, clamped to [0, 255]."""
    if img.is_gray:
        raise RasterError("already grayscale; no color conversion applies")
    rgb = np.einsum("ij,jhw->ihw", _YUV2RGB, img.data)
    return Raster(np.clip(rgb, 0.0, 255.0))


def resize_nearest(m: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Nearest-neighbor resize of a 2-D matrix."""
    if new_h <= 0 or new_w <= 0:
        raise RasterError("target size must be positive")
    m = np.asarray(m)
    h, w = m.shape
    rows = (np.arange(new_h) * h) // new_h
    cols = (np.arange(new_w) * w) // new_w
    return m[rows][:, cols]


def load_image(path) -> Raster:
    """Load an 8-bit PNG or BMP as a Raster; warns when dims are not multiples of 4."""
    with Image.open(path) as im:
        if im.format not in ("PNG", "BMP"):
            raise RasterError(f"unsupported format {im.format}; PNG or BMP expected")
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            raise RasterError("unsupported bit depth: 16-bit input")
        if im.mode not in ("L", "RGB"):
            if im.mode in ("1", "P", "LA"):
                im = im.convert("L") if im.mode == "1" else im.convert("RGB")
            elif im.mode == "RGBA":
                raise RasterError("alpha channels are not supported")
            else:
                raise RasterError(f"unsupported mode {im.mode}")
        arr = np.asarray(im, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.transpose(2, 0, 1)
    r = Raster(arr)
    if r.height % 4 or r.width % 4:
        warnings.warn(
            f"{path}: dims {r.height}x{r.width} are not multiples of 4; "
            "embedding will reject this image", stacklevel=2)
    return r


def save_image(raster: Raster, path) -> None:
    """Write as 8-bit PNG or BMP (by extension), rounding and clamping."""
    arr = np.clip(np.round(raster.data), 0, 255).astype(np.uint8)
    if raster.is_gray:
        im = Image.fromarray(arr[0], mode="L")
    else:
        im = Image.fromarray(arr.transpose(1, 2, 0), mode="RGB")
    im.save(path)


def save_bitmatrix(bits: np.ndarray, path) -> None:
    """Store a {0,1} matrix (or channel stack) as an 8-bit PNG with values {0,255}."""
    bits = np.asarray(bits)
    save_image(Raster(bits.astype(np.float64) * 255.0), path)


def load_bitmatrix(path) -> np.ndarray:
    """Read a halftone/tamper-map PNG back to {0,1}; shape (h,w) or (c,h,w)."""
    r = load_image(path)
    bits = (r.data >= 128).astype(np.uint8)
    return bits[0] if r.is_gray else bits
