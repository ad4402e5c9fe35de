"""RGB raster images: bilinear sampling and PNG/PPM file I/O.

Storage is 8-bit per channel; sampling and blending happen in float on [0,1].
Pixel centers sit at integer + 0.5; coordinates outside the image clamp to
the edge pixels. No gamma handling: blending operates on stored values
directly, which matches the rest of the pipeline and is a documented
simplification.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = ["Image", "ImageFormatError", "sample_bilinear", "load_image", "save_image"]


class ImageFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Image:
    """Row-major RGB raster, uint8 storage, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("pixels must be a (h, w, 3) uint8 array")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64) / 255.0

    @classmethod
    def from_float(cls, data: np.ndarray) -> "Image":
        q = np.rint(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
        return cls(q)

    @classmethod
    def constant(cls, width: int, height: int, rgb) -> "Image":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:] = np.asarray(rgb, dtype=np.uint8)
        return cls(px)


def sample_bilinear(img: Image, x, y) -> np.ndarray:
    """Bilinear sample at subpixel coordinates, clamp-to-edge.

    Accepts scalars or equal-shaped arrays; returns float RGB on [0,1] with
    shape (..., 3).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h, w = img.height, img.width
    # Clamp in continuous space first so out-of-range coordinates land
    # exactly on the edge pixel centers (true clamp-to-edge).
    fx = np.clip(x - 0.5, 0.0, w - 1.0)
    fy = np.clip(y - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.intp)
    y0 = np.floor(fy).astype(np.intp)
    tx = (fx - x0)[..., None]
    ty = (fy - y0)[..., None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    f = img.as_float()
    top = f[y0, x0] * (1.0 - tx) + f[y0, x1] * tx
    bot = f[y1, x0] * (1.0 - tx) + f[y1, x1] * tx
    return top * (1.0 - ty) + bot * ty


def sample_bilinear_array(f: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Like sample_bilinear but on a pre-converted float array (hot loops)."""
    h, w = f.shape[:2]
    fx = np.clip(x - 0.5, 0.0, w - 1.0)
    fy = np.clip(y - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.intp)
    y0 = np.floor(fy).astype(np.intp)
    tx = (fx - x0)[..., None]
    ty = (fy - y0)[..., None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = f[y0, x0] * (1.0 - tx) + f[y0, x1] * tx
    bot = f[y1, x0] * (1.0 - tx) + f[y1, x1] * tx
    return top * (1.0 - ty) + bot * ty


def load_image(path) -> Image:
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P6":
        return _decode_ppm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        with PILImage.open(path) as im:
            return Image(np.asarray(im.convert("RGB")))
    raise ImageFormatError(f"{path}: not a PNG or binary PPM (P6) file")


def save_image(img: Image, path) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        PILImage.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
    elif suffix in (".ppm", ".pnm"):
        path.write_bytes(_encode_ppm(img))
    else:
        raise ImageFormatError(f"{path}: unsupported output format {suffix!r}")


def _encode_ppm(img: Image) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def _decode_ppm(data: bytes) -> Image:
    # P6 header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, a single whitespace byte before the raster.
    pos = 0
    tokens = []
    while len(tokens) < 4:
        if pos >= len(data):
            raise ImageFormatError("truncated PPM header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P6":
        raise ImageFormatError("not a binary PPM (P6) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError("non-numeric PPM header field") from None
    if width < 1 or height < 1:
        raise ImageFormatError("invalid PPM dimensions")
    if maxval != 255:
        raise ImageFormatError(f"unsupported PPM maxval {maxval}")
    need = width * height * 3
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise ImageFormatError("truncated PPM raster")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()
    return Image(px)
