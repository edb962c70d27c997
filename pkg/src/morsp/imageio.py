"""8-bit grayscale image files: binary PGM (P5) always, PNG through Pillow."""

from __future__ import annotations

import io
import os

import numpy as np


class ImageFormatError(ValueError):
    pass


def quantize(u) -> np.ndarray:
    """Map [0, 1] to 0..255 with round-half-up; out-of-range values saturate."""
    v = np.floor(np.asarray(u, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(v, 0, 255).astype(np.uint8)


def dequantize(b) -> np.ndarray:
    return np.asarray(b, dtype=np.float64) / 255.0


def _header_tokens(data: bytes, count: int):
    pos = 0
    tokens = []
    while len(tokens) < count:
        # skip whitespace and comment lines
        while True:
            while pos < len(data) and data[pos : pos + 1].isspace():
                pos += 1
            if data[pos : pos + 1] == b"#":
                nl = data.find(b"\n", pos)
                if nl < 0:
                    raise ImageFormatError("truncated PGM header")
                pos = nl + 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pgm(data: bytes) -> np.ndarray:
    if data[:2] != b"P5":
        raise ImageFormatError("not a binary PGM (missing P5 magic)")
    (_, w, h, maxval), offset = _header_tokens(data, 4)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageFormatError("malformed PGM header") from None
    if width < 1 or height < 1:
        raise ImageFormatError("PGM dimensions must be positive")
    if not 0 < maxval < 256:
        raise ImageFormatError(f"only 8-bit PGM is supported (maxval {maxval})")
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise ImageFormatError("PGM raster is truncated")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    if maxval == 255:
        return pixels.copy()
    return quantize(pixels / maxval)


def encode_pgm(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def _is_png(path: str) -> bool:
    return os.path.splitext(path)[1].lower() == ".png"


def read_gray(path: str) -> np.ndarray:
    """Read an 8-bit grayscale image and return float64 values in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image, UnidentifiedImageError

        try:
            img = Image.open(io.BytesIO(data))
            img.load()
        except (UnidentifiedImageError, OSError) as exc:
            raise ImageFormatError(f"unreadable PNG: {exc}") from None
        if img.mode != "L":
            raise ImageFormatError(f"PNG must be 8-bit grayscale, got mode {img.mode}")
        return dequantize(np.asarray(img))
    return dequantize(decode_pgm(data))


def write_gray(path: str, u) -> None:
    """Quantize ``u`` (values in [0, 1]) and write it as PGM, or PNG by extension."""
    pixels = quantize(u)
    if _is_png(path):
        from PIL import Image

        Image.fromarray(pixels).save(path)
        return
    with open(path, "wb") as fh:
        fh.write(encode_pgm(pixels))
