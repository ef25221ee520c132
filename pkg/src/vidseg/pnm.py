"""Minimal binary PGM/PPM readers and writers.

Supports 8-bit P5/P6 and 16-bit P5 (big-endian sample order, used for
superpixel label maps). No other PNM variants.
"""

from __future__ import annotations

import os

import numpy as np


class PnmError(ValueError):
    pass


def _read_header(data: bytes):
    """Parse a PNM header, returning (magic, width, height, maxval, offset)."""
    if len(data) < 2:
        raise PnmError("truncated PNM header")
    magic = data[:2].decode("ascii", errors="replace")
    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise PnmError("truncated PNM header")
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval, then raster
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PnmError("malformed PNM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise PnmError("bad PNM dimensions or maxval")
    return magic, width, height, maxval, pos


def read_pnm(path):
    """Read a binary PGM (P5) or PPM (P6) file.

    Returns an (H, W) array for PGM (uint8, or uint16 when maxval > 255)
    and an (H, W, 3) uint8 array for PPM.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic, width, height, maxval, offset = _read_header(data)
    if magic not in ("P5", "P6"):
        raise PnmError(f"unsupported PNM magic {magic!r} in {path}")
    channels = 3 if magic == "P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    raster = np.frombuffer(data, dtype=dtype, count=-1, offset=offset)
    if raster.size < count:
        raise PnmError(f"truncated raster in {path}")
    raster = raster[:count]
    if magic == "P6":
        if maxval > 255:
            raise PnmError("16-bit PPM not supported")
        return raster.reshape(height, width, 3).copy()
    if maxval > 255:
        return raster.astype(np.uint16).reshape(height, width)
    return raster.reshape(height, width).copy()


def write_pgm(path, image, maxval=None):
    """Write an (H, W) array as binary PGM; uint16 data is stored big-endian."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise PnmError("PGM image must be 2-D")
    if maxval is None:
        maxval = 65535 if image.dtype.itemsize > 1 else 255
    if maxval > 255:
        raster = image.astype(">u2")
    else:
        raster = image.astype("u1")
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode("ascii")
    _atomic_write(path, header + raster.tobytes())


def write_ppm(path, image):
    """Write an (H, W, 3) uint8 array as binary PPM."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise PnmError("PPM image must be (H, W, 3)")
    header = f"P6\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    _atomic_write(path, header + image.astype("u1").tobytes())


def _atomic_write(path, payload: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
