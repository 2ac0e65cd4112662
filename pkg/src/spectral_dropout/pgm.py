"""PGM (portable graymap) reading and writing.

Supports plain (P2) and raw (P5) encodings with maxval 255 or 65535;
raw 16-bit samples are big-endian per the PNM convention.  This is the
only image format the CLI speaks: dependency-free and byte-stable for
golden tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PgmImage:
    width: int
    height: int
    maxval: int
    pixels: np.ndarray  # (height, width) integer array

    @property
    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


def _tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    n = len(data)
    while i < n:
        ch = data[i : i + 1]
        if ch in b" \t\r\n":
            i += 1
        elif ch == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < n and data[j : j + 1] not in b" \t\r\n":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path) -> PgmImage:
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    end = 0
    for token, pos in _tokens(data):
        fields.append(token)
        end = pos
        if len(fields) == 4:
            break
    if len(fields) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    magic = fields[0]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = (int(fields[k]) for k in (1, 2, 3))
    except ValueError:
        raise ValueError(f"{path}: non-numeric PGM header fields") from None
    if width < 1 or height < 1:
        raise ValueError(f"{path}: invalid dimensions {width}x{height}")
    if maxval not in (255, 65535):
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    count = width * height
    if magic == b"P5":
        payload = data[end + 1 :]  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        expected = count * dtype.itemsize
        if len(payload) < expected:
            raise ValueError(f"{path}: raw payload truncated")
        pixels = np.frombuffer(payload[:expected], dtype=dtype).astype(np.int64)
    else:
        values = data[end:].split()
        if len(values) < count:
            raise ValueError(f"{path}: plain payload truncated")
        pixels = np.array([int(v) for v in values[:count]], dtype=np.int64)
    if pixels.min() < 0 or pixels.max() > maxval:
        raise ValueError(f"{path}: sample out of range 0..{maxval}")
    return PgmImage(width, height, maxval, pixels.reshape(height, width))


def write_pgm(path, pixels: np.ndarray, maxval: int = 255, raw: bool = True) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError(f"expected a 2D pixel array, got shape {pixels.shape}")
    if maxval not in (255, 65535):
        raise ValueError(f"unsupported maxval {maxval}")
    clipped = np.clip(np.rint(pixels), 0, maxval).astype(np.int64)
    h, w = clipped.shape
    header = f"P5\n{w} {h}\n{maxval}\n" if raw else f"P2\n{w} {h}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if raw:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
            fh.write(clipped.astype(dtype).tobytes())
        else:
            body = "\n".join(" ".join(str(v) for v in row) for row in clipped)
            fh.write(body.encode("ascii") + b"\n")


def quantize(values: np.ndarray, maxval: int = 255) -> np.ndarray:
    """Round a float image already scaled to 0..maxval into legal samples."""
    return np.clip(np.rint(values), 0, maxval).astype(np.int64)


def render_band(
    band: np.ndarray, signed: bool, maxval: int = 255, floor: float = 0.0
) -> np.ndarray:
    """Normalize a coefficient band for viewing.

    Signed detail bands map zero to mid-gray with symmetric range;
    non-negative approximation bands are min-max stretched.  Bands whose
    dynamic range is at or below ``floor`` (for absorbing float noise in
    analytically-zero bands) render as uniform mid-gray.
    """
    band = np.asarray(band, dtype=np.float64)
    if signed:
        scale = float(np.max(np.abs(band)))
        if scale <= floor:
            return np.full(band.shape, (maxval + 1) // 2, dtype=np.int64)
        return quantize((band / scale) * (maxval / 2.0) + maxval / 2.0, maxval)
    lo, hi = float(band.min()), float(band.max())
    if hi - lo <= floor:
        return np.full(band.shape, (maxval + 1) // 2, dtype=np.int64)
    return quantize((band - lo) / (hi - lo) * maxval, maxval)
