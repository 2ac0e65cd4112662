"""Batched feature-map container conventions and binary serialization.

Feature maps are plain numpy arrays with shape (B, C, H, W), float64,
row-major.  Nothing here owns memory semantics beyond numpy's; the
helpers validate shapes, move between the 4D layout and the
spatially-flattened (B, C, H*W) layout, and read/write the on-disk
format used by the CLI golden tests:

    16-byte header: four little-endian uint32 dims (B, C, H, W)
    payload: B*C*H*W little-endian float64 values, row-major
"""

from __future__ import annotations

import numpy as np

HEADER_DTYPE = np.dtype("<u4")
PAYLOAD_DTYPE = np.dtype("<f8")


def check_tensor4(x: np.ndarray, name: str = "tensor") -> np.ndarray:
    """Validate a (B, C, H, W) float64 array and return it as float64."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValueError(f"{name} must have 4 dims (B, C, H, W), got shape {x.shape}")
    if min(x.shape) < 1:
        raise ValueError(f"{name} dims must all be positive, got shape {x.shape}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def flatten_spatial(x: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (B, C, H*W), row-major within each channel."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValueError(f"expected 4 dims, got shape {x.shape}")
    b, c, h, w = x.shape
    return x.reshape(b, c, h * w)


def reshape_spatial(x: np.ndarray, h: int, w: int) -> np.ndarray:
    """(B, C, H*W) -> (B, C, H, W); exact inverse of flatten_spatial."""
    x = np.asarray(x)
    if x.ndim != 3:
        raise ValueError(f"expected 3 dims, got shape {x.shape}")
    if x.shape[-1] != h * w:
        raise ValueError(
            f"cannot reshape last dim {x.shape[-1]} into spatial ({h}, {w})"
        )
    return x.reshape(x.shape[0], x.shape[1], h, w)


def save_tensor(path, x: np.ndarray) -> None:
    """Write a (B, C, H, W) array in the 16-byte-header binary format."""
    x = check_tensor4(x)
    with open(path, "wb") as fh:
        fh.write(np.asarray(x.shape, dtype=HEADER_DTYPE).tobytes())
        fh.write(x.astype(PAYLOAD_DTYPE, copy=False).tobytes())


def load_tensor(path) -> np.ndarray:
    """Read a tensor written by save_tensor."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise ValueError(f"{path}: truncated header ({len(raw)} bytes)")
    dims = np.frombuffer(raw[:16], dtype=HEADER_DTYPE)
    if min(dims) < 1:
        raise ValueError(f"{path}: invalid dims {tuple(int(d) for d in dims)}")
    count = int(np.prod(dims.astype(np.int64)))
    payload = np.frombuffer(raw[16:], dtype=PAYLOAD_DTYPE)
    if payload.size != count:
        raise ValueError(
            f"{path}: payload has {payload.size} values, header promises {count}"
        )
    return payload.reshape(tuple(int(d) for d in dims)).copy()
