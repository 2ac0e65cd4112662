"""Orthonormal DCT-II/DCT-III with a radix-2 FFT fast path.

The forward transform is the orthonormal DCT-II

    X[k] = s(k) * sum_n x[n] * cos(pi*(2n+1)*k / (2N)),
    s(0) = sqrt(1/N),  s(k>0) = sqrt(2/N),

and the inverse is its transpose (orthonormal DCT-III), so Parseval
holds exactly and round trips are identities up to roundoff.

Power-of-two lengths route through an N-point complex FFT using the
even/odd reshuffle of Makhoul (1980); every other length falls back to
a cached-matrix direct evaluation.  Both paths implement the same
normalization and agree to ~1e-14, which the test suite pins down.

Transforms apply along the trailing axis (trailing two axes for the 2D
variants) and broadcast over leading axes.
"""

from __future__ import annotations

import math

import numpy as np

from . import opcount

_REV_CACHE: dict[int, np.ndarray] = {}
_MATRIX_CACHE: dict[int, np.ndarray] = {}


def _bit_reverse(n: int) -> np.ndarray:
    if n not in _REV_CACHE:
        bits = n.bit_length() - 1
        idx = np.arange(n)
        rev = np.zeros(n, dtype=np.int64)
        for b in range(bits):
            rev = (rev << 1) | ((idx >> b) & 1)
        _REV_CACHE[n] = rev
    return _REV_CACHE[n]


def fft(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unitary radix-2 DFT along the last axis (1/sqrt(N) each way)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"fft length must be a power of two, got {n}")
    opcount.bump()
    y = x[..., _bit_reverse(n)].copy()
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = y.reshape(y.shape[:-1] + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * tw
        hi = even - odd
        blocks[..., :half] += odd
        blocks[..., half:] = hi
        size *= 2
    return y / math.sqrt(n)


def _dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix C with C[k, m] = s(k) cos(pi(2m+1)k/2n)."""
    if n not in _MATRIX_CACHE:
        k = np.arange(n)[:, None]
        m = np.arange(n)[None, :]
        c = np.cos(np.pi * (2 * m + 1) * k / (2 * n))
        c *= np.sqrt(2.0 / n)
        c[0] *= np.sqrt(0.5)
        _MATRIX_CACHE[n] = c
    return _MATRIX_CACHE[n]


def _scale(n: int) -> np.ndarray:
    s = np.full(n, np.sqrt(2.0 / n))
    s[0] = np.sqrt(1.0 / n)
    return s


def _use_fast(n: int, path: str) -> bool:
    if path == "fast":
        if n & (n - 1):
            raise ValueError(f"fast path requires a power-of-two length, got {n}")
        return True
    if path == "direct":
        return False
    if path == "auto":
        return n & (n - 1) == 0
    raise ValueError(f"unknown path '{path}' (auto|fast|direct)")


def dct2_1d(x: np.ndarray, path: str = "auto") -> np.ndarray:
    """Orthonormal DCT-II along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty signal")
    if not _use_fast(n, path):
        opcount.bump()
        return x @ _dct_matrix(n).T
    half = (n + 1) // 2
    v = np.empty_like(x)
    v[..., :half] = x[..., 0::2]
    v[..., half:] = x[..., 1::2][..., ::-1]
    spectrum = fft(v) * math.sqrt(n)
    phase = np.exp(-1j * np.pi * np.arange(n) / (2 * n))
    return _scale(n) * np.real(phase * spectrum)


def idct_1d(x: np.ndarray, path: str = "auto") -> np.ndarray:
    """Orthonormal DCT-III (exact inverse of dct2_1d) along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty signal")
    if not _use_fast(n, path):
        opcount.bump()
        return x @ _dct_matrix(n)
    # rebuild the complex pre-FFT sequence of the forward transform:
    # U[0] = X2[0]/2, U[k] = (X2[k] - i X2[n-k])/2 with X2 = 2 X / s
    x2 = (2.0 / _scale(n)) * x
    u = np.empty(x.shape, dtype=np.complex128)
    u[..., 0] = 0.5 * x2[..., 0]
    if n > 1:
        u[..., 1:] = 0.5 * (x2[..., 1:] - 1j * x2[..., ::-1][..., : n - 1])
    u *= np.exp(1j * np.pi * np.arange(n) / (2 * n))
    v = np.real(fft(u, inverse=True)) / math.sqrt(n)
    half = (n + 1) // 2
    out = np.empty_like(x)
    out[..., 0::2] = v[..., :half]
    out[..., 1::2] = v[..., half:][..., ::-1]
    return out


def dct2_2d(m: np.ndarray, path: str = "auto") -> np.ndarray:
    """Separable orthonormal DCT-II over the trailing two axes."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim < 2 or m.shape[-1] == 0 or m.shape[-2] == 0:
        raise ValueError(f"expected a non-empty matrix, got shape {m.shape}")
    rows = dct2_1d(m, path)
    return np.moveaxis(dct2_1d(np.moveaxis(rows, -1, -2), path), -1, -2)


def idct_2d(m: np.ndarray, path: str = "auto") -> np.ndarray:
    """Separable orthonormal DCT-III over the trailing two axes."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim < 2 or m.shape[-1] == 0 or m.shape[-2] == 0:
        raise ValueError(f"expected a non-empty matrix, got shape {m.shape}")
    cols = np.moveaxis(idct_1d(np.moveaxis(m, -1, -2), path), -1, -2)
    return idct_1d(cols, path)


def prune_count(eta: float, count: int) -> int:
    """Number of entries the eta quantile prunes: ceil(eta*count).

    A tiny epsilon absorbs float noise in eta*count so that exact
    rational products (0.2 * 5 = 1) do not round up spuriously.
    """
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must be in [0, 1), got {eta}")
    if eta == 0.0:
        return 0
    return max(1, math.ceil(eta * count - 1e-9))


def prune_quantile(coeffs: np.ndarray, eta: float) -> np.ndarray:
    """Zero every coefficient with magnitude strictly below the eta quantile.

    With k = ceil(eta*M) and sorted magnitudes m_(0) <= ... <= m_(M-1),
    the pruning threshold is the first surviving rank t = m_(k) and
    entries with |c| < t are zeroed: exactly k entries when magnitudes
    are distinct, fewer when ties straddle the threshold (ties at t
    always survive, so an all-equal population is untouched at any
    eta).  eta = 0 is an exact no-op.  All entries of ``coeffs`` count
    as one population; per-channel scoping is the caller's job.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    k = prune_count(eta, coeffs.size)
    out = coeffs.copy()
    if k == 0:
        return out
    mags = np.abs(coeffs).ravel()
    # k == M would leave no survivor rank; clamp so the top tie class stays
    idx = min(k, coeffs.size - 1)
    threshold = np.partition(mags, idx)[idx]
    out[np.abs(out) < threshold] = 0.0
    return out


def prune_mask_lastaxis(coeffs: np.ndarray, eta: float) -> np.ndarray:
    """Survivor mask (1.0 keep / 0.0 prune) per trailing-axis population.

    Vectorized form used by the dropout operators: each slice along the
    last axis is pruned independently, matching per-channel semantics
    once callers flatten a channel into that axis.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = coeffs.shape[-1]
    k = prune_count(eta, n)
    if k == 0:
        return np.ones_like(coeffs)
    idx = min(k, n - 1)
    mags = np.abs(coeffs)
    thresholds = np.partition(mags, idx, axis=-1)[..., idx : idx + 1]
    return (mags >= thresholds).astype(np.float64)
