"""Independent oracles for the test suite.

Everything here is built straight from definitions (explicit loops,
brute-force matrices, naive transform sums) and deliberately avoids
the library's vectorized kernels, so agreement between the two is a
real check and not a tautology.
"""

import math

import numpy as np


def analysis_matrix(n: int, g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Brute-force one-level analysis matrix, stacked [low; high].

    Row m of the full convolution is c[m] = sum_k f[k] x[m-k] over the
    zero-extended signal; the transform keeps odd m.
    """
    L = len(g)
    m_out = (n + L - 1) // 2
    mat = np.zeros((2 * m_out, n))
    for row in range(m_out):
        m = 2 * row + 1
        for k in range(L):
            j = m - k
            if 0 <= j < n:
                mat[row, j] += g[k]
                mat[m_out + row, j] += h[k]
    return mat


def multilevel_matrices(n: int, g, h, levels: int) -> list[np.ndarray]:
    """Analysis matrix of every level for an initial length-n signal."""
    mats = []
    cur = n
    for _ in range(levels):
        mats.append(analysis_matrix(cur, g, h))
        cur = (cur + len(g) - 1) // 2
    return mats


def lowpass_projection(x: np.ndarray, g, h, levels: int) -> np.ndarray:
    """Reconstruction from the approximation band only, via matrices."""
    mats = multilevel_matrices(len(x), g, h, levels)
    cur = x
    for mat in mats:
        m = mat.shape[0] // 2
        cur = mat[:m] @ cur  # keep the low half
    for mat in reversed(mats):
        m = mat.shape[0] // 2
        stacked = np.concatenate([cur, np.zeros(m)])
        cur = mat.T @ stacked
    return cur


def naive_dft(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unitary DFT by direct summation."""
    x = np.asarray(x, dtype=np.complex128)
    n = len(x)
    sign = 1j if inverse else -1j
    out = np.zeros(n, dtype=np.complex128)
    for k in range(n):
        for t in range(n):
            out[k] += x[t] * np.exp(sign * 2.0 * np.pi * k * t / n)
    return out / math.sqrt(n)


def naive_dct2(x: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II by direct summation."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for t in range(n):
            acc += x[t] * math.cos(math.pi * (2 * t + 1) * k / (2 * n))
        s = math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n)
        out[k] = s * acc
    return out


def prune_oracle(vals: np.ndarray, eta: float) -> np.ndarray:
    """Sort-based nearest-rank pruning, entry by entry."""
    vals = np.asarray(vals, dtype=np.float64)
    m = vals.size
    k = 0 if eta == 0.0 else max(1, math.ceil(eta * m - 1e-9))
    out = vals.copy()
    if k == 0:
        return out
    mags = sorted(abs(float(v)) for v in vals.ravel())
    threshold = mags[min(k, m - 1)]
    flat = out.ravel()
    for i in range(m):
        if abs(flat[i]) < threshold:
            flat[i] = 0.0
    return out


def dwt2d_oracle(m: np.ndarray, g, h):
    """Separable 2D analysis via explicit matrix products.

    Returns (ll, lh, hl, hh) matching the rows-then-columns convention:
    lh is low-pass horizontal / high-pass vertical.
    """
    hdim, wdim = m.shape
    a_w = analysis_matrix(wdim, g, h)
    a_h = analysis_matrix(hdim, g, h)
    mw = a_w.shape[0] // 2
    mh = a_h.shape[0] // 2
    lo_r = m @ a_w[:mw].T
    hi_r = m @ a_w[mw:].T
    ll = a_h[:mh] @ lo_r
    lh = a_h[mh:] @ lo_r
    hl = a_h[:mh] @ hi_r
    hh = a_h[mh:] @ hi_r
    return ll, lh, hl, hh


def idwt2d_oracle(ll, lh, hl, hh, g, h, hdim: int, wdim: int) -> np.ndarray:
    """Transpose-based 2D synthesis matching dwt2d_oracle."""
    a_w = analysis_matrix(wdim, g, h)
    a_h = analysis_matrix(hdim, g, h)
    lo_r = a_h.T @ np.concatenate([ll, lh], axis=0)
    hi_r = a_h.T @ np.concatenate([hl, hh], axis=0)
    return np.concatenate([lo_r, hi_r], axis=1) @ a_w
