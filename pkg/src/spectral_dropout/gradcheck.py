"""Backward passes and the machinery that verifies them.

Given a sampled mask, every dropout forward here is the linear map
``synthesis . diag(band or coefficient scales) . analysis`` where the
synthesis step is the exact transpose of the analysis step (wavelet
case) or its orthonormal inverse (DCT case).  The transpose of such a
sandwich is the sandwich itself, so the input gradient is the recorded
map applied to the output gradient; the backward functions below make
that explicit and the adjoint/finite-difference harnesses exist to
catch any drift from this identity if the kernels ever change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dropout import MaskRecord, SpectralDropoutConfig, replay
from .rng import SeededRng
from .tensor import check_tensor4


@dataclass
class LinearMapHandle:
    """A forward/backward pair claiming backward = forward transpose."""

    forward: Callable[[np.ndarray], np.ndarray]
    backward: Callable[[np.ndarray], np.ndarray]
    in_dim: int
    out_dim: int


def swd_backward(
    grad_out: np.ndarray, record: MaskRecord | None, cfg: SpectralDropoutConfig
) -> np.ndarray:
    """Input gradient of a wavelet-dropout forward with pinned mask.

    record=None means the forward ran in eval mode, whose backward is
    the identity.
    """
    if not cfg.is_wavelet:
        raise ValueError(f"config variant '{cfg.variant}' is not a wavelet variant")
    if record is None:
        return check_tensor4(grad_out)
    # self-adjoint map: transpose(synth . diag . anal) = synth . diag . anal
    return replay(grad_out, record, cfg)


def sfd_backward(
    grad_out: np.ndarray, record: MaskRecord | None, cfg: SpectralDropoutConfig
) -> np.ndarray:
    """Input gradient of a Fourier-dropout forward with pinned mask."""
    if cfg.is_wavelet:
        raise ValueError(f"config variant '{cfg.variant}' is not a Fourier variant")
    if record is None:
        return check_tensor4(grad_out)
    return replay(grad_out, record, cfg)


def adjoint_test(h: LinearMapHandle, rng: SeededRng, trials: int = 100) -> float:
    """Max relative defect of <Fx, y> = <x, By> over random probe pairs."""
    if h.in_dim < 1 or h.out_dim < 1:
        raise ValueError("map dimensions must be >= 1")
    worst = 0.0
    for _ in range(trials):
        x = rng.normal(h.in_dim)
        y = rng.normal(h.out_dim)
        fx = h.forward(x)
        by = h.backward(y)
        lhs = float(np.dot(np.ravel(fx), y))
        rhs = float(np.dot(x, np.ravel(by)))
        denom = float(np.linalg.norm(fx) * np.linalg.norm(y)) + 1e-300
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one element at a time."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    base = x.copy()
    probe = base.ravel()
    for i in range(probe.size):
        orig = probe[i]
        probe[i] = orig + eps
        f_plus = f(base)
        probe[i] = orig - eps
        f_minus = f(base)
        probe[i] = orig
        flat[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """max|a-b| / max(max|a|, max|b|, tiny); scale-free comparison."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale
