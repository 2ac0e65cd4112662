"""Minimal CNN layers with exact backward passes.

Just enough to host a spectral dropout site in a trainable network:
3x3 same-padding convolution (im2col), ReLU, 2x2 average pooling,
a linear head, and softmax cross-entropy.  Everything is float64 and
deterministic given the init RNG; gradcheck_layers() runs the
finite-difference battery that train() gates on.
"""

from __future__ import annotations

import numpy as np

from . import dropout as dp
from . import gradcheck as gc
from .rng import SeededRng


class Conv2d:
    """3x3 convolution, stride 1, zero same-padding."""

    def __init__(self, cin: int, cout: int, rng: SeededRng, ksize: int = 3):
        self.cin, self.cout, self.k = cin, cout, ksize
        fan_in = cin * ksize * ksize
        scale = np.sqrt(2.0 / fan_in)
        self.w = (rng.normal(cout * fan_in) * scale).reshape(cout, fan_in)
        self.b = np.zeros(cout)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cols = None
        self._xshape = None

    def params(self):
        return [(self.w, self.dw), (self.b, self.db)]

    def _im2col(self, xp: np.ndarray, hout: int, wout: int) -> np.ndarray:
        b, c = xp.shape[0], xp.shape[1]
        cols = np.empty((b, c, self.k, self.k, hout, wout))
        for i in range(self.k):
            for j in range(self.k):
                cols[:, :, i, j] = xp[:, :, i : i + hout, j : j + wout]
        return cols.reshape(b, c * self.k * self.k, hout * wout)

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        b, c, h, w = x.shape
        if c != self.cin:
            raise ValueError(f"expected {self.cin} input channels, got {c}")
        pad = self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        cols = self._im2col(xp, h, w)
        if train:
            self._cols = cols
            self._xshape = x.shape
        flat = cols.transpose(1, 0, 2).reshape(cols.shape[1], -1)
        out = (self.w @ flat).reshape(self.cout, b, h * w).transpose(1, 0, 2)
        out = out + self.b[None, :, None]
        return out.reshape(b, self.cout, h, w)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        b, _, h, w = grad.shape
        g = grad.reshape(b, self.cout, h * w)
        self.dw += np.tensordot(g, self._cols, axes=([0, 2], [0, 2]))
        self.db += g.sum(axis=(0, 2))
        gflat = g.transpose(1, 0, 2).reshape(self.cout, -1)
        dcols = (self.w.T @ gflat).reshape(-1, b, h * w).transpose(1, 0, 2)
        dcols = dcols.reshape(b, self.cin, self.k, self.k, h, w)
        pad = self.k // 2
        dxp = np.zeros((b, self.cin, h + 2 * pad, w + 2 * pad))
        for i in range(self.k):
            for j in range(self.k):
                dxp[:, :, i : i + h, j : j + w] += dcols[:, :, i, j]
        return dxp[:, :, pad : pad + h, pad : pad + w]


class ReLU:
    def __init__(self):
        self._mask = None

    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        if train:
            self._mask = x > 0
        return np.maximum(x, 0.0)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._mask


class AvgPool2:
    """2x2 average pooling, stride 2; spatial dims must be even."""

    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ValueError(f"pooling needs even spatial dims, got ({h}, {w})")
        return 0.25 * (
            x[:, :, 0::2, 0::2] + x[:, :, 0::2, 1::2]
            + x[:, :, 1::2, 0::2] + x[:, :, 1::2, 1::2]
        )

    def backward(self, grad: np.ndarray) -> np.ndarray:
        b, c, h, w = grad.shape
        out = np.empty((b, c, 2 * h, 2 * w))
        g = 0.25 * grad
        out[:, :, 0::2, 0::2] = g
        out[:, :, 0::2, 1::2] = g
        out[:, :, 1::2, 0::2] = g
        out[:, :, 1::2, 1::2] = g
        return out


class Flatten:
    def __init__(self):
        self._shape = None

    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad.reshape(self._shape)


class Linear:
    def __init__(self, din: int, dout: int, rng: SeededRng):
        scale = np.sqrt(2.0 / din)
        self.w = (rng.normal(dout * din) * scale).reshape(dout, din)
        self.b = np.zeros(dout)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None

    def params(self):
        return [(self.w, self.dw), (self.b, self.db)]

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        if x.shape[1] != self.w.shape[1]:
            raise ValueError(
                f"linear expects {self.w.shape[1]} features, got {x.shape[1]}"
            )
        if train:
            self._x = x
        return x @ self.w.T + self.b

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.dw += grad.T @ self._x
        self.db += grad.sum(axis=0)
        return grad @ self.w


class SpectralDropoutLayer:
    """Hosts one dropout operator inside a network.

    Train mode samples a fresh mask from the owned RNG stream and keeps
    the record so backward can re-apply the pinned linear map; eval
    mode passes activations through untouched.
    """

    def __init__(self, cfg: dp.SpectralDropoutConfig, rng: SeededRng):
        self.cfg = cfg
        self.rng = rng
        self._record = None

    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        if not train:
            return x
        out, self._record = dp.forward(x, self.cfg, self.rng, mode="train")
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self.cfg.is_wavelet:
            return gc.swd_backward(grad, self._record, self.cfg)
        return gc.sfd_backward(grad, self._record, self.cfg)


def softmax_xent(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and gradient w.r.t. logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    n = logits.shape[0]
    loss = -float(logp[np.arange(n), labels].mean())
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


_LAYER_CHECK_RESULT: float | None = None


def gradcheck_layers(eps: float = 1e-6) -> float:
    """Finite-difference check of every layer type; returns worst rel error.

    Uses a tiny randomly-wired stack so the battery stays fast enough to
    gate each training entry point.
    """
    rng = SeededRng(314159)
    layers = [
        Conv2d(2, 3, rng.child(1)),
        ReLU(),
        AvgPool2(),
        Flatten(),
        Linear(3 * 2 * 2, 4, rng.child(2)),
    ]
    x0 = rng.child(3).normal(2 * 2 * 4 * 4).reshape(2, 2, 4, 4)
    labels = np.array([1, 3])

    def loss_of(x):
        h = x
        for layer in layers:
            h = layer.forward(h, train=True)
        val, _ = softmax_xent(h, labels)
        return val

    # input gradient through the whole stack
    h = x0
    for layer in layers:
        h = layer.forward(h, train=True)
    _, g = softmax_xent(h, labels)
    for layer in reversed(layers):
        g = layer.backward(g)
    fd = gc.finite_diff_grad(loss_of, x0, eps)
    worst = gc.relative_error(g, fd)

    # parameter gradients
    for layer in layers:
        for w, dw in layer.params():
            dw[...] = 0.0
    h = x0
    for layer in layers:
        h = layer.forward(h, train=True)
    _, g = softmax_xent(h, labels)
    for layer in reversed(layers):
        g = layer.backward(g)
    for layer in layers:
        for w, dw in layer.params():
            def loss_at(vals, _w=w):
                saved = _w.copy()
                _w[...] = vals
                hh = x0
                for lay in layers:
                    hh = lay.forward(hh, train=True)
                val, _ = softmax_xent(hh, labels)
                _w[...] = saved
                return val

            fd_w = gc.finite_diff_grad(loss_at, w, eps)
            worst = max(worst, gc.relative_error(dw, fd_w))
    return worst


def ensure_layers_checked(tol: float = 1e-5) -> None:
    """Run gradcheck_layers once per process; raise if any layer fails."""
    global _LAYER_CHECK_RESULT
    if _LAYER_CHECK_RESULT is None:
        _LAYER_CHECK_RESULT = gradcheck_layers()
    if _LAYER_CHECK_RESULT > tol:
        raise RuntimeError(
            f"layer gradient self-test failed: {_LAYER_CHECK_RESULT:.3e} > {tol}"
        )
