"""Timing harness for the transform kernels and training overhead.

Scaling runs time one operation over growing square inputs and fit a
log-log slope (least squares, normal-approximation confidence band).
Medians over repeats absorb scheduler noise; a warm-up call per size
is discarded.  Timed regions are pinned to one BLAS thread when
threadpoolctl is available so matmul-backed kernels scale with flops,
not with the thread pool.

Training overhead is summarized as the classic multiplier: median
epoch seconds with the regularizer over median epoch seconds of the
identically-seeded baseline.
"""

from __future__ import annotations

import io
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dropout as dp
from . import training as tr
from .data import SyntheticDataset
from .dct import dct2_2d
from .rng import SeededRng
from .wavelet import dwt2d, get_filter

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None


@contextmanager
def single_thread():
    if threadpool_limits is None:
        yield
    else:
        with threadpool_limits(limits=1):
            yield


@dataclass
class ScalingReport:
    op: str
    sizes: list[int]
    medians: list[float]
    slope: float
    slope_ci: tuple[float, float]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("op,n,median_seconds,slope,ci_low,ci_high\n")
        for n, t in zip(self.sizes, self.medians):
            buf.write(
                f"{self.op},{n},{t:.9g},{self.slope:.6g},"
                f"{self.slope_ci[0]:.6g},{self.slope_ci[1]:.6g}\n"
            )
        return buf.getvalue()

    def to_gnuplot(self) -> str:
        """Two-column n/seconds data block."""
        return "".join(f"{n} {t:.9g}\n" for n, t in zip(self.sizes, self.medians))


def _fit_loglog(sizes, medians) -> tuple[float, tuple[float, float]]:
    if len(sizes) < 2:
        return float("nan"), (float("nan"), float("nan"))
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(medians, dtype=np.float64))
    xm = x - x.mean()
    sxx = float(np.sum(xm**2))
    slope = float(np.sum(xm * (y - y.mean())) / sxx)
    resid = y - (y.mean() + slope * xm)
    dof = max(len(x) - 2, 1)
    se = float(np.sqrt(np.sum(resid**2) / dof / sxx))
    return slope, (slope - 1.96 * se, slope + 1.96 * se)


def time_op(
    op: str,
    make_call: Callable[[int], Callable[[], object]],
    sizes: list[int],
    repeats: int = 9,
) -> ScalingReport:
    """Median-of-repeats timing of make_call(n)() per size, slope-fitted."""
    if repeats < 5:
        raise ValueError(f"repeats must be >= 5 for a stable median, got {repeats}")
    if sorted(sizes) != list(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("sizes must be strictly increasing")
    medians = []
    with single_thread():
        for n in sizes:
            call = make_call(n)
            call()  # warm-up, discarded
            times = []
            for _ in range(repeats):
                tic = time.perf_counter()
                call()
                times.append(time.perf_counter() - tic)
            medians.append(float(np.median(times)))
    slope, ci = _fit_loglog(sizes, medians)
    return ScalingReport(op=op, sizes=list(sizes), medians=medians, slope=slope, slope_ci=ci)


def _square_input(n: int, seed: int = 0) -> np.ndarray:
    return SeededRng(seed).normal(n * n).reshape(n, n)


def _tensor_input(n: int, seed: int = 0) -> np.ndarray:
    return SeededRng(seed).normal(n * n).reshape(1, 1, n, n)


def op_factory(name: str) -> Callable[[int], Callable[[], object]]:
    """Setup closures for the named benchmark operations."""
    if name == "dwt2d":
        filt = get_filter("db3")

        def make(n):
            m = _square_input(n)
            return lambda: dwt2d(m, filt)

    elif name == "dct2d":

        def make(n):
            m = _square_input(n)
            return lambda: dct2_2d(m, path="fast")

    elif name == "dct2d_direct":

        def make(n):
            m = _square_input(n)
            return lambda: dct2_2d(m, path="direct")

    elif name in dp.VARIANTS:
        cfg = dp.SpectralDropoutConfig(variant=name, p=0.1)

        def make(n, cfg=cfg):
            x = _tensor_input(n)
            rng = SeededRng(1)
            return lambda: dp.forward(x, cfg, rng)

    else:
        raise ValueError(f"unknown benchmark op '{name}'")
    return make


BENCH_OPS = ("dwt2d", "dct2d", "dct2d_direct") + dp.VARIANTS


def benchmark_op(name: str, sizes: list[int], repeats: int = 9) -> ScalingReport:
    return time_op(name, op_factory(name), sizes, repeats)


def ttm(
    spec: tr.ToyNetSpec,
    data: SyntheticDataset,
    cfg: dp.SpectralDropoutConfig | None,
    epochs: int = 5,
    seeds: tuple[int, ...] = (0,),
    **train_kw,
) -> dict:
    """Training-time multiplier of cfg against the no-dropout baseline.

    Both arms share net, data and seeds; only the dropout site differs.
    """
    base_secs: list[float] = []
    drop_secs: list[float] = []
    for seed in seeds:
        mb = tr.train(spec, data, dropout=None, epochs=epochs, seed=seed, **train_kw)
        md = tr.train(spec, data, dropout=cfg, epochs=epochs, seed=seed, **train_kw)
        base_secs.extend(e["epoch_seconds"] for e in mb.epochs)
        drop_secs.extend(e["epoch_seconds"] for e in md.epochs)
    base_med = float(np.median(base_secs))
    drop_med = float(np.median(drop_secs))
    return {
        "baseline_epoch_seconds": base_med,
        "dropout_epoch_seconds": drop_med,
        "ttm": drop_med / base_med,
    }
