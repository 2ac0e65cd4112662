"""Desk-scale training harness and the ablation sweeps built on it.

A run is fully determined by (net spec, dataset, dropout config,
optimizer settings, seed): initialization, batch order and dropout
masks all derive from independent substreams of the run seed, so a
baseline run and a dropout run see identical data order and weights.
Wall-clock numbers are recorded but excluded from determinism claims.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .data import SyntheticDataset
from .dropout import SpectralDropoutConfig
from .rng import SeededRng

CSV_HEADER = "epoch,train_loss,train_acc,test_loss,test_acc,epoch_seconds"


@dataclass(frozen=True)
class ToyNetSpec:
    """Two-stage convnet with one spectral-dropout site.

    Each stage is conv3x3 -> ReLU -> avgpool2; insertion_point names
    the stage hosting the dropout operator and placement puts it
    immediately before or after that stage's convolution.
    """

    channels: tuple[int, ...] = (16, 32)
    in_channels: int = 1
    input_size: int = 16
    n_classes: int = 4
    insertion_point: int = 1
    placement: str = "after_conv"

    def __post_init__(self):
        if not self.channels:
            raise ValueError("need at least one conv stage")
        if not 0 <= self.insertion_point < len(self.channels):
            raise ValueError(
                f"insertion_point {self.insertion_point} out of range for "
                f"{len(self.channels)} stages"
            )
        if self.placement not in ("before_conv", "after_conv"):
            raise ValueError(
                f"placement must be 'before_conv' or 'after_conv', "
                f"got '{self.placement}'"
            )
        if self.input_size % (2 ** len(self.channels)):
            raise ValueError(
                f"input size {self.input_size} not divisible by "
                f"2^{len(self.channels)} pooling stages"
            )


@dataclass
class RunMetrics:
    """Per-epoch trajectory of one training run."""

    epochs: list[dict] = field(default_factory=list)
    failed: bool = False

    def append(self, **row):
        self.epochs.append(row)

    @property
    def final_train_acc(self) -> float:
        return self.epochs[-1]["train_acc"] if self.epochs else 0.0

    @property
    def final_test_acc(self) -> float:
        return self.epochs[-1]["test_acc"] if self.epochs else 0.0

    @property
    def final_gap(self) -> float:
        return self.final_train_acc - self.final_test_acc

    @property
    def median_epoch_seconds(self) -> float:
        if not self.epochs:
            return 0.0
        return float(np.median([e["epoch_seconds"] for e in self.epochs]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for e in self.epochs:
            buf.write(
                f"{e['epoch']},{e['train_loss']:.10g},{e['train_acc']:.10g},"
                f"{e['test_loss']:.10g},{e['test_acc']:.10g},"
                f"{e['epoch_seconds']:.6g}\n"
            )
        return buf.getvalue()


def build_net(
    spec: ToyNetSpec,
    init_rng: SeededRng,
    dropout: SpectralDropoutConfig | None,
    dropout_rng: SeededRng,
) -> list:
    layers: list = []
    cin = spec.in_channels
    site = (
        nn.SpectralDropoutLayer(dropout, dropout_rng) if dropout is not None else None
    )
    for i, cout in enumerate(spec.channels):
        if site is not None and i == spec.insertion_point and spec.placement == "before_conv":
            layers.append(site)
        layers.append(nn.Conv2d(cin, cout, init_rng.child(10 + i)))
        if site is not None and i == spec.insertion_point and spec.placement == "after_conv":
            layers.append(site)
        layers.append(nn.ReLU())
        layers.append(nn.AvgPool2())
        cin = cout
    layers.append(nn.Flatten())
    final_hw = spec.input_size // (2 ** len(spec.channels))
    layers.append(
        nn.Linear(cin * final_hw * final_hw, spec.n_classes, init_rng.child(99))
    )
    return layers


def _net_forward(layers, x, train):
    h = x
    for layer in layers:
        h = layer.forward(h, train=train)
    return h


def evaluate(layers, images, labels, batch_size: int = 512) -> tuple[float, float]:
    """Eval-mode loss/accuracy over a dataset split (dropout inactive)."""
    total_loss = 0.0
    correct = 0
    n = images.shape[0]
    for start in range(0, n, batch_size):
        xb = images[start : start + batch_size]
        yb = labels[start : start + batch_size]
        logits = _net_forward(layers, xb, train=False)
        loss, _ = nn.softmax_xent(logits, yb)
        total_loss += loss * xb.shape[0]
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total_loss / n, correct / n


def train(
    spec: ToyNetSpec,
    data: SyntheticDataset,
    dropout: SpectralDropoutConfig | None = None,
    lr: float = 0.08,
    momentum: float = 0.9,
    batch_size: int = 32,
    epochs: int = 60,
    seed: int = 0,
) -> RunMetrics:
    """SGD-with-momentum training; returns the per-epoch trajectory.

    A diverged run (non-finite loss) is reported with failed=True
    rather than raised.  The layer gradient battery must pass before
    any training starts.
    """
    nn.ensure_layers_checked()
    root = SeededRng(seed)
    layers = build_net(spec, root.child(1), dropout, root.child(2))
    shuffle_rng = root.child(3)
    velocities = [
        [np.zeros_like(w) for w, _ in layer.params()] for layer in layers
    ]
    metrics = RunMetrics()
    n_train = data.train_images.shape[0]
    for epoch in range(epochs):
        tic = time.perf_counter()
        order = shuffle_rng.permutation(n_train)
        diverged = False
        for start in range(0, n_train, batch_size):
            idx = order[start : start + batch_size]
            xb = data.train_images[idx]
            yb = data.train_labels[idx]
            for layer in layers:
                for _, dw in layer.params():
                    dw[...] = 0.0
            # divergence is reported, not raised, so let overflow through
            with np.errstate(over="ignore", invalid="ignore"):
                logits = _net_forward(layers, xb, train=True)
                loss, grad = nn.softmax_xent(logits, yb)
                if not np.isfinite(loss):
                    diverged = True
                    break
                for layer in reversed(layers):
                    grad = layer.backward(grad)
                for layer, vel in zip(layers, velocities):
                    for (w, dw), v in zip(layer.params(), vel):
                        v *= momentum
                        v += dw
                        w -= lr * v
                if not all(
                    np.all(np.isfinite(w))
                    for layer in layers
                    for w, _ in layer.params()
                ):
                    diverged = True
                    break
        with np.errstate(over="ignore", invalid="ignore"):
            train_loss, train_acc = evaluate(
                layers, data.train_images, data.train_labels
            )
            test_loss, test_acc = evaluate(layers, data.test_images, data.test_labels)
        if diverged or not (np.isfinite(train_loss) and np.isfinite(test_loss)):
            metrics.failed = True
            break
        metrics.append(
            epoch=epoch,
            train_loss=train_loss,
            train_acc=train_acc,
            test_loss=test_loss,
            test_acc=test_acc,
            epoch_seconds=time.perf_counter() - tic,
        )
    return metrics


def sweep_positions(
    spec: ToyNetSpec,
    data: SyntheticDataset,
    cfg: SpectralDropoutConfig,
    positions: list[int],
    placements: list[str] = ("before_conv", "after_conv"),
    seeds: list[int] = (0, 1, 2, 3, 4),
    **train_kw,
) -> list[dict]:
    """Insertion-site study: cross product of position, placement, seed."""
    rows = []
    for pos in positions:
        for placement in placements:
            s = replace(spec, insertion_point=pos, placement=placement)
            for seed in seeds:
                m = train(s, data, dropout=cfg, seed=seed, **train_kw)
                rows.append(
                    {
                        "position": pos,
                        "placement": placement,
                        "seed": seed,
                        "train_acc": m.final_train_acc,
                        "test_acc": m.final_test_acc,
                        "gap": m.final_gap,
                        "failed": m.failed,
                    }
                )
    return rows


def band_subset_config(
    base: SpectralDropoutConfig, subset: tuple[str, ...]
) -> SpectralDropoutConfig:
    """Config targeting one band subset; 'AP'/'LL' selects the diagnostic."""
    approx = {"AP", "LL"}
    details = tuple(b for b in subset if b not in approx)
    return replace(
        base,
        band_select=details,
        drop_approximation=any(b in approx for b in subset),
    )


def sweep_bands(
    spec: ToyNetSpec,
    data: SyntheticDataset,
    base_cfg: SpectralDropoutConfig,
    subsets: list[tuple[str, ...]],
    seeds: list[int] = (0, 1, 2, 3, 4),
    **train_kw,
) -> list[dict]:
    """Band-impact study over detail-band subsets (plus the AP diagnostic)."""
    rows = []
    for subset in subsets:
        cfg = band_subset_config(base_cfg, tuple(subset))
        for seed in seeds:
            m = train(spec, data, dropout=cfg, seed=seed, **train_kw)
            rows.append(
                {
                    "bands": "+".join(subset),
                    "seed": seed,
                    "train_acc": m.final_train_acc,
                    "test_acc": m.final_test_acc,
                    "gap": m.final_gap,
                    "failed": m.failed,
                }
            )
    return rows


def sweep_hparams(
    spec: ToyNetSpec,
    data: SyntheticDataset,
    variant: str,
    p_grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5),
    eta_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4),
    seeds: list[int] = (0, 1, 2, 3, 4),
    wavelet: str = "db3",
    **train_kw,
) -> tuple[list[dict], dict]:
    """Grid search over dropout/pruning rates; returns (rows, best cell).

    Wavelet variants take a single hyperparameter, so their eta axis
    collapses to {0}.  Best cell maximizes mean test accuracy over
    seeds.
    """
    is_wavelet = variant in ("swd1d", "swd2d")
    etas = (0.0,) if is_wavelet else tuple(eta_grid)
    rows = []
    for p in p_grid:
        for eta in etas:
            cfg = SpectralDropoutConfig(
                variant=variant, p=p, eta=eta, wavelet=wavelet
            )
            for seed in seeds:
                m = train(spec, data, dropout=cfg, seed=seed, **train_kw)
                rows.append(
                    {
                        "p": p,
                        "eta": eta,
                        "seed": seed,
                        "train_acc": m.final_train_acc,
                        "test_acc": m.final_test_acc,
                        "gap": m.final_gap,
                        "failed": m.failed,
                    }
                )
    best = best_cell(rows, keys=("p", "eta"))
    return rows, best


def best_cell(rows: list[dict], keys: tuple[str, ...]) -> dict:
    """Group rows by keys and pick the group with highest mean test_acc."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row["test_acc"])
    best_key, best_mean = None, -1.0
    for key, accs in groups.items():
        mean = float(np.mean(accs))
        if mean > best_mean:
            best_key, best_mean = key, mean
    out = dict(zip(keys, best_key))
    out["mean_test_acc"] = best_mean
    return out


def rows_to_csv(rows: list[dict]) -> str:
    """Serialize sweep rows (uniform keys) as CSV."""
    if not rows:
        return ""
    cols = list(rows[0].keys())
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(_csv_cell(row[c]) for c in cols) + "\n")
    return buf.getvalue()


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)
