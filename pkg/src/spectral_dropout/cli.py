"""Command-line interface.

Subcommands: decompose, reconstruct, dropout, verify, bench, train,
sweep.  Every command is deterministic given its flags and seeds.
Exit codes: 0 success, 1 verification/assertion failure, 2 usage or
config errors (argparse itself exits 2 on bad flags).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as benchmod
from . import dropout as dp
from . import training as tr
from . import verify as verifymod
from . import wavelet as wv
from .data import make_dataset
from .pgm import read_pgm, render_band, write_pgm
from .rng import SeededRng
from .tensor import load_tensor, save_tensor

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


# ---------------------------------------------------------------- decompose


def _energy(a: np.ndarray) -> float:
    return float(np.sum(np.asarray(a, dtype=np.float64) ** 2))


def cmd_decompose(args) -> int:
    img = read_pgm(args.input)
    filt = wv.get_filter(args.wavelet)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pixels = img.as_float
    manifest = {
        "mode": args.mode,
        "wavelet": args.wavelet,
        "width": img.width,
        "height": img.height,
        "maxval": img.maxval,
        "normalization": "signed bands: zero at mid-gray; approximation: min-max",
        "bands": {},
    }
    if args.mode == "2d":
        bands = wv.dwt2d(pixels, filt)
        named = [("ll", bands.ll, False), ("lh", bands.lh, True),
                 ("hl", bands.hl, True), ("hh", bands.hh, True)]
    else:
        pyr = wv.dwt1d(pixels.reshape(1, 1, -1), filt, levels=3)
        manifest["lens"] = pyr.lens
        named = [("ap", pyr.ap[0, 0], False)] + [
            (f"l{j + 1}", pyr.details[j][0, 0], True) for j in range(3)
        ]
    noise_floor = img.maxval * 1e-9
    for name, band, signed in named:
        band2d = band if band.ndim == 2 else _as_strip(band, img.width)
        write_pgm(out_dir / f"{name}.pgm", render_band(band2d, signed,
                                                       floor=noise_floor))
        save_tensor(out_dir / f"{name}.bin", band.reshape(1, 1, *_shape2(band)))
        manifest["bands"][name] = {
            "shape": list(_shape2(band)),
            "energy": _energy(band),
        }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(named)} bands + manifest to {out_dir}")
    return EXIT_OK


def _shape2(band: np.ndarray) -> tuple[int, int]:
    return band.shape if band.ndim == 2 else (1, band.shape[-1])


def _as_strip(band: np.ndarray, width: int) -> np.ndarray:
    """Render a 1D band as a width-limited strip, zero-padded at the tail."""
    n = band.shape[-1]
    rows = max(1, (n + width - 1) // width)
    padded = np.zeros(rows * width)
    padded[:n] = band
    return padded.reshape(rows, width)


def cmd_reconstruct(args) -> int:
    in_dir = Path(args.indir)
    manifest_path = in_dir / "manifest.json"
    if not manifest_path.exists():
        print(f"error: {manifest_path} not found", file=sys.stderr)
        return EXIT_USAGE
    manifest = json.loads(manifest_path.read_text())
    filt = wv.get_filter(manifest["wavelet"])
    h, w, maxval = manifest["height"], manifest["width"], manifest["maxval"]
    if manifest["mode"] == "2d":
        bands = wv.Bands2D(
            ll=load_tensor(in_dir / "ll.bin")[0, 0],
            lh=load_tensor(in_dir / "lh.bin")[0, 0],
            hl=load_tensor(in_dir / "hl.bin")[0, 0],
            hh=load_tensor(in_dir / "hh.bin")[0, 0],
            orig=(h, w),
        )
        rec = wv.idwt2d(bands, filt)
    else:
        pyr = wv.Pyramid1D(
            ap=load_tensor(in_dir / "ap.bin")[0, 0],
            details=[load_tensor(in_dir / f"l{j + 1}.bin")[0, 0] for j in range(3)],
            lens=list(manifest["lens"]),
        )
        rec = wv.idwt1d(pyr, filt).reshape(h, w)
    write_pgm(args.out, np.clip(np.rint(rec), 0, maxval), maxval=maxval)
    print(f"reconstructed {args.out} from {in_dir}")
    return EXIT_OK


# ------------------------------------------------------------------ dropout


def cmd_dropout(args) -> int:
    img = read_pgm(args.input)
    try:
        cfg = dp.SpectralDropoutConfig(
            variant=args.variant, p=args.p, eta=args.eta, wavelet=args.wavelet
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    x = img.as_float.reshape(1, 1, img.height, img.width)
    rng = SeededRng(args.seed)
    forced = None
    if args.force_bits:
        forced = np.array([int(b) for b in args.force_bits.split(",")], dtype=np.uint8)
    out, record = dp.forward(x, cfg, rng, mode="train", forced_bits=forced)
    write_pgm(out_dir / "output.pgm", np.clip(np.rint(out[0, 0]), 0, img.maxval),
              maxval=img.maxval)
    (out_dir / "mask.bin").write_bytes(record.to_bytes())
    summary = {
        "variant": cfg.variant,
        "p": cfg.p,
        "eta": cfg.eta,
        "seed": args.seed,
        "energy_before": _energy(x),
        "energy_after": _energy(out),
    }
    if cfg.is_wavelet:
        names = dp.DETAIL_BANDS[cfg.variant]
        summary["bands_dropped"] = [
            name
            for j, name in enumerate(names)
            if cfg.band_is_masked(name) and record.bits[j] == 0
        ]
    else:
        summary["coefficients_pruned"] = int(record.prune_bits.size)
        summary["coefficients_dropped"] = int(
            np.sum((record.bits == 0) & (record.prune_bits == 1))
        )
        summary["coefficients_pruned_away"] = int(np.sum(record.prune_bits == 0))
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote output.pgm, mask.bin, summary.json to {out_dir}")
    return EXIT_OK


# ------------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    names = list(verifymod.SUITES) if args.suite == "all" else [args.suite]
    results = verifymod.run_suites(names, quick=args.quick)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] suite {r.suite}")
        for c in r.checks:
            print(f"  {'ok  ' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    payload = verifymod.results_to_json(results)
    if args.json:
        Path(args.json).write_text(payload + "\n")
    ok = all(r.passed for r in results)
    print(f"verify: {'all checks passed' if ok else 'FAILURES detected'}")
    return EXIT_OK if ok else EXIT_FAIL


# -------------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    if args.ttm:
        data = make_dataset(
            train_count=128, test_count=256, seed=args.seed, noise=0.6
        )
        try:
            cfg = dp.SpectralDropoutConfig(
                variant=args.variant, p=args.p, eta=args.eta
            )
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        seeds = tuple(int(s) for s in args.seeds.split(","))
        report = benchmod.ttm(
            tr.ToyNetSpec(), data, cfg, epochs=args.epochs, seeds=seeds
        )
        print(
            f"ttm({args.variant}, p={args.p}): {report['ttm']:.3f} "
            f"(baseline {report['baseline_epoch_seconds'] * 1e3:.1f} ms/epoch, "
            f"dropout {report['dropout_epoch_seconds'] * 1e3:.1f} ms/epoch)"
        )
        if args.out:
            Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
        return EXIT_OK
    if not args.op:
        print("error: --op or --ttm required", file=sys.stderr)
        return EXIT_USAGE
    sizes = [int(s) for s in args.sizes.split(",")]
    report = benchmod.benchmark_op(args.op, sizes, repeats=args.repeats)
    for n, t in zip(report.sizes, report.medians):
        print(f"{args.op} n={n:5d}: {t * 1e3:10.3f} ms")
    lo, hi = report.slope_ci
    print(f"log-log slope {report.slope:.3f} (95% CI {lo:.3f}..{hi:.3f})")
    if args.out:
        Path(args.out).write_text(report.to_csv())
    if args.gnuplot:
        Path(args.gnuplot).write_text(report.to_gnuplot())
    return EXIT_OK


# -------------------------------------------------------------- train/sweep


_DATASET_DEFAULTS = {
    "train_count": 256, "test_count": 1024, "seed": 0, "size": 16, "noise": 0.6,
}
_NET_DEFAULTS = {
    "channels": [16, 32], "insertion_point": 1, "placement": "after_conv",
}
_OPT_DEFAULTS = {"lr": 0.08, "momentum": 0.9, "batch_size": 32}


def _expect(cond: bool, path: str, message: str, errors: list[str]) -> None:
    if not cond:
        errors.append(f"{path}: {message}")


def _check_section(cfg, key, defaults, errors) -> dict:
    section = cfg.get(key, {})
    if section is None:
        section = {}
    if not isinstance(section, dict):
        errors.append(f"{key}: must be an object")
        return dict(defaults)
    unknown = set(section) - set(defaults)
    for u in sorted(unknown):
        errors.append(f"{key}.{u}: unknown field")
    merged = {**defaults, **{k: v for k, v in section.items() if k in defaults}}
    return merged


def validate_train_config(cfg: dict) -> tuple[dict, list[str]]:
    """Normalize a train/sweep JSON config; returns (resolved, errors)."""
    errors: list[str] = []
    if not isinstance(cfg, dict):
        return {}, ["<root>: config must be a JSON object"]
    known_top = {"dataset", "net", "dropout", "optimizer", "epochs", "seed", "sweep"}
    for u in sorted(set(cfg) - known_top):
        errors.append(f"{u}: unknown field")

    ds = _check_section(cfg, "dataset", _DATASET_DEFAULTS, errors)
    for k in ("train_count", "test_count", "seed", "size"):
        _expect(isinstance(ds[k], int) and ds[k] >= 0, f"dataset.{k}",
                "must be a non-negative integer", errors)
    _expect(isinstance(ds["noise"], (int, float)) and 0 <= ds["noise"] <= 2,
            "dataset.noise", "must be a number in [0, 2]", errors)
    if isinstance(ds["train_count"], int) and ds["train_count"] % 4:
        errors.append("dataset.train_count: must be divisible by 4 (class balance)")
    if isinstance(ds["test_count"], int) and ds["test_count"] % 4:
        errors.append("dataset.test_count: must be divisible by 4 (class balance)")

    net = _check_section(cfg, "net", _NET_DEFAULTS, errors)
    _expect(
        isinstance(net["channels"], list)
        and net["channels"]
        and all(isinstance(c, int) and c > 0 for c in net["channels"]),
        "net.channels", "must be a non-empty list of positive integers", errors,
    )
    _expect(net["placement"] in ("before_conv", "after_conv"), "net.placement",
            "must be 'before_conv' or 'after_conv'", errors)
    if isinstance(net["channels"], list) and isinstance(net["insertion_point"], int):
        _expect(0 <= net["insertion_point"] < max(len(net["channels"]), 1),
                "net.insertion_point",
                f"must be in [0, {len(net['channels']) - 1}]", errors)

    drop = cfg.get("dropout")
    dropout_cfg = None
    if drop is not None:
        if not isinstance(drop, dict):
            errors.append("dropout: must be an object or null")
        else:
            known = {"variant", "p", "eta", "wavelet", "band_select",
                     "drop_approximation"}
            for u in sorted(set(drop) - known):
                errors.append(f"dropout.{u}: unknown field")
            try:
                band_select = drop.get("band_select")
                dropout_cfg = dp.SpectralDropoutConfig(
                    variant=drop.get("variant", "swd1d"),
                    p=drop.get("p", 0.1),
                    eta=drop.get("eta", 0.0),
                    wavelet=drop.get("wavelet", "db3"),
                    band_select=tuple(band_select) if band_select is not None else None,
                    drop_approximation=bool(drop.get("drop_approximation", False)),
                )
            except (ValueError, TypeError) as exc:
                errors.append(f"dropout: {exc}")

    opt = _check_section(cfg, "optimizer", _OPT_DEFAULTS, errors)
    _expect(isinstance(opt["lr"], (int, float)) and opt["lr"] > 0, "optimizer.lr",
            "must be a positive number", errors)
    _expect(isinstance(opt["momentum"], (int, float)) and 0 <= opt["momentum"] < 1,
            "optimizer.momentum", "must be in [0, 1)", errors)
    _expect(isinstance(opt["batch_size"], int) and opt["batch_size"] > 0,
            "optimizer.batch_size", "must be a positive integer", errors)

    epochs = cfg.get("epochs", 60)
    _expect(isinstance(epochs, int) and epochs >= 0, "epochs",
            "must be a non-negative integer", errors)
    seed = cfg.get("seed", 0)
    _expect(isinstance(seed, int), "seed", "must be an integer", errors)

    sweep = cfg.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            errors.append("sweep: must be an object")
        else:
            kind = sweep.get("kind")
            _expect(kind in ("hparams", "positions", "bands"), "sweep.kind",
                    "must be one of 'hparams', 'positions', 'bands'", errors)

    resolved = {
        "dataset": ds,
        "net": net,
        "dropout": dropout_cfg,
        "optimizer": opt,
        "epochs": epochs,
        "seed": seed,
        "sweep": sweep,
    }
    return resolved, errors


def _load_config(path: str) -> tuple[dict | None, list[str]]:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        return None, [f"<file>: {path} not found"]
    except json.JSONDecodeError as exc:
        return None, [f"<file>: invalid JSON ({exc})"]
    resolved, errors = validate_train_config(raw)
    return resolved, errors


def _build_from_config(resolved: dict):
    ds_cfg = resolved["dataset"]
    data = make_dataset(
        train_count=ds_cfg["train_count"],
        test_count=ds_cfg["test_count"],
        seed=ds_cfg["seed"],
        size=ds_cfg["size"],
        noise=ds_cfg["noise"],
    )
    net_cfg = resolved["net"]
    spec = tr.ToyNetSpec(
        channels=tuple(net_cfg["channels"]),
        input_size=ds_cfg["size"],
        insertion_point=net_cfg["insertion_point"],
        placement=net_cfg["placement"],
    )
    return data, spec


def cmd_train(args) -> int:
    resolved, errors = _load_config(args.config)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    data, spec = _build_from_config(resolved)
    opt = resolved["optimizer"]
    metrics = tr.train(
        spec,
        data,
        dropout=resolved["dropout"],
        lr=opt["lr"],
        momentum=opt["momentum"],
        batch_size=opt["batch_size"],
        epochs=resolved["epochs"],
        seed=resolved["seed"],
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.csv").write_text(metrics.to_csv())
    summary = {
        "failed": metrics.failed,
        "epochs_run": len(metrics.epochs),
        "final_train_acc": metrics.final_train_acc,
        "final_test_acc": metrics.final_test_acc,
        "final_gap": metrics.final_gap,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    state = "FAILED (diverged)" if metrics.failed else "ok"
    print(
        f"train {state}: {len(metrics.epochs)} epochs, "
        f"train acc {metrics.final_train_acc:.3f}, "
        f"test acc {metrics.final_test_acc:.3f}, gap {metrics.final_gap:.3f}"
    )
    print(f"metrics written to {out_dir / 'metrics.csv'}")
    return EXIT_FAIL if metrics.failed else EXIT_OK


def cmd_sweep(args) -> int:
    resolved, errors = _load_config(args.config)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    sweep = resolved.get("sweep")
    if not sweep:
        print("config error: sweep: section required for the sweep command",
              file=sys.stderr)
        return EXIT_USAGE
    data, spec = _build_from_config(resolved)
    opt = resolved["optimizer"]
    train_kw = dict(
        lr=opt["lr"], momentum=opt["momentum"], batch_size=opt["batch_size"],
        epochs=resolved["epochs"],
    )
    seeds = sweep.get("seeds", [0, 1, 2, 3, 4])
    kind = sweep["kind"]
    best = None
    if kind == "hparams":
        rows, best = tr.sweep_hparams(
            spec, data,
            variant=sweep.get("variant", "swd1d"),
            p_grid=tuple(sweep.get("p_grid", (0.1, 0.2, 0.3, 0.4, 0.5))),
            eta_grid=tuple(sweep.get("eta_grid", (0.0, 0.1, 0.2, 0.3, 0.4))),
            seeds=seeds, **train_kw,
        )
    elif kind == "positions":
        if resolved["dropout"] is None:
            print("config error: dropout: required for a positions sweep",
                  file=sys.stderr)
            return EXIT_USAGE
        rows = tr.sweep_positions(
            spec, data, resolved["dropout"],
            positions=sweep.get("positions", list(range(len(spec.channels)))),
            placements=sweep.get("placements", ["before_conv", "after_conv"]),
            seeds=seeds, **train_kw,
        )
    else:
        if resolved["dropout"] is None:
            print("config error: dropout: required for a bands sweep",
                  file=sys.stderr)
            return EXIT_USAGE
        subsets = [tuple(s) for s in sweep.get(
            "subsets", [["L3"], ["L2"], ["L1"], ["L1", "L2", "L3"], ["AP"]]
        )]
        rows = tr.sweep_bands(spec, data, resolved["dropout"], subsets, seeds=seeds,
                              **train_kw)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text(tr.rows_to_csv(rows))
    _print_sweep_table(rows)
    if best is not None:
        (out_dir / "best.json").write_text(json.dumps(best, indent=2) + "\n")
        print(f"best cell: {best}")
    print(f"rows written to {out_dir / 'sweep.csv'}")
    return EXIT_OK


def _print_sweep_table(rows: list[dict]) -> None:
    if not rows:
        print("(no rows)")
        return
    group_keys = [k for k in rows[0] if k not in
                  ("seed", "train_acc", "test_acc", "gap", "failed")]
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in group_keys), []).append(row)
    header = " | ".join(group_keys + ["mean_test_acc", "mean_gap", "seeds"])
    print(header)
    print("-" * len(header))
    for key, grp in groups.items():
        accs = [r["test_acc"] for r in grp]
        gaps = [r["gap"] for r in grp]
        label = " | ".join(str(k) for k in key)
        print(f"{label} | {np.mean(accs):.4f} | {np.mean(gaps):.4f} | {len(grp)}")


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-dropout",
        description="Wavelet/Fourier spectral dropout toolkit: transforms, "
        "dropout operators, verification, benchmarks, desk-scale training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="wavelet-decompose a PGM image")
    p.add_argument("input")
    p.add_argument("--wavelet", choices=("db3", "haar"), default="db3")
    p.add_argument("--mode", choices=("1d", "2d"), default="2d")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="invert a decompose output directory")
    p.add_argument("indir")
    p.add_argument("--out", required=True, help="output PGM path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("dropout", help="apply seeded spectral dropout to a PGM")
    p.add_argument("input")
    p.add_argument("--variant", choices=dp.VARIANTS, required=True)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--wavelet", choices=("db3", "haar"), default="db3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force-bits", default=None,
                   help="comma-separated mask bits (test/diagnostic hook)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_dropout)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", choices=tuple(verifymod.SUITES) + ("all",),
                   default="all")
    p.add_argument("--quick", action="store_true",
                   help="reduced ranges for a fast smoke check")
    p.add_argument("--json", default=None, help="also write a JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time kernels or training overhead")
    p.add_argument("--op", choices=benchmod.BENCH_OPS, default=None)
    p.add_argument("--sizes", default="64,128,256,512,1024")
    p.add_argument("--repeats", type=int, default=9)
    p.add_argument("--out", default=None, help="CSV (scaling) or JSON (ttm) path")
    p.add_argument("--gnuplot", default=None, help="two-column data file path")
    p.add_argument("--ttm", action="store_true",
                   help="training-time multiplier instead of kernel scaling")
    p.add_argument("--variant", choices=dp.VARIANTS, default="swd1d")
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seeds", default="0")
    p.add_argument("--seed", type=int, default=0, help="dataset seed for --ttm")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", help="train the toy net from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run a config-driven ablation sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
