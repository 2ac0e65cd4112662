"""Acceptance gate: every shipping criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line (run with ``pytest -s`` to see
them live).  Criteria 9 and 10 train real networks and dominate the
runtime (~10 minutes together); everything else finishes in seconds.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from spectral_dropout import bench
from spectral_dropout import dct as dctmod
from spectral_dropout import dropout as dp
from spectral_dropout import gradcheck as gc
from spectral_dropout import nn, opcount
from spectral_dropout import training as tr
from spectral_dropout import wavelet as wv
from spectral_dropout.cli import main as cli_main
from spectral_dropout.data import make_dataset
from spectral_dropout.pgm import read_pgm
from spectral_dropout.rng import SeededRng

from helpers import prune_oracle

DATA = Path(__file__).parent / "data"
TEST_IMAGE = DATA / "test32.pgm"


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({name}): {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def test_criterion_01_perfect_reconstruction():
    tic = time.time()
    rng = np.random.default_rng(1)
    filters = (wv.haar_filter(), wv.db3_filter())
    worst1d = 0.0
    for n in range(1, 257):
        x = rng.standard_normal(n)
        for f in filters:
            for levels in (1, 2, 3):
                rec = wv.idwt1d(wv.dwt1d(x, f, levels), f)
                worst1d = max(worst1d, float(np.max(np.abs(rec - x))))
    worst2d = 0.0
    for h in range(1, 33):
        for w in range(1, 33):
            m = rng.standard_normal((h, w))
            for f in filters:
                rec = wv.idwt2d(wv.dwt2d(m, f), f)
                worst2d = max(worst2d, float(np.max(np.abs(rec - m))))
    elapsed = time.time() - tic
    ok = worst1d <= 1e-10 and worst2d <= 1e-10 and elapsed < 30.0
    _report(
        1, "perfect reconstruction", ok,
        f"1D max {worst1d:.2e}, 2D max {worst2d:.2e}, {elapsed:.1f}s (< 30s)",
    )


def test_criterion_02_filter_correctness():
    worst = 0.0
    for f in (wv.haar_filter(), wv.db3_filter()):
        worst = max(worst, max(wv.filter_errors(f).values()))
    worst = max(worst, max(wv.vanishing_moment_errors(wv.db3_filter(), 3)))
    g = wv.db3_filter().g.copy()
    g[3] += 1e-3
    mutant_err = max(
        wv.filter_errors(wv.WaveletFilter("m", g, wv.mirror_highpass(g))).values()
    )
    ok = worst <= 1e-10 and mutant_err > 1e-10
    _report(
        2, "filter correctness", ok,
        f"invariants {worst:.2e} (<= 1e-10), 1e-3 mutant detected at {mutant_err:.2e}",
    )


def test_criterion_03_dct_correctness():
    rng = np.random.default_rng(3)
    worst_rt = 0.0
    for n in range(1, 129):
        x = rng.standard_normal(n)
        worst_rt = max(
            worst_rt, float(np.max(np.abs(dctmod.idct_1d(dctmod.dct2_1d(x)) - x)))
        )
    worst_pv = 0.0
    for n in (1, 7, 32, 100, 128):
        x = rng.standard_normal(n)
        worst_pv = max(
            worst_pv,
            abs(float(np.linalg.norm(dctmod.dct2_1d(x)) - np.linalg.norm(x))),
        )
    worst_fd = 0.0
    n = 1
    while n <= 1024:
        x = rng.standard_normal(n)
        worst_fd = max(worst_fd, float(np.max(np.abs(
            dctmod.dct2_1d(x, "fast") - dctmod.dct2_1d(x, "direct")
        ))))
        worst_fd = max(worst_fd, float(np.max(np.abs(
            dctmod.idct_1d(x, "fast") - dctmod.idct_1d(x, "direct")
        ))))
        n *= 2
    ok = worst_rt <= 1e-10 and worst_pv <= 1e-10 and worst_fd <= 1e-10
    _report(
        3, "dct correctness", ok,
        f"roundtrip {worst_rt:.2e}, parseval {worst_pv:.2e}, "
        f"fast-vs-direct {worst_fd:.2e} (all <= 1e-10)",
    )


def test_criterion_04_quantile_pruning():
    rng = np.random.default_rng(4)
    mismatches = 0
    for trial in range(1000):
        m = int(rng.integers(1, 50))
        if trial % 2:
            vals = rng.integers(-5, 6, size=m).astype(float)  # heavy ties
        else:
            vals = rng.standard_normal(m)
        eta = float(rng.uniform(0.0, 0.9))
        got = dctmod.prune_quantile(vals, eta)
        want = prune_oracle(vals, eta)
        if not np.array_equal(got == 0.0, want == 0.0):
            mismatches += 1
        if not np.array_equal(dctmod.prune_quantile(vals, 0.0), vals):
            mismatches += 1
    _report(
        4, "quantile pruning", mismatches == 0,
        f"1000 random vectors (with ties) vs sort oracle, {mismatches} mismatches; "
        f"eta=0 is a no-op",
    )


SHAPES = ((1, 1, 8, 8), (2, 3, 16, 16), (1, 4, 7, 9))


def test_criterion_05_operator_identity():
    worst = 0.0
    eval_ok = True
    opcount.reset()
    for variant in dp.VARIANTS:
        cfg0 = dp.SpectralDropoutConfig(variant=variant, p=0.0, eta=0.0)
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.4)
        for shape in SHAPES:
            x = SeededRng(sum(shape)).normal(int(np.prod(shape))).reshape(shape)
            out, _ = dp.forward(x, cfg0, SeededRng(1))
            worst = max(worst, float(np.max(np.abs(out - x))))
            opcount.reset()
            out_eval, rec = dp.forward(x, cfg, SeededRng(1), mode="eval")
            eval_ok = eval_ok and out_eval.tobytes() == x.tobytes()
            eval_ok = eval_ok and rec is None and opcount.value() == 0
    ok = worst <= 1e-10 and eval_ok
    _report(
        5, "operator identity", ok,
        f"p=0 max deviation {worst:.2e} (<= 1e-10); eval mode byte-identical, "
        f"zero transform ops",
    )


def test_criterion_06_unbiasedness():
    x = SeededRng(8675309).normal(1 * 2 * 8 * 8).reshape(1, 2, 8, 8)
    draws = 20000
    worst = 0.0
    for variant in dp.VARIANTS:
        eta = 0.2 if variant.startswith("sfd") else 0.0
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.2, eta=eta)
        if variant.startswith("sfd"):
            ref, _ = dp.forward(
                x, dp.SpectralDropoutConfig(variant=variant, p=0.0, eta=eta),
                SeededRng(0),
            )
        else:
            ref = x
        rng = SeededRng(777)
        acc = np.zeros_like(x)
        acc2 = np.zeros_like(x)
        for _ in range(draws):
            out, _ = dp.forward(x, cfg, rng)
            acc += out
            acc2 += out * out
        mean = acc / draws
        var = np.maximum(acc2 / draws - mean**2, 0.0)
        bound = 4.0 * np.sqrt(var / draws) + 1e-9
        worst = max(worst, float(np.max(np.abs(mean - ref) / bound)))
    _report(
        6, "unbiasedness", worst <= 1.0,
        f"{draws} draws per variant, worst |mean-ref| at {worst:.3f} of the "
        f"4-sigma elementwise bound",
    )


def test_criterion_07_gradients():
    tic = time.time()
    shape = (1, 2, 8, 8)
    x = SeededRng(31).normal(int(np.prod(shape))).reshape(shape)
    worst_adj = 0.0
    worst_fd = 0.0
    for variant in dp.VARIANTS:
        eta = 0.3 if variant.startswith("sfd") else 0.0
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.4, eta=eta)
        _, rec = dp.forward(x, cfg, SeededRng(13))
        bw = gc.swd_backward if cfg.is_wavelet else gc.sfd_backward
        handle = gc.LinearMapHandle(
            forward=lambda v, rec=rec, cfg=cfg: dp.replay(
                v.reshape(shape), rec, cfg
            ).ravel(),
            backward=lambda v, rec=rec, cfg=cfg, bw=bw: bw(
                v.reshape(shape), rec, cfg
            ).ravel(),
            in_dim=x.size,
            out_dim=x.size,
        )
        worst_adj = max(worst_adj, gc.adjoint_test(handle, SeededRng(17), 100))

        def half_sq(v, rec=rec, cfg=cfg):
            out = dp.replay(v, rec, cfg)
            return 0.5 * float(np.sum(out * out))

        analytic = bw(dp.replay(x, rec, cfg), rec, cfg)
        fd = gc.finite_diff_grad(half_sq, x, eps=1e-6)
        worst_fd = max(worst_fd, gc.relative_error(analytic, fd))
    layer_err = nn.gradcheck_layers()
    elapsed = time.time() - tic
    ok = worst_adj <= 1e-10 and worst_fd <= 1e-5 and layer_err <= 1e-5
    ok = ok and elapsed < 120.0
    _report(
        7, "gradients", ok,
        f"adjoint {worst_adj:.2e} (<= 1e-10), operator FD {worst_fd:.2e} and "
        f"layer FD {layer_err:.2e} (<= 1e-5), {elapsed:.1f}s (< 120s)",
    )


def test_criterion_08_mask_semantics():
    x = SeededRng(88).normal(3 * 4 * 8 * 8).reshape(3, 4, 8, 8)
    shared_ok = True
    forced = np.array([0, 1, 0], dtype=np.uint8)
    for variant in ("swd1d", "swd2d"):
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.5)
        out, _ = dp.forward(x, cfg, SeededRng(2), forced_bits=forced)
        for b in range(3):
            for c in range(4):
                solo, _ = dp.forward(
                    x[b : b + 1, c : c + 1], cfg, SeededRng(2), forced_bits=forced
                )
                if not np.allclose(out[b, c], solo[0, 0], atol=1e-12):
                    shared_ok = False
    replay_ok = True
    seed_ok = True
    for variant in dp.VARIANTS:
        eta = 0.25 if variant.startswith("sfd") else 0.0
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.3, eta=eta)
        out, rec = dp.forward(x, cfg, SeededRng(5))
        replay_ok = replay_ok and dp.replay(x, rec, cfg).tobytes() == out.tobytes()
        rec2 = dp.MaskRecord.from_bytes(rec.to_bytes())
        replay_ok = replay_ok and dp.replay(x, rec2, cfg).tobytes() == out.tobytes()
        again, _ = dp.forward(x, cfg, SeededRng(5))
        seed_ok = seed_ok and again.tobytes() == out.tobytes()
    ok = shared_ok and replay_ok and seed_ok
    _report(
        8, "mask semantics", ok,
        f"band mask shared across batch/channels: {shared_ok}; replay "
        f"byte-identical (incl. serialized): {replay_ok}; equal seeds equal "
        f"outputs: {seed_ok}",
    )


@pytest.fixture(scope="module")
def desk_dataset():
    return make_dataset(train_count=256, test_count=1024, seed=0, noise=0.6)


def test_criterion_09_regularization_direction(desk_dataset):
    tic = time.time()
    spec = tr.ToyNetSpec()
    cfg = dp.SpectralDropoutConfig(variant="swd1d", p=0.1)
    gaps_base, gaps_swd = [], []
    for seed in range(5):
        mb = tr.train(spec, desk_dataset, None, epochs=60, seed=seed)
        ms = tr.train(spec, desk_dataset, cfg, epochs=60, seed=seed)
        gaps_base.append(mb.final_gap * 100)
        gaps_swd.append(ms.final_gap * 100)
    elapsed = time.time() - tic
    calibration_ok = all(g >= 10.0 for g in gaps_base)
    wins = sum(1 for gb, gs in zip(gaps_base, gaps_swd) if gs < gb)
    ok = calibration_ok and wins >= 4 and elapsed < 600.0
    _report(
        9, "regularization direction", ok,
        f"baseline gaps {[f'{g:.1f}' for g in gaps_base]} (all >= 10pt: "
        f"{calibration_ok}); 1D-SWD p=0.1 reduced the gap in {wins}/5 seeds "
        f"(need >= 4); {elapsed:.0f}s (< 600s)",
    )


def test_criterion_10_band_ablation_direction(desk_dataset):
    spec = tr.ToyNetSpec()
    base = dp.SpectralDropoutConfig(variant="swd1d", p=0.35)
    l3_cfg = tr.band_subset_config(base, ("L3",))
    ap_cfg = tr.band_subset_config(base, ("AP",))
    wins = 0
    accs = []
    for seed in range(5):
        ml3 = tr.train(spec, desk_dataset, l3_cfg, epochs=60, seed=seed)
        map_ = tr.train(spec, desk_dataset, ap_cfg, epochs=60, seed=seed)
        accs.append((ml3.final_test_acc, map_.final_test_acc))
        if map_.final_test_acc < ml3.final_test_acc:
            wins += 1
    _report(
        10, "band ablation direction", wins >= 4,
        f"AP-drop worse than L3-only in {wins}/5 seeds (need >= 4); "
        f"(l3, ap) test accs: {[(f'{a:.3f}', f'{b:.3f}') for a, b in accs]}",
    )


def test_criterion_11_scaling():
    tic = time.time()
    sizes = [64, 96, 128, 192, 256, 384, 512, 768, 1024]
    dwt_report = bench.benchmark_op("dwt2d", sizes, repeats=11)
    dct_report = bench.benchmark_op("dct2d_direct", sizes, repeats=11)
    elapsed = time.time() - tic
    ok = (
        1.7 <= dwt_report.slope <= 2.3
        and 2.6 <= dct_report.slope <= 3.4
        and elapsed < 300.0
    )
    _report(
        11, "scaling", ok,
        f"2D-DWT slope {dwt_report.slope:.3f} (in [1.7, 2.3]); direct 2D-DCT "
        f"slope {dct_report.slope:.3f} (in [2.6, 3.4]); {elapsed:.0f}s (< 300s)",
    )


def test_criterion_12_cli_golden_files(tmp_path):
    dec = tmp_path / "dec"
    rec = tmp_path / "rec.pgm"
    ok = cli_main(["decompose", str(TEST_IMAGE), "--wavelet", "db3",
                   "--mode", "2d", "--out", str(dec)]) == 0
    ok = ok and cli_main(["reconstruct", str(dec), "--out", str(rec)]) == 0
    a = read_pgm(TEST_IMAGE)
    b = read_pgm(rec)
    gray_diff = int(np.max(np.abs(a.pixels - b.pixels)))
    drop_bytes = []
    for sub in ("d1", "d2"):
        out = tmp_path / sub
        ok = ok and cli_main(
            ["dropout", str(TEST_IMAGE), "--variant", "swd2d", "--p", "0.4",
             "--seed", "7", "--out", str(out)]
        ) == 0
        drop_bytes.append((out / "output.pgm").read_bytes()
                          + (out / "mask.bin").read_bytes())
    identical = drop_bytes[0] == drop_bytes[1]
    ok = ok and gray_diff <= 1 and identical
    _report(
        12, "cli golden files", ok,
        f"decompose+reconstruct max gray diff {gray_diff} (<= 1); repeated "
        f"seeded dropout byte-identical: {identical}",
    )
