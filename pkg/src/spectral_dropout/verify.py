"""Self-contained property suites behind the CLI verify command.

Each suite runs a battery of checks with explicit tolerances and
returns structured results; the CLI renders them as text plus JSON and
exits nonzero on any failure.  The checks mirror the library's
contracts: perfect reconstruction, filter invariants (including that a
deliberately perturbed filter is rejected), transform orthonormality,
dropout identity/unbiasedness/determinism, and gradient consistency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import dct as dctmod
from . import dropout as dp
from . import gradcheck as gc
from . import nn, opcount
from . import wavelet as wv
from .rng import SeededRng


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def results_to_json(results: list[SuiteResult]) -> str:
    return json.dumps(
        {
            "passed": all(r.passed for r in results),
            "suites": [r.to_dict() for r in results],
        },
        indent=2,
    )


def _level_handle(n: int, f: wv.WaveletFilter) -> gc.LinearMapHandle:
    m = wv.band_length(n, len(f))

    def fwd(x):
        lo, hi = wv.dwt1d_level(x, f)
        return np.concatenate([lo, hi])

    def bwd(y):
        return wv.idwt1d_level(y[:m], y[m:], f, n)

    return gc.LinearMapHandle(forward=fwd, backward=bwd, in_dim=n, out_dim=2 * m)


def wavelet_suite(quick: bool = False) -> SuiteResult:
    res = SuiteResult("wavelet")
    rng = np.random.default_rng(12345)
    filters = (wv.haar_filter(), wv.db3_filter())

    for f in filters:
        errs = wv.filter_errors(f)
        worst = max(errs.values())
        res.add(f"filter_invariants_{f.name}", worst <= 1e-10, f"max err {worst:.2e}")
    vm = max(wv.vanishing_moment_errors(wv.db3_filter(), 3))
    res.add("db3_vanishing_moments", vm <= 1e-10, f"max moment err {vm:.2e}")

    # a 1e-3 tap perturbation must be caught by the same invariant battery
    g = wv.db3_filter().g.copy()
    g[2] += 1e-3
    mutant = wv.WaveletFilter("db3-mutant", g, wv.mirror_highpass(g))
    mutant_err = max(wv.filter_errors(mutant).values())
    res.add(
        "mutated_filter_detected", mutant_err > 1e-10, f"mutant err {mutant_err:.2e}"
    )

    n_max = 64 if quick else 256
    worst = 0.0
    for n in range(1, n_max + 1):
        x = rng.standard_normal(n)
        for f in filters:
            for levels in (1, 2, 3):
                r = wv.idwt1d(wv.dwt1d(x, f, levels), f)
                worst = max(worst, float(np.max(np.abs(r - x))))
    res.add(
        "reconstruction_1d",
        worst <= 1e-10,
        f"N 1..{n_max}, J 1..3, both filters: max err {worst:.2e}",
    )

    hw_max = 16 if quick else 32
    worst = 0.0
    for h in range(1, hw_max + 1):
        for w in range(1, hw_max + 1):
            m = rng.standard_normal((h, w))
            for f in filters:
                r = wv.idwt2d(wv.dwt2d(m, f), f)
                worst = max(worst, float(np.max(np.abs(r - m))))
    res.add(
        "reconstruction_2d",
        worst <= 1e-10,
        f"(H,W) 1..{hw_max} squared, both filters: max err {worst:.2e}",
    )

    worst = 0.0
    for n in (5, 16, 33):
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        a, b = rng.standard_normal(2)
        for f in filters:
            mixed = wv.dwt1d(a * x + b * y, f, 3)
            px, py = wv.dwt1d(x, f, 3), wv.dwt1d(y, f, 3)
            worst = max(worst, float(np.max(np.abs(mixed.ap - a * px.ap - b * py.ap))))
            for j in range(3):
                worst = max(
                    worst,
                    float(
                        np.max(
                            np.abs(mixed.details[j] - a * px.details[j] - b * py.details[j])
                        )
                    ),
                )
    res.add("linearity", worst <= 1e-10, f"max err {worst:.2e}")

    worst = 0.0
    srng = SeededRng(77)
    for n in (1, 7, 16, 45):
        for f in filters:
            worst = max(worst, gc.adjoint_test(_level_handle(n, f), srng, trials=20))
    res.add("adjoint_identity", worst <= 1e-10, f"max rel defect {worst:.2e}")

    x = np.arange(64.0) ** 2
    _, hi = wv.dwt1d_level(x, wv.db3_filter())
    interior = float(np.max(np.abs(hi[3:-3])))
    res.add(
        "db3_annihilates_quadratics", interior <= 1e-10, f"interior max {interior:.2e}"
    )

    worst = 0.0
    for n in (3, 8, 21, 64):
        x = rng.standard_normal(n)
        for f in filters:
            lo, hi = wv.dwt1d_level(x, f)
            coeff_norm = float(np.sqrt(np.sum(lo**2) + np.sum(hi**2)))
            worst = max(worst, abs(coeff_norm - float(np.linalg.norm(x))))
    res.add("energy_preserved", worst <= 1e-10, f"max norm defect {worst:.2e}")
    return res


def dct_suite(quick: bool = False) -> SuiteResult:
    res = SuiteResult("dct")
    rng = np.random.default_rng(54321)

    n_max = 64 if quick else 128
    worst = 0.0
    for n in range(1, n_max + 1):
        x = rng.standard_normal(n)
        worst = max(worst, float(np.max(np.abs(dctmod.idct_1d(dctmod.dct2_1d(x)) - x))))
    res.add("roundtrip_1d", worst <= 1e-10, f"N 1..{n_max}: max err {worst:.2e}")

    worst = 0.0
    for shape in ((16, 16), (7, 9), (8, 32)):
        m = rng.standard_normal(shape)
        worst = max(worst, float(np.max(np.abs(dctmod.idct_2d(dctmod.dct2_2d(m)) - m))))
    res.add("roundtrip_2d", worst <= 1e-10, f"max err {worst:.2e}")

    worst = 0.0
    for n in (3, 8, 37, 64):
        x = rng.standard_normal(n)
        worst = max(
            worst, abs(float(np.linalg.norm(dctmod.dct2_1d(x)) - np.linalg.norm(x)))
        )
    m = rng.standard_normal((16, 16))
    worst = max(
        worst, abs(float(np.linalg.norm(dctmod.dct2_2d(m)) - np.linalg.norm(m)))
    )
    res.add("parseval", worst <= 1e-10, f"max norm defect {worst:.2e}")

    worst = 0.0
    top = 256 if quick else 1024
    n = 1
    while n <= top:
        x = rng.standard_normal(n)
        d = np.abs(dctmod.dct2_1d(x, "fast") - dctmod.dct2_1d(x, "direct"))
        worst = max(worst, float(np.max(d)))
        xi = rng.standard_normal(n)
        d = np.abs(dctmod.idct_1d(xi, "fast") - dctmod.idct_1d(xi, "direct"))
        worst = max(worst, float(np.max(d)))
        n *= 2
    res.add(
        "fast_vs_direct", worst <= 1e-10, f"pow2 N up to {top}: max err {worst:.2e}"
    )

    imp = dctmod.fft(np.array([1.0, 0.0, 0.0, 0.0], dtype=complex))
    ok = np.allclose(imp, 0.5, atol=1e-14)
    z = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    rt = float(np.max(np.abs(dctmod.fft(dctmod.fft(z), inverse=True) - z)))
    ok = ok and rt <= 1e-12
    try:
        dctmod.fft(np.zeros(12, dtype=complex))
        ok = False
        detail = "length-12 fft did not raise"
    except ValueError:
        detail = f"impulse flat, roundtrip {rt:.2e}, non-pow2 raises"
    res.add("fft_contract", ok, detail)

    bad = 0
    trials = 200 if quick else 1000
    prng = np.random.default_rng(99)
    for _ in range(trials):
        size = int(prng.integers(1, 40))
        vals = prng.integers(-4, 5, size=size).astype(float)  # many ties
        if prng.random() < 0.5:
            vals = prng.standard_normal(size)
        eta = float(prng.uniform(0.0, 0.9))
        got = dctmod.prune_quantile(vals, eta)
        expect = _prune_oracle(vals, eta)
        if not np.array_equal(got == 0.0, expect == 0.0):
            bad += 1
        if not np.array_equal(dctmod.prune_quantile(vals, 0.0), vals):
            bad += 1
    res.add("prune_vs_sort_oracle", bad == 0, f"{trials} random vectors, {bad} mismatches")
    return res


def _prune_oracle(vals: np.ndarray, eta: float) -> np.ndarray:
    """Independent nearest-rank pruning: sort, walk, zero strictly-below."""
    import math

    vals = np.asarray(vals, dtype=np.float64)
    m = vals.size
    k = 0 if eta == 0.0 else max(1, math.ceil(eta * m - 1e-9))
    out = vals.copy()
    if k == 0:
        return out
    order = np.argsort(np.abs(vals), kind="stable")
    threshold = np.abs(vals[order[min(k, m - 1)]])
    for i in range(m):
        if abs(vals[i]) < threshold:
            out[i] = 0.0
    return out


_SHAPES = ((1, 1, 8, 8), (2, 3, 16, 16), (1, 4, 7, 9))


def dropout_suite(quick: bool = False) -> SuiteResult:
    res = SuiteResult("dropout")

    worst = 0.0
    for variant in dp.VARIANTS:
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.0, eta=0.0)
        for shape in _SHAPES:
            x = SeededRng(sum(shape)).normal(int(np.prod(shape))).reshape(shape)
            out, _ = dp.forward(x, cfg, SeededRng(1))
            worst = max(worst, float(np.max(np.abs(out - x))))
    res.add("identity_at_p0", worst <= 1e-10, f"all variants/shapes: max dev {worst:.2e}")

    x = SeededRng(5).normal(2 * 3 * 8 * 8).reshape(2, 3, 8, 8)
    ok = True
    opcount.reset()
    for variant in dp.VARIANTS:
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.3, eta=0.0)
        out, rec = dp.forward(x, cfg, SeededRng(1), mode="eval")
        ok = ok and out.tobytes() == x.tobytes() and rec is None
    ops = opcount.value()
    res.add("eval_passthrough", ok and ops == 0, f"byte-identical, {ops} transform ops")

    ok = True
    for variant in dp.VARIANTS:
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.25, eta=0.0)
        a, _ = dp.forward(x, cfg, SeededRng(7))
        b, _ = dp.forward(x, cfg, SeededRng(7))
        ok = ok and a.tobytes() == b.tobytes()
    res.add("seed_determinism", ok, "equal seeds give equal bytes")

    ok = True
    for variant in ("swd1d", "swd2d"):
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.5)
        forced = np.array([0, 1, 0], dtype=np.uint8)
        out, _ = dp.forward(x, cfg, SeededRng(3), forced_bits=forced)
        for b_i in range(x.shape[0]):
            for c_i in range(x.shape[1]):
                solo, _ = dp.forward(
                    x[b_i : b_i + 1, c_i : c_i + 1],
                    cfg,
                    SeededRng(3),
                    forced_bits=forced,
                )
                if not np.allclose(out[b_i, c_i], solo[0, 0], atol=1e-12):
                    ok = False
    res.add("mask_shared_across_batch_channels", ok, "per-channel outputs match forced-mask forward")

    ok = True
    for variant in dp.VARIANTS:
        cfg = dp.SpectralDropoutConfig(
            variant=variant, p=0.3, eta=0.2 if variant.startswith("sfd") else 0.0
        )
        out, rec = dp.forward(x, cfg, SeededRng(11))
        ok = ok and dp.replay(x, rec, cfg).tobytes() == out.tobytes()
        rec2 = dp.MaskRecord.from_bytes(rec.to_bytes())
        ok = ok and dp.replay(x, rec2, cfg).tobytes() == out.tobytes()
    res.add("replay_bit_identity", ok, "direct and serialized replays match")

    draws = 2000 if quick else 5000
    sigmas = 6.0
    worst_z = 0.0
    xsmall = SeededRng(21).normal(1 * 2 * 8 * 8).reshape(1, 2, 8, 8)
    for variant in dp.VARIANTS:
        eta = 0.2 if variant.startswith("sfd") else 0.0
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.2, eta=eta)
        rng = SeededRng(4242)
        acc = np.zeros_like(xsmall)
        acc2 = np.zeros_like(xsmall)
        for _ in range(draws):
            out, _ = dp.forward(xsmall, cfg, rng)
            acc += out
            acc2 += out * out
        mean = acc / draws
        var = np.maximum(acc2 / draws - mean**2, 0.0)
        sem = np.sqrt(var / draws)
        ref = _expected_output(xsmall, cfg)
        z = np.abs(mean - ref) / (sigmas * sem + 1e-9)
        worst_z = max(worst_z, float(np.max(z)))
    res.add(
        "unbiasedness_montecarlo",
        worst_z <= 1.0,
        f"{draws} draws, {sigmas:.0f} sigma: worst normalized dev {worst_z:.3f}",
    )
    return res


def _expected_output(x: np.ndarray, cfg: dp.SpectralDropoutConfig) -> np.ndarray:
    """Deterministic mean of the masked forward: identity for wavelet
    variants, prune-only for Fourier variants."""
    if cfg.is_wavelet:
        return x
    prune_cfg = dp.SpectralDropoutConfig(variant=cfg.variant, p=0.0, eta=cfg.eta)
    out, _ = dp.forward(x, prune_cfg, SeededRng(0))
    return out


def grad_suite(quick: bool = False) -> SuiteResult:
    res = SuiteResult("grad")
    shape = (1, 2, 8, 8)
    x = SeededRng(31).normal(int(np.prod(shape))).reshape(shape)
    trials = 25 if quick else 100

    worst = 0.0
    for variant in dp.VARIANTS:
        eta = 0.3 if variant.startswith("sfd") else 0.0
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.4, eta=eta)
        _, rec = dp.forward(x, cfg, SeededRng(13))
        backward = gc.swd_backward if cfg.is_wavelet else gc.sfd_backward

        handle = gc.LinearMapHandle(
            forward=lambda v, rec=rec, cfg=cfg: dp.replay(
                v.reshape(shape), rec, cfg
            ).ravel(),
            backward=lambda v, rec=rec, cfg=cfg, bw=backward: bw(
                v.reshape(shape), rec, cfg
            ).ravel(),
            in_dim=x.size,
            out_dim=x.size,
        )
        worst = max(worst, gc.adjoint_test(handle, SeededRng(17), trials))
    res.add("operator_adjoints", worst <= 1e-10, f"max rel defect {worst:.2e}")

    ok = True
    g = SeededRng(23).normal(x.size).reshape(shape)
    for variant, bw in (("swd1d", gc.swd_backward), ("sfd1d", gc.sfd_backward)):
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.3)
        ok = ok and bw(g, None, cfg).tobytes() == g.tobytes()
    res.add("eval_backward_identity", ok, "record=None backward is identity")

    worst = 0.0
    for variant in ("swd1d", "sfd2d") if quick else dp.VARIANTS:
        eta = 0.3 if variant.startswith("sfd") else 0.0
        cfg = dp.SpectralDropoutConfig(variant=variant, p=0.4, eta=eta)
        _, rec = dp.forward(x, cfg, SeededRng(37))
        backward = gc.swd_backward if cfg.is_wavelet else gc.sfd_backward

        def half_sq(v):
            out = dp.replay(v, rec, cfg)
            return 0.5 * float(np.sum(out * out))

        analytic = backward(dp.replay(x, rec, cfg), rec, cfg)
        fd = gc.finite_diff_grad(half_sq, x, eps=1e-6)
        worst = max(worst, gc.relative_error(analytic, fd))
    res.add("finite_difference_operators", worst <= 1e-5, f"max rel err {worst:.2e}")

    layer_err = nn.gradcheck_layers()
    res.add("layer_gradients", layer_err <= 1e-5, f"worst rel err {layer_err:.2e}")

    # the harness itself must detect a wrong adjoint
    n = 16
    mat = np.arange(1.0, n * n + 1.0).reshape(n, n) / n
    good = gc.LinearMapHandle(lambda v: mat @ v, lambda v: mat.T @ v, n, n)
    bad = gc.LinearMapHandle(lambda v: mat @ v, lambda v: 2.0 * (mat.T @ v), n, n)
    e_good = gc.adjoint_test(good, SeededRng(41), 20)
    e_bad = gc.adjoint_test(bad, SeededRng(41), 20)
    res.add(
        "adjoint_harness_sensitivity",
        e_good <= 1e-12 and e_bad > 0.01,
        f"exact pair {e_good:.2e}, scaled pair {e_bad:.2e}",
    )
    return res


SUITES = {
    "wavelet": wavelet_suite,
    "dct": dct_suite,
    "dropout": dropout_suite,
    "grad": grad_suite,
}


def run_suites(names: list[str], quick: bool = False) -> list[SuiteResult]:
    return [SUITES[name](quick=quick) for name in names]
