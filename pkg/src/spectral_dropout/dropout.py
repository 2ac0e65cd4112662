"""Spectral dropout operators over wavelet and cosine bases.

Four train-time regularizers acting on (B, C, H, W) feature maps:

* ``swd1d``: flatten each channel, 3-level 1D DWT, drop whole detail
  bands with one shared 3-bit Bernoulli(1-p) mask, rescale survivors
  by 1/(1-p), inverse transform, reshape. Approximation band is never
  dropped (unless the explicit diagnostic flag asks for it).
* ``swd2d``: per-channel one-level 2D DWT, same 3-bit mask over
  (LH, HL, HH), LL preserved.
* ``sfd1d`` / ``sfd2d``: DCT the channel (1D flattened / 2D), zero
  coefficients below the eta magnitude quantile per channel, then drop
  the survivors with an i.i.d. per-coefficient Bernoulli(1-p) mask and
  rescale kept ones by 1/(1-p).

Eval mode is a strict pass-through: the input array is returned as-is
and no transform kernel runs.  Every train-mode forward emits a
MaskRecord; replaying a record re-applies the identical fixed linear
map, so replay on the original input is byte-identical to the forward
and replay on other inputs realizes the same map (which is what the
gradient checks pin their masks with).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .dct import dct2_1d, dct2_2d, idct_1d, idct_2d, prune_mask_lastaxis
from .rng import SeededRng
from .tensor import check_tensor4, flatten_spatial, reshape_spatial
from .wavelet import dwt1d, dwt2d, get_filter, idwt1d, idwt2d

VARIANTS = ("swd1d", "swd2d", "sfd1d", "sfd2d")
DETAIL_BANDS = {
    "swd1d": ("L1", "L2", "L3"),
    "swd2d": ("LH", "HL", "HH"),
}
APPROX_BAND = {"swd1d": "AP", "swd2d": "LL"}

_MAGIC = b"SDM1"


@dataclass(frozen=True)
class SpectralDropoutConfig:
    """Validated settings for one dropout operator instance.

    band_select restricts masking to a subset of the detail bands
    (ablation support); the approximation band is never selectable
    there.  drop_approximation is the explicitly-rejected diagnostic
    that additionally masks AP/LL with its own Bernoulli bit.
    """

    variant: str
    p: float = 0.1
    eta: float = 0.0
    wavelet: str = "db3"
    band_select: tuple[str, ...] | None = None
    drop_approximation: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant '{self.variant}', expected {VARIANTS}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must be in [0, 1), got {self.p}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must be in [0, 1), got {self.eta}")
        if self.is_wavelet:
            if self.eta != 0.0:
                raise ValueError("eta must be 0 for wavelet variants")
            get_filter(self.wavelet)
            if self.band_select is not None:
                allowed = DETAIL_BANDS[self.variant]
                chosen = tuple(self.band_select)
                bad = [b for b in chosen if b not in allowed]
                if bad:
                    raise ValueError(
                        f"band_select {bad} invalid for {self.variant}; "
                        f"detail bands are {allowed} and the approximation "
                        f"band is never selectable"
                    )
                object.__setattr__(self, "band_select", chosen)
        else:
            if self.band_select is not None or self.drop_approximation:
                raise ValueError("band selection applies only to wavelet variants")

    @property
    def is_wavelet(self) -> bool:
        return self.variant in ("swd1d", "swd2d")

    @property
    def levels(self) -> int:
        return 3 if self.variant == "swd1d" else 1

    def band_is_masked(self, band: str) -> bool:
        return self.band_select is None or band in self.band_select

    @property
    def n_mask_bits(self) -> int:
        return 4 if (self.is_wavelet and self.drop_approximation) else 3


@dataclass
class MaskRecord:
    """Everything needed to re-apply one sampled dropout realization.

    ``bits`` holds the Bernoulli draws: one bit per detail band (plus
    one for AP/LL under the diagnostic) for wavelet variants, or one
    bit per coefficient (flattened B*C*S) for Fourier variants, whose
    records also carry the realized prune survivor map.
    """

    variant: str
    p: float
    seed: int
    shape: tuple[int, int, int, int]
    bits: np.ndarray
    prune_bits: np.ndarray | None = field(default=None)

    def to_bytes(self) -> bytes:
        flags = 1 if self.prune_bits is not None else 0
        head = _MAGIC + struct.pack(
            "<BBdQ4I",
            VARIANTS.index(self.variant),
            flags,
            self.p,
            self.seed,
            *self.shape,
        )
        body = struct.pack("<Q", self.bits.size) + np.packbits(self.bits).tobytes()
        if self.prune_bits is not None:
            body += struct.pack("<Q", self.prune_bits.size)
            body += np.packbits(self.prune_bits).tobytes()
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "MaskRecord":
        if data[:4] != _MAGIC:
            raise ValueError("not a mask record (bad magic)")
        variant_idx, flags, p, seed, b, c, h, w = struct.unpack_from("<BBdQ4I", data, 4)
        off = 4 + struct.calcsize("<BBdQ4I")
        nbits, = struct.unpack_from("<Q", data, off)
        off += 8
        nbytes = (nbits + 7) // 8
        bits = np.unpackbits(
            np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=off)
        )[:nbits]
        off += nbytes
        prune = None
        if flags & 1:
            nprune, = struct.unpack_from("<Q", data, off)
            off += 8
            pbytes = (nprune + 7) // 8
            prune = np.unpackbits(
                np.frombuffer(data, dtype=np.uint8, count=pbytes, offset=off)
            )[:nprune]
        return cls(
            variant=VARIANTS[variant_idx],
            p=p,
            seed=seed,
            shape=(b, c, h, w),
            bits=bits,
            prune_bits=prune,
        )


def _check_mode(mode: str) -> None:
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got '{mode}'")


def _band_scales(cfg: SpectralDropoutConfig, bits: np.ndarray) -> dict[str, float]:
    """Per-band multipliers realized by one mask draw."""
    inv_keep = 1.0 / (1.0 - cfg.p)
    scales = {}
    for j, band in enumerate(DETAIL_BANDS[cfg.variant]):
        scales[band] = float(bits[j]) * inv_keep if cfg.band_is_masked(band) else 1.0
    approx = APPROX_BAND[cfg.variant]
    scales[approx] = float(bits[3]) * inv_keep if cfg.drop_approximation else 1.0
    return scales


def _apply_swd(x: np.ndarray, cfg: SpectralDropoutConfig, bits: np.ndarray) -> np.ndarray:
    filt = get_filter(cfg.wavelet)
    scales = _band_scales(cfg, bits)
    if cfg.variant == "swd1d":
        b, c, h, w = x.shape
        pyr = dwt1d(flatten_spatial(x), filt, levels=3)
        for j, band in enumerate(DETAIL_BANDS["swd1d"]):
            if scales[band] != 1.0:
                pyr.details[j] = pyr.details[j] * scales[band]
        if scales["AP"] != 1.0:
            pyr.ap = pyr.ap * scales["AP"]
        return reshape_spatial(idwt1d(pyr, filt), h, w)
    bands = dwt2d(x, filt)
    for band in ("LH", "HL", "HH", "LL"):
        if scales[band] != 1.0:
            setattr(bands, band.lower(), getattr(bands, band.lower()) * scales[band])
    return idwt2d(bands, filt)


def _apply_sfd(
    x: np.ndarray,
    cfg: SpectralDropoutConfig,
    eff: np.ndarray,
    spectrum: np.ndarray | None = None,
) -> np.ndarray:
    """Fixed spectral multiplier pipeline shared by forward and replay.

    ``spectrum`` lets the forward pass reuse the transform it already
    computed for pruning; the recomputed value is bit-identical, so
    replay stays byte-equal either way.
    """
    if cfg.variant == "sfd1d":
        b, c, h, w = x.shape
        if spectrum is None:
            spectrum = dct2_1d(flatten_spatial(x))
        return reshape_spatial(idct_1d(spectrum * eff), h, w)
    if spectrum is None:
        spectrum = dct2_2d(x)
    return idct_2d(spectrum * eff)


def _sfd_effective(
    cfg: SpectralDropoutConfig, prune_bits: np.ndarray, bern_bits: np.ndarray
) -> np.ndarray:
    return (prune_bits * bern_bits).astype(np.float64) * (1.0 / (1.0 - cfg.p))


def _forward(
    x: np.ndarray,
    cfg: SpectralDropoutConfig,
    rng: SeededRng,
    mode: str,
    forced_bits: np.ndarray | None,
) -> tuple[np.ndarray, MaskRecord | None]:
    x = check_tensor4(x)
    _check_mode(mode)
    if mode == "eval":
        return x, None
    b, c, h, w = x.shape
    if cfg.is_wavelet:
        n = cfg.n_mask_bits
        bits = _coerce_bits(forced_bits, n) if forced_bits is not None else rng.bernoulli(n, 1.0 - cfg.p)
        record = MaskRecord(cfg.variant, cfg.p, rng.seed, x.shape, bits)
        return _apply_swd(x, cfg, bits), record
    count = b * c * h * w
    bits = _coerce_bits(forced_bits, count) if forced_bits is not None else rng.bernoulli(count, 1.0 - cfg.p)
    if cfg.variant == "sfd1d":
        spectrum = dct2_1d(flatten_spatial(x))
    else:
        spectrum = dct2_2d(x)
    prune = prune_mask_lastaxis(spectrum.reshape(b, c, h * w), cfg.eta).astype(np.uint8)
    record = MaskRecord(
        cfg.variant, cfg.p, rng.seed, x.shape, bits, prune_bits=prune.ravel()
    )
    eff = _sfd_effective(cfg, prune.reshape(_eff_shape(cfg, x.shape)),
                         bits.reshape(_eff_shape(cfg, x.shape)))
    return _apply_sfd(x, cfg, eff, spectrum=spectrum), record


def _eff_shape(cfg: SpectralDropoutConfig, shape: tuple[int, ...]) -> tuple[int, ...]:
    b, c, h, w = shape
    return (b, c, h * w) if cfg.variant == "sfd1d" else (b, c, h, w)


def _coerce_bits(bits, n: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != n:
        raise ValueError(f"forced mask has {bits.size} bits, expected {n}")
    return bits


def _require_variant(cfg: SpectralDropoutConfig, variant: str) -> None:
    if cfg.variant != variant:
        raise ValueError(f"config variant '{cfg.variant}' does not match {variant}")


def swd1d_forward(x, cfg, rng, mode="train", forced_bits=None):
    """1D spectral wavelet dropout; returns (output, record|None)."""
    _require_variant(cfg, "swd1d")
    return _forward(x, cfg, rng, mode, forced_bits)


def swd2d_forward(x, cfg, rng, mode="train", forced_bits=None):
    """2D spectral wavelet dropout; returns (output, record|None)."""
    _require_variant(cfg, "swd2d")
    return _forward(x, cfg, rng, mode, forced_bits)


def sfd1d_forward(x, cfg, rng, mode="train", forced_bits=None):
    """1D spectral Fourier dropout (DCT, quantile prune, i.i.d. mask)."""
    _require_variant(cfg, "sfd1d")
    return _forward(x, cfg, rng, mode, forced_bits)


def sfd2d_forward(x, cfg, rng, mode="train", forced_bits=None):
    """2D spectral Fourier dropout (DCT, quantile prune, i.i.d. mask)."""
    _require_variant(cfg, "sfd2d")
    return _forward(x, cfg, rng, mode, forced_bits)


def forward(x, cfg, rng, mode="train", forced_bits=None):
    """Variant-dispatching forward."""
    return _forward(check_tensor4(x), cfg, rng, mode, forced_bits)


def _validate_replay(x: np.ndarray, record: MaskRecord, cfg: SpectralDropoutConfig):
    if record.variant != cfg.variant:
        raise ValueError(
            f"record variant '{record.variant}' does not match config "
            f"'{cfg.variant}'"
        )
    if record.p != cfg.p:
        raise ValueError(f"record p={record.p} does not match config p={cfg.p}")
    if tuple(record.shape) != x.shape:
        raise ValueError(f"record shape {record.shape} does not match input {x.shape}")
    if cfg.is_wavelet:
        if record.bits.size != cfg.n_mask_bits:
            raise ValueError(
                f"record has {record.bits.size} band bits, config needs "
                f"{cfg.n_mask_bits}"
            )
    else:
        if record.prune_bits is None:
            raise ValueError("Fourier-variant record is missing its prune map")
        if record.bits.size != x.size or record.prune_bits.size != x.size:
            raise ValueError("record bitmap size does not match input size")


def replay(x, record: MaskRecord | None, cfg: SpectralDropoutConfig) -> np.ndarray:
    """Re-apply a recorded mask as a fixed linear map.

    On the input that produced the record this is byte-identical to the
    original train-mode forward; on any other input it evaluates the
    same fixed linear operator.  record=None (eval mode) is identity.
    """
    x = check_tensor4(x)
    if record is None:
        return x
    _validate_replay(x, record, cfg)
    if cfg.is_wavelet:
        return _apply_swd(x, cfg, record.bits)
    shape = _eff_shape(cfg, x.shape)
    eff = _sfd_effective(
        cfg, record.prune_bits.reshape(shape), record.bits.reshape(shape)
    )
    return _apply_sfd(x, cfg, eff)
