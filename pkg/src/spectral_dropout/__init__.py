"""Spectral dropout in wavelet and cosine bases, with the transforms,
gradients, training harness and benchmarks needed to study it."""

from .data import SyntheticDataset, make_dataset
from .dct import dct2_1d, dct2_2d, fft, idct_1d, idct_2d, prune_quantile
from .dropout import (
    MaskRecord,
    SpectralDropoutConfig,
    replay,
    sfd1d_forward,
    sfd2d_forward,
    swd1d_forward,
    swd2d_forward,
)
from .gradcheck import (
    LinearMapHandle,
    adjoint_test,
    finite_diff_grad,
    sfd_backward,
    swd_backward,
)
from .rng import SeededRng, bernoulli_bits
from .tensor import flatten_spatial, load_tensor, reshape_spatial, save_tensor
from .training import RunMetrics, ToyNetSpec, train
from .wavelet import (
    Bands2D,
    Pyramid1D,
    WaveletFilter,
    db3_filter,
    dwt1d,
    dwt1d_level,
    dwt2d,
    haar_filter,
    idwt1d,
    idwt1d_level,
    idwt2d,
)

__version__ = "0.1.0"

__all__ = [
    "Bands2D",
    "LinearMapHandle",
    "MaskRecord",
    "Pyramid1D",
    "RunMetrics",
    "SeededRng",
    "SpectralDropoutConfig",
    "SyntheticDataset",
    "ToyNetSpec",
    "WaveletFilter",
    "adjoint_test",
    "bernoulli_bits",
    "db3_filter",
    "dct2_1d",
    "dct2_2d",
    "dwt1d",
    "dwt1d_level",
    "dwt2d",
    "fft",
    "finite_diff_grad",
    "flatten_spatial",
    "haar_filter",
    "idct_1d",
    "idct_2d",
    "idwt1d",
    "idwt1d_level",
    "idwt2d",
    "load_tensor",
    "make_dataset",
    "prune_quantile",
    "replay",
    "reshape_spatial",
    "save_tensor",
    "sfd1d_forward",
    "sfd2d_forward",
    "sfd_backward",
    "swd1d_forward",
    "swd2d_forward",
    "swd_backward",
    "train",
]
