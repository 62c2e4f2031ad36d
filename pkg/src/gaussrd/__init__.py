"""Inner and outer rate-distortion bounds for Gaussian remote and multiterminal source coding."""

from .errors import GaussRDError
from .gauss_model import (
    MatrixSpec,
    RateAllocation,
    SourceModel,
    SumSpec,
    VectorSpec,
    conditional_covariance,
    make_model,
    psd_order_leq,
    scaled_noise_inverse,
    validate_model,
)

__version__ = "0.1.0"

__all__ = [
    "GaussRDError",
    "MatrixSpec",
    "RateAllocation",
    "SourceModel",
    "SumSpec",
    "VectorSpec",
    "conditional_covariance",
    "make_model",
    "psd_order_leq",
    "scaled_noise_inverse",
    "validate_model",
]
