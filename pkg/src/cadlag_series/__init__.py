"""Series simulation of stable and infinitely divisible processes with cadlag paths,
exact jump ledgers, and the distributional checks that go with them."""

__version__ = "0.1.0"

from .kernel import (
    IndicatorKernel,
    Kernel,
    OUKernel,
    SeriesIntegrand,
    TabulatedKernel,
    c_alpha,
    indicator_kernel,
    lepage_integrand,
    ou_kernel,
)
from .measure import AtomMeasure, DensityMeasure, atoms, lebesgue
from .path import CadlagPath, JumpLedger
from .randomness import RngStream
from .series import SeriesConfig, lepage_sample_path, shot_noise_sample_path

__all__ = [
    "AtomMeasure",
    "CadlagPath",
    "DensityMeasure",
    "IndicatorKernel",
    "JumpLedger",
    "Kernel",
    "OUKernel",
    "RngStream",
    "SeriesConfig",
    "SeriesIntegrand",
    "TabulatedKernel",
    "atoms",
    "c_alpha",
    "indicator_kernel",
    "lebesgue",
    "lepage_integrand",
    "lepage_sample_path",
    "ou_kernel",
    "shot_noise_sample_path",
]
