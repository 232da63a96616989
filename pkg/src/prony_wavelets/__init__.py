"""Sparse wavelet signal recovery from Fourier measurements on a deterministic set."""

from .banks import BUILTIN_BANKS, make_bank
from .errors import NumericalError, PronyWaveletsError, ValidationError
from .demos import demo_1d, demo_2d
from .lattice import DilationScheme, SupportBox, WaveletBank, verify_bank
from .noise import NoiseSpec, add_noise, reconstruct_robust, snr_sweep
from .prony import PronyInput, recover_sparse_trig
from .reconstruction import Tolerances, reconstruct
from .sampling import SamplingPlan, build_plan, validate_shift
from .signal import MeasurementSet, SparseWaveletSignal, eval_signal_time, fourier_measure, measure_at, measure_on_plan, random_signal

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_BANKS",
    "DilationScheme",
    "MeasurementSet",
    "NoiseSpec",
    "NumericalError",
    "PronyInput",
    "PronyWaveletsError",
    "SamplingPlan",
    "SparseWaveletSignal",
    "SupportBox",
    "Tolerances",
    "ValidationError",
    "WaveletBank",
    "add_noise",
    "build_plan",
    "demo_1d",
    "demo_2d",
    "eval_signal_time",
    "fourier_measure",
    "make_bank",
    "measure_at",
    "measure_on_plan",
    "random_signal",
    "reconstruct",
    "reconstruct_robust",
    "recover_sparse_trig",
    "snr_sweep",
    "validate_shift",
    "verify_bank",
]
