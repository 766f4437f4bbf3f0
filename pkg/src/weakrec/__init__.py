"""Weak-recovery toolkit for phase retrieval and generalized linear measurements.

Core pipeline: a measurement channel p(y|g) induces Gaussian marginals; a
preprocessing function T pushes them to the discrete law of Z = T(Y); the
random-matrix engine turns that law into overlap and eigenvalue predictions
for the spectral estimator, which the sensing/spectral modules realize on
actual data.  Thresholds and an AMP iteration cross-validate the predictions.
"""

from . import amp, channels, harness, preprocess, rmt, sensing, spectral, thresholds
from .channels import Channel, gap_example, marginals, phase_retrieval
from .preprocess import PreprocessSpec, ZLaw, zlaw
from .rmt import OverlapPrediction, solve_fixed_point, spike_map
from .sensing import measure, sample_cdp_ensemble, sample_gaussian_ensemble, \
    sample_signal
from .spectral import overlap, power_method
from .thresholds import threshold_report

__version__ = "0.1.0"

__all__ = [
    "amp", "channels", "harness", "preprocess", "rmt", "sensing", "spectral",
    "thresholds",
    "Channel", "gap_example", "marginals", "phase_retrieval",
    "PreprocessSpec", "ZLaw", "zlaw",
    "OverlapPrediction", "solve_fixed_point", "spike_map",
    "measure", "sample_cdp_ensemble", "sample_gaussian_ensemble",
    "sample_signal", "overlap", "power_method", "threshold_report",
    "__version__",
]
