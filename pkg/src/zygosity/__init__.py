"""Paired-signal zygosity classification.

Cosine-series compression of time series, coefficient-space twin
correlations pooled by region, an L1-penalized two-layer classifier with
hill-climbing variable selection, and a mixed-effects twin simulator.
"""
from .basis import build_design, fit_csr, normalize_time_series, reconstruct, snr, uniform_grid
from .models.dataset import PairedDataset
from .pairing import Parcellation, csr_correlation, fisher_inv, fisher_z, pair_to_features, region_average
from .simulate import generate_dataset, generate_pair, study_preset

__version__ = "0.1.0"

__all__ = [
    "PairedDataset", "Parcellation", "build_design", "csr_correlation", "fisher_inv", "fisher_z",
    "fit_csr", "generate_dataset", "generate_pair", "normalize_time_series", "pair_to_features",
    "reconstruct", "region_average", "snr", "study_preset", "uniform_grid",
]
