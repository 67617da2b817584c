"""Spectral distribution estimation for high-dimensional integrated covariance."""

from .experiment import ConfigError, ExperimentConfig, ExperimentReport, emit_plot_data, run_experiment, validate_config
from .spectra import ComplexGrid, SpectralDistribution, esd, kolmogorov_distance, stieltjes

__all__ = [
    "ComplexGrid",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "SpectralDistribution",
    "emit_plot_data",
    "esd",
    "kolmogorov_distance",
    "run_experiment",
    "stieltjes",
    "validate_config",
]
