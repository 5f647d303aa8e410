"""Heterogeneous massive MIMO (cBS plus edge APs) spectral-efficiency simulator."""

__version__ = "0.1.0"

from .config import ConfigError, NetworkConfig, derive_scenario, load_config, noise_power
from .campaign import CdfSummary, SeSample, percentile, run_campaign, run_drop

__all__ = ["ConfigError", "NetworkConfig", "derive_scenario", "load_config", "noise_power",
           "CdfSummary", "SeSample", "percentile", "run_campaign", "run_drop", "__version__"]
