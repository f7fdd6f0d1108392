"""Joint spectra of type-II down-converted photon pairs under pulse-front tilt."""
from .analysis import (
    GaussianJSIFit, SchmidtDecomposition, classify_regime, fit_gaussian, schmidt_decompose,
)
from .biphoton import (
    BiphotonSource, GridSpec, JointSpectrumGrid, PumpConfig, compute_jsa, marginals,
    temporal_correlation_width,
)
from .dispersion import load_sellmeier, refractive_index, wave_dispersion, walkoff_angle
from .phasematch import CrystalConfig, solve_pm_angle, taylor_coefficients
from .scan import ScanConfig, ingest_scan, simulate_scan
from .sweep import solve_xi_for_regime, sweep_xi
from .tilt import TiltConfig

__version__ = "0.1.0"

__all__ = [
    "BiphotonSource", "CrystalConfig", "GaussianJSIFit", "GridSpec", "JointSpectrumGrid",
    "PumpConfig", "ScanConfig", "SchmidtDecomposition", "TiltConfig", "classify_regime",
    "compute_jsa", "fit_gaussian", "ingest_scan", "load_sellmeier", "marginals",
    "refractive_index", "schmidt_decompose", "simulate_scan", "solve_pm_angle",
    "solve_xi_for_regime", "sweep_xi", "taylor_coefficients", "temporal_correlation_width",
    "walkoff_angle", "wave_dispersion",
]
