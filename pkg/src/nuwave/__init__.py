"""Spectral simulation of a damped nonlinear wave equation with small
inertia and state-independent modulated noise, together with its two
reduced models (a stochastic heat equation and a deterministic damped
wave equation) and the velocity-splitting machinery used to compare
them.
"""

__version__ = "0.1.0"

from .errors import BlowUpError, ConfigurationError, GridMismatchError
from .spectral import (Nonlinearity, SpectralBasis, SpectralField,
                       apply_nonlinearity, from_physical, inner_l2,
                       make_basis, sobolev_norm, to_physical, unit_mode,
                       zero_field)
from .noise import (CovarianceSpectrum, NoisePath, coarsen, dump_path,
                    load_path, power_law_spectrum, sample_path,
                    stochastic_integral)
from .dynamics import (ModelParams, Trajectory, run_split, simulate_det_wave,
                       simulate_full, simulate_heat, wave_energy,
                       wave_propagator)
from .analysis import (EnsembleStats, ErrorReport, ExpansionAudit, RateFit,
                       TestFunction, ensemble, expansion_audit, rate_fit,
                       reconstruction_defect, replica_seed, sup_error,
                       weak_pairing)
from .config import ExperimentConfig, load_config, parse_config
from .harness import RunRecord, run_experiment, write_outputs

__all__ = [
    "__version__",
    "BlowUpError", "ConfigurationError", "GridMismatchError",
    "Nonlinearity", "SpectralBasis", "SpectralField", "apply_nonlinearity",
    "from_physical", "inner_l2", "make_basis", "sobolev_norm", "to_physical",
    "unit_mode", "zero_field",
    "CovarianceSpectrum", "NoisePath", "coarsen", "dump_path", "load_path",
    "power_law_spectrum", "sample_path", "stochastic_integral",
    "ModelParams", "Trajectory", "run_split", "simulate_det_wave",
    "simulate_full", "simulate_heat", "wave_energy", "wave_propagator",
    "EnsembleStats", "ErrorReport", "ExpansionAudit", "RateFit",
    "TestFunction", "ensemble", "expansion_audit", "rate_fit",
    "reconstruction_defect", "replica_seed", "sup_error", "weak_pairing",
    "ExperimentConfig", "load_config", "parse_config",
    "RunRecord", "run_experiment", "write_outputs",
]
