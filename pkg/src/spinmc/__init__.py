"""Signed continuous-time Markov chain simulation of open quantum spin lattices."""

__version__ = "0.1.0"

from .configspace import (Configuration, Lattice, ModelSpec, SiteState,
                          all_configurations, build_lattice, decode, encode,
                          tfim_model)
from .opbasis import LocalRateMatrix, assemble_model, global_rate_matrix
from .gauge import canonical_gauge_pair, canonical_gauge_single, gauge_basis, optimize_gauge
from .noise import (critical_gamma, design_noise, design_noise_single,
                    tfim_noise_template)
from .engine import (Ensemble, EnsembleResult, InitialState,
                     ObservableTracker, compile_model, run_ensemble,
                     run_trajectory)
from .predict import (fit_growth, growth_rate, growth_rate_model,
                      growth_report, omega_saturation, omega_saturation_model)
