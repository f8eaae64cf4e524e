"""Poincare and log-Sobolev constants of low-temperature Gibbs measures
exp(-V/t) / Z_t whose potential V vanishes on an interval."""
from .asymptotics import (AsymptoticModel, conjecture_prediction, counterexample_lower_bound,
                          lsi_expansion_1d, poincare_expansion_1d, theorem_1d_coefficient,
                          theorem_cs_limits, z_expansion_model)
from .entropy import (LsiResult, defective_lsi_components, entropy_functional, lsi_constant,
                      lsi_rayleigh, rothaus_tighten)
from .exceptions import (ConfigError, ConvergenceError, InstabilityError, MixedExponentError,
                         NumericalError, PLDivergenceError)
from .langevin import SimConfig, gap_estimate, simulate
from .mesh import GridSpec, WeightedMesh, build_mesh
from .potential import (PiecewisePotential, WingSpec, asymmetric, counterexample, gaussian,
                        gradient_flow_decay_check, named_potential, pl_constant, quadratic_growth_check,
                        quartic, validate_assumptions)
from .quadrature import (BoundaryMeasure, boundary_measure_sigma_t, boundary_mean_control_check,
                         limiting_sigma, partition_function, variance, weighted_moment, z_expansion)
from .spectral import (SpectralResult, assemble, bakry_emery_bound, neumann_baseline,
                       poincare_constant, surrogate_constant)
from .sweep import FitResult, SweepTable, power_fit, refutation_report, run_sweep

__version__ = "0.1.0"
