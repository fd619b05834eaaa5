"""Metric-corrected dynamics of a driven non-Hermitian two-level system.

A mode ``H = k sx + i gamma sy + F t sz`` is swept through its exceptional
points. Alongside the Schrodinger state the time-dependent metric ``rho`` is
integrated, giving a Hermitian mapped Hamiltonian ``h`` and a unitarily
evolving state ``Psi = eta psi``. Spin expectations read through the metric
are compared with the naive normalised ones.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    MetricBreakdown,
    NHMetricError,
    NumericalError,
    WindowTooSmall,
)
from .model import ModeParams, ep_times, hamiltonian, instantaneous_eigenvalues, spectrum_on_grid
from .evolution import (
    IntegratorConfig,
    Trajectory,
    TrajectorySample,
    evolve_factored,
    evolve_mode,
    metric_via_propagator,
    scattering_matrix,
    sweep_point,
)
from .observables import (
    METRIC,
    NORM,
    ExpectationMethod,
    adiabatic_value,
    asymptotic_sigma_z,
    asymptotic_value,
    expect_metric,
    expect_norm,
    parity_report,
    simulated_asymptotic_bloch,
)
from .defects import DefectSummary, defect_density, defect_density_finite_F

__all__ = [
    "ConfigError",
    "DefectSummary",
    "ExpectationMethod",
    "IntegratorConfig",
    "METRIC",
    "MetricBreakdown",
    "ModeParams",
    "NHMetricError",
    "NORM",
    "NumericalError",
    "Trajectory",
    "TrajectorySample",
    "WindowTooSmall",
    "adiabatic_value",
    "asymptotic_sigma_z",
    "asymptotic_value",
    "defect_density",
    "defect_density_finite_F",
    "ep_times",
    "evolve_factored",
    "evolve_mode",
    "expect_metric",
    "expect_norm",
    "hamiltonian",
    "instantaneous_eigenvalues",
    "metric_via_propagator",
    "parity_report",
    "scattering_matrix",
    "simulated_asymptotic_bloch",
    "spectrum_on_grid",
    "sweep_point",
]
