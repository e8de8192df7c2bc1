"""Pseudo-spectral operator-splitting solver for the Cahn-Hilliard equation on the
2D torus, with energy-stability, kernel and convergence diagnostics."""

from .energy import (
    Constants,
    EnergyReport,
    StabilityCertificate,
    ThresholdEstimate,
    certify_step,
    classical_energy,
    potential_bounds,
    modified_energy,
    threshold,
)
from .harness import (
    InitialDataSpec,
    RunDiagnostics,
    convergence_study,
    defect_rate_study,
    run,
    tau_star_bisection,
)
from .propagators import (
    DefectReport,
    SolverParams,
    compute_defect,
    resolvent_step,
    step_composed,
    step_linear,
    step_nonlinear,
)
from .spectral import (
    Grid2D,
    Multiplier,
    RealField,
    SpectralField,
    apply_multiplier,
    forward,
    inverse,
    norms,
    project_mean_zero,
)

__version__ = "0.1.0"
