"""Numerical toolkit for strings with signed mass and a nonnegative dipole part.

Core objects: string specifications (length plus two measures), their
fundamental solutions and Weyl functions, the equivalent canonical
Hamiltonian systems, spectral measures, and convergence diagnostics for
families of strings.
"""
from __future__ import annotations

from .canonical import (
    CanonicalSolution,
    Hamiltonian,
    HamiltonianPiece,
    canonical_m,
    canonical_m_grid,
    canonical_solution,
    hamiltonian_from_json,
    hamiltonian_to_json,
    hamiltonian_to_string,
    indivisible_prefix,
    string_to_hamiltonian,
    validate_hamiltonian,
)
from .coefficients import (
    CoefficientView,
    MeasureData,
    StringSpec,
    TravelCoords,
    coefficient_view,
    eval_coefficients,
    spec_discrepancy,
    spec_from_json,
    spec_to_json,
    travel_coords,
    validate_spec,
    xi_eval,
)
from .convergence import (
    CONVERGES,
    DIVERGES,
    INCONCLUSIVE,
    ConvergenceReport,
    StringSequence,
    hamiltonian_convergence_check,
    m_convergence_check,
    mollified_family,
    mollify_string,
    report_to_json,
    string_convergence_check,
)
from .errors import (
    ComputationError,
    DegenerateHamiltonian,
    ExtrapolationUnstable,
    NegativeUpsilon,
    NonPositiveLength,
    NonRealRequired,
    NotAtomic,
    NotFiniteLength,
    OverlappingDensityIntervals,
    PositionOutOfRange,
    ToleranceNotMet,
    TruncationNotConverged,
    UnsupportedShape,
    ValidationError,
    WindowTouchesAtomZero,
)
from .propagation import (
    FundamentalSystem,
    SystemState,
    exact_step,
    exact_step_matrix,
    fundamental_system,
    solve_inhomogeneous,
    transfer_matrices,
)
from .spectral import (
    HilbertElement,
    SpectralMeasure,
    discrete_eigenvalues,
    green_kernel,
    hilbert_inner,
    hilbert_norm_squared,
    measure_from_json,
    measure_to_json,
    norm_squared_in_measure,
    point_evaluator,
    projection_energy,
    spectral_measure_discrete,
    stieltjes_inversion,
    transfer_polynomials,
    transform_hat,
)
from .weyl import (
    Classification,
    IntegralRep,
    WeylSample,
    classify,
    integral_rep_constants,
    m_truncated,
    standard_grid,
    structural_flags,
    weyl_m,
    weyl_solution_psi,
)

__version__ = "0.1.0"

__all__ = [
    "CONVERGES",
    "DIVERGES",
    "INCONCLUSIVE",
    "CanonicalSolution",
    "Classification",
    "CoefficientView",
    "ComputationError",
    "ConvergenceReport",
    "DegenerateHamiltonian",
    "ExtrapolationUnstable",
    "FundamentalSystem",
    "Hamiltonian",
    "HamiltonianPiece",
    "HilbertElement",
    "IntegralRep",
    "MeasureData",
    "NegativeUpsilon",
    "NonPositiveLength",
    "NonRealRequired",
    "NotAtomic",
    "NotFiniteLength",
    "OverlappingDensityIntervals",
    "PositionOutOfRange",
    "SpectralMeasure",
    "StringSequence",
    "StringSpec",
    "SystemState",
    "ToleranceNotMet",
    "TravelCoords",
    "TruncationNotConverged",
    "UnsupportedShape",
    "ValidationError",
    "WeylSample",
    "WindowTouchesAtomZero",
    "canonical_m",
    "canonical_m_grid",
    "canonical_solution",
    "classify",
    "coefficient_view",
    "discrete_eigenvalues",
    "eval_coefficients",
    "exact_step",
    "exact_step_matrix",
    "fundamental_system",
    "green_kernel",
    "hamiltonian_convergence_check",
    "hamiltonian_from_json",
    "hamiltonian_to_json",
    "hamiltonian_to_string",
    "hilbert_inner",
    "hilbert_norm_squared",
    "indivisible_prefix",
    "integral_rep_constants",
    "m_convergence_check",
    "m_truncated",
    "measure_from_json",
    "measure_to_json",
    "mollified_family",
    "mollify_string",
    "norm_squared_in_measure",
    "point_evaluator",
    "projection_energy",
    "report_to_json",
    "spec_discrepancy",
    "spec_from_json",
    "spec_to_json",
    "spectral_measure_discrete",
    "standard_grid",
    "stieltjes_inversion",
    "string_convergence_check",
    "string_to_hamiltonian",
    "structural_flags",
    "transfer_matrices",
    "transfer_polynomials",
    "transform_hat",
    "travel_coords",
    "validate_hamiltonian",
    "validate_spec",
    "weyl_m",
    "weyl_solution_psi",
    "xi_eval",
]
