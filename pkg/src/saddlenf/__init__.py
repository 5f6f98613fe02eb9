"""Polynomial normal forms and smooth-linearization diagnostics for ODEs
near saddle-center equilibria.

The package splits into a symbolic half -- truncated multivariate polynomial
arithmetic (:mod:`~saddlenf.polycore`), resonance bookkeeping
(:mod:`~saddlenf.resonance`), Poincare-Dulac and Hamiltonian-Lie normal
forms (:mod:`~saddlenf.normalform`), exact smoothness budgets
(:mod:`~saddlenf.budget`) and sign-symmetry checks (:mod:`~saddlenf.signsym`)
-- and a numerical half: spectral/log-norm estimates
(:mod:`~saddlenf.spectral`), the characteristic-quadrature cohomological
solver and deformation flow (:mod:`~saddlenf.cohsolver`) and sampled NHIM
diagnostics (:mod:`~saddlenf.nhimverify`).  :mod:`~saddlenf.service` exposes
the pipelines over HTTP and :mod:`~saddlenf.cli` is a thin client for it.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetInequalityError,
    MathPreconditionError,
    NumericalBlowupError,
    NumericalError,
    QuadratureToleranceError,
    ResonantMonomialError,
    RosterError,
    SaddleNFError,
    SchemaError,
    SpectralGapError,
    exit_code_for,
)
from .polycore import (
    PolyField,
    PolySeries,
    Variable,
    VariableRoster,
    VarClass,
    commutator,
    hamiltonian_vector_field,
    poisson_bracket,
    pushforward_truncated,
)
from .bump import BumpSpec
from .spectral import SpectralGap, log_norm, m_l, mu_log, spectral_gap
from .resonance import ResonanceMode, ResonantSet, resonant_set
from .budget import (
    BudgetMode,
    SmoothnessBudget,
    compare_literature,
    default_choice,
    smoothness_budget,
    validate_choice,
    validate_ell,
)
from .normalform import (
    LinearPart,
    NormalizationResult,
    SplitRemainder,
    homological_solve,
    lie_normalize_hamiltonian,
    poincare_dulac,
    split_remainder,
    symplectic_defect,
    theorem_form_report,
)
from .signsym import (
    SignSymReport,
    check_field_signsym,
    check_hamiltonian_signsym,
    numeric_signsym_defect,
)
from .cohsolver import (
    CompactifiedSystem,
    Grid,
    SampledField,
    compactify,
    deformation_step,
    make_deformation_generator,
    realify,
    residual_check,
    solve_backward,
    solve_forward,
)
from .nhimverify import RateConstants, isolating_block, rate_conditions, rate_constants
from .systemspec import SystemSpec, load_system_spec, parse_system_spec

__all__ = [
    "__version__",
    # errors
    "SaddleNFError",
    "SchemaError",
    "RosterError",
    "MathPreconditionError",
    "SpectralGapError",
    "ResonantMonomialError",
    "BudgetInequalityError",
    "NumericalError",
    "QuadratureToleranceError",
    "NumericalBlowupError",
    "exit_code_for",
    # polynomial core
    "Variable",
    "VarClass",
    "VariableRoster",
    "PolySeries",
    "PolyField",
    "commutator",
    "pushforward_truncated",
    "hamiltonian_vector_field",
    "poisson_bracket",
    "BumpSpec",
    # spectral
    "SpectralGap",
    "spectral_gap",
    "log_norm",
    "mu_log",
    "m_l",
    # resonance
    "ResonanceMode",
    "ResonantSet",
    "resonant_set",
    # budget
    "BudgetMode",
    "SmoothnessBudget",
    "smoothness_budget",
    "default_choice",
    "validate_choice",
    "validate_ell",
    "compare_literature",
    # normal forms
    "LinearPart",
    "NormalizationResult",
    "homological_solve",
    "poincare_dulac",
    "lie_normalize_hamiltonian",
    "symplectic_defect",
    "SplitRemainder",
    "split_remainder",
    "theorem_form_report",
    # sign symmetry
    "SignSymReport",
    "check_field_signsym",
    "check_hamiltonian_signsym",
    "numeric_signsym_defect",
    # cohomological solver
    "CompactifiedSystem",
    "compactify",
    "realify",
    "Grid",
    "SampledField",
    "solve_backward",
    "solve_forward",
    "residual_check",
    "make_deformation_generator",
    "deformation_step",
    # NHIM diagnostics
    "RateConstants",
    "rate_constants",
    "rate_conditions",
    "isolating_block",
    # system documents
    "SystemSpec",
    "parse_system_spec",
    "load_system_spec",
]
