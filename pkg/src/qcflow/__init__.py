"""Numerical laboratory for the sub-Laplacian heat flow on the compact
quaternionic Heisenberg nilmanifold: exact on-grid group calculus, the
energy functional with its five-term production formula, and batch
verification suites for every identity the monotonicity statement rests on.
"""

from .algebra import (
    QuaternionicStructure,
    TorsionData,
    alpha_interval,
    casimir_decompose,
    four_part_decompose,
    h_polynomial,
    lichnerowicz_form,
    make_quaternionic_structure,
    random_torsion,
    represtor_combination,
    ricci_from_torsion,
    torsion_contraction,
)
from .energy import (
    EnergyReport,
    MonotonicityVerdict,
    derf_coefficients,
    derf_rhs,
    energy,
    energy_series,
    lemma_residual,
    monotonicity_verdict,
)
from .flow import FlowConfig, FlowState, F_of, cfl_timestep, evolve, heat_step, phi_of
from .identities import IDENTITY_NAMES, IdentityReport, bochner_residual, identity_residual
from .lattice import (
    FrameData,
    GroupPoint,
    HorizontalField,
    LatticeGrid,
    ScalarField,
    bump_value,
    frame_data,
    group_inverse,
    group_multiply,
    horizontal_step_index,
    integrate,
    load_field,
    make_grid,
    periodized_bump,
    save_field,
    vertically_uniform_bump,
)
from .operators import (
    c_operator,
    divergence,
    grad_h,
    hessian_deficit,
    p_form,
    p_functional,
    reeb_derivative,
    sub_laplacian,
    third_contractions,
)
from .suites import SUITE_NAMES, run_suite

__version__ = "0.1.0"
