"""Numerical laboratory for ground states of generalized spin-boson models.

Builds truncated Fock-space Hamiltonians H = A x 1 + 1 x dGamma(omega)
+ alpha * sum_j B_j x phi(lambda_j) over discretized radial mode grids,
solves for ground states, and verifies the operator identities that govern
their infrared behaviour: the pull-through formula, number and factorial
moment identities, and lower bounds that witness the absence of a ground
state when the coupling is infrared singular.
"""

from .modes import (
    CouplingFamily,
    L2Criteria,
    ModeSet,
    build_radial_grid,
    eval_coupling,
    ir_class_of,
    l2_criteria,
)
from .fock import (
    BasisSizeError,
    FockBasis,
    KronSumOp,
    LinOp,
    StateVector,
    annihilator,
    creator,
    dgamma,
    enumerate_basis,
    field_operator,
    fock_embed,
    matter_embed,
    number_operator,
    smeared_annihilator,
    tensor,
    write_matrix_market,
)
from .model import (
    GroundState,
    GsbModel,
    VanHoveValues,
    assemble,
    coupling_budget,
    preset_spin_boson,
    preset_van_hove,
    t_operator,
    van_hove_oracle,
)
from .spectral import (
    NonConverged,
    NonPositiveShift,
    SolverConfig,
    batched_resolvent,
    ground_state,
    resolvent_apply,
    solve_model,
)
from .regularity import (
    IrSweepRow,
    RegularityReport,
    SweepTemplate,
    SweepVerdict,
    absence_lower_bound,
    ccr_and_bound_suite,
    factorial_moment_decomposition,
    higher_moment_identity,
    ir_sweep,
    moment_identity,
    number_decomposition,
    pullthrough_check,
    resolvent_tol,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSizeError",
    "CouplingFamily",
    "FockBasis",
    "GroundState",
    "GsbModel",
    "IrSweepRow",
    "KronSumOp",
    "L2Criteria",
    "LinOp",
    "ModeSet",
    "NonConverged",
    "NonPositiveShift",
    "RegularityReport",
    "SolverConfig",
    "StateVector",
    "SweepTemplate",
    "SweepVerdict",
    "VanHoveValues",
    "absence_lower_bound",
    "annihilator",
    "assemble",
    "batched_resolvent",
    "build_radial_grid",
    "ccr_and_bound_suite",
    "coupling_budget",
    "creator",
    "dgamma",
    "enumerate_basis",
    "eval_coupling",
    "factorial_moment_decomposition",
    "field_operator",
    "fock_embed",
    "ground_state",
    "higher_moment_identity",
    "ir_class_of",
    "ir_sweep",
    "l2_criteria",
    "matter_embed",
    "moment_identity",
    "number_decomposition",
    "number_operator",
    "preset_spin_boson",
    "preset_van_hove",
    "pullthrough_check",
    "resolvent_apply",
    "resolvent_tol",
    "smeared_annihilator",
    "solve_model",
    "t_operator",
    "tensor",
    "van_hove_oracle",
    "write_matrix_market",
]
