"""Homotopy transfer of master-equation solutions on finite-dimensional
odd-symplectic complexes, with exact rational arithmetic throughout.
"""

from .bv import (
    Action,
    BVContext,
    bracket,
    delta_bracket_check,
    laplacian,
    leibniz_check,
    qme_residual,
    qme_residual_of_series,
    seven_term_check,
    twisted_differential,
)
from .errors import DivergenceError, InternalError, PreconditionError, StructuralError
from .graded import (
    GradedBasis,
    GradedMap,
    HodgeSplit,
    OddSymplecticForm,
    contracting_homotopy,
    hodge_decompose,
    validate_dg_symplectic,
)
from .hpl import (
    Perturbation,
    RetractData,
    big_context,
    build_function_sdr,
    from_adapted,
    neumann,
    perturb,
    sfree_of,
    small_context,
    to_adapted,
    verify_sdr,
)
from .qlinf import (
    LambdaOps,
    action_to_lambda,
    equivalence_check,
    evaluate_symmetric,
    lambda_to_action,
    main_identity_residual,
)
from .report import CheckResult, ValidationReport
from .series import (
    FormalSeries,
    WeightWindow,
    derive_left,
    derive_right,
    exp_series,
    genus_shift,
    invert_series,
    log_series,
    multiply,
    normal_order,
    substitute,
)
from .transfer import (
    HomotopyWitness,
    PropagatorOperator,
    TransferResult,
    effective_action_alt,
    effective_action_feynman,
    effective_action_hpl,
    homotopy_witness,
    morphism_check_projection,
    path_integral_z,
    transferred_differential,
    twist_action,
)

__all__ = [name for name in dir() if not name.startswith("_")]
