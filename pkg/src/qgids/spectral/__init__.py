from .counting import (
    CountingFunction,
    NearSingularShift,
    NumericalFailure,
    ShiftFunction,
    StepFunction,
    count_leq,
    counting_function,
    dirichlet_count,
    dirichlet_count_Q,
    dirichlet_count_discrete,
    dirichlet_counting_function,
    discrete_dirichlet_eigenvalues,
    merged_breakpoints,
    pencil_eigenvalues,
    shift_bound_check,
    spectral_shift,
    sup_distance,
)
from .ergodic import ErgodicReport, PatternExplosion, ergodic_reconstruction, shift_at
from .ids import (
    BudgetExceeded,
    IDSEstimate,
    PasturShubinEstimate,
    discretization_error,
    ids_approx,
    jump_detect,
    pastur_shubin,
)
