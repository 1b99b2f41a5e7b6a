"""Quantum query-model simulator and verification lab.

Exact ordered search over pebbled binary trees at roughly log3(N)
queries, together with the weighted-adversary machinery that lower
bounds ordered searching, sorting, and element distinctness.
"""

from .adversary import (
    BoundReport,
    ProgressTrace,
    SpectralMatrix,
    WeightScheme,
    b_matrix,
    comparison_progress_trace,
    eps_prime,
    harmonic,
    harmonic_float,
    hilbert_entry,
    hilbert_matrix,
    progress_W,
    search_progress_trace,
    spectral_norm,
    step_delta_bound,
    theorem_bound,
    total_weight,
    weight_ed,
    weight_search,
    weight_sort,
)
from .oracles import (
    AnnotatedPermutation,
    ComparisonMatrix,
    OrderedOracle,
    Permutation,
    all_inputs,
    annotate,
    comparison_matrix,
    comparison_oracle_apply,
    diff_entries,
    f_of,
    from_target,
    phase_oracle_apply,
    sigma_kd,
)
from .pebbles import (
    CoveringParams,
    FullBinaryTree,
    PebbledTree,
    brute_force_min_pebbles,
    build_tree,
    construct_covering,
    covering_params,
    locate_vc,
    path_to_leaf,
    validate_covering,
    vertex_set,
)
from .search import (
    SearchOutcome,
    SearchPlan,
    build_plan,
    f_tilde,
    implemented_queries,
    oracle_prime_apply,
    path_superposition,
    phi_state,
    recursion_size,
    run_search,
    subinstance_oracle,
    u1_apply,
    u1_inverse_apply,
    u2_apply,
)
from .states import (
    BasisLabel,
    LinearOp,
    MeasurementResult,
    PureState,
    apply_op,
    inner_product,
    make_basis_state,
    measure_register,
    project_comparison_pair,
    project_query_index,
)

__version__ = "0.1.0"
