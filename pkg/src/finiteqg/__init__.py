"""Certified numerics for finite quantum groups and their actions."""

from .multimatrix import (
    AbstractStarAlgebra,
    MultiMatrixAlgebra,
    Presentation,
    SubAlgebra,
    TensorAlgebra,
    generated_subalgebra,
    present_algebra,
    present_subalgebra,
    tensor_algebra,
    verify_conditional_expectation,
)
from .quantumgroup import (
    BudgetExceeded,
    FiniteQuantumGroup,
    biduality,
    build_quantum_group,
)
from .presets import function_algebra, group_algebra, list_presets, preset
from .actions import (
    Action,
    CrossedProduct,
    crossed_product,
    dual_translation_action,
    fixed_point_algebra,
    implementing_unitary,
    invariant_states,
    load_action,
    self_action,
    trivial_action,
)
from .braided import (
    BraidedCrossedIso,
    BraidedProduct,
    YetterDrinfeldAlgebra,
    braided_crossed_iso,
    braided_tensor_product,
    braided_trivialization,
    canonical_yd,
    triple_product_match,
)
from .amenability import (
    AmenabilityCertificate,
    ConditionalExpectation,
    amenable_from_mean,
    amenable_from_pair,
    auto_equivariance,
    dual_average_expectation,
    extended_comul_commutation,
    feasible_expectation,
    general_amenable_from_expectation,
    general_equivariant_expectation,
    kac_amenable_from_expectation,
    kac_crossed_expectation,
    kac_extract,
    kac_lift,
    mean_from_amenable,
    pair_expectation_up,
    self_action_expectation,
    verify_amenable,
)

__all__ = [
    "AbstractStarAlgebra",
    "Action",
    "AmenabilityCertificate",
    "BraidedCrossedIso",
    "BraidedProduct",
    "BudgetExceeded",
    "ConditionalExpectation",
    "CrossedProduct",
    "FiniteQuantumGroup",
    "MultiMatrixAlgebra",
    "Presentation",
    "SubAlgebra",
    "TensorAlgebra",
    "YetterDrinfeldAlgebra",
    "amenable_from_mean",
    "amenable_from_pair",
    "auto_equivariance",
    "biduality",
    "braided_crossed_iso",
    "braided_tensor_product",
    "braided_trivialization",
    "build_quantum_group",
    "canonical_yd",
    "crossed_product",
    "dual_average_expectation",
    "dual_translation_action",
    "extended_comul_commutation",
    "feasible_expectation",
    "fixed_point_algebra",
    "function_algebra",
    "general_amenable_from_expectation",
    "general_equivariant_expectation",
    "generated_subalgebra",
    "group_algebra",
    "implementing_unitary",
    "invariant_states",
    "kac_amenable_from_expectation",
    "kac_crossed_expectation",
    "kac_extract",
    "kac_lift",
    "list_presets",
    "load_action",
    "mean_from_amenable",
    "pair_expectation_up",
    "present_algebra",
    "present_subalgebra",
    "preset",
    "self_action",
    "self_action_expectation",
    "tensor_algebra",
    "triple_product_match",
    "trivial_action",
    "verify_amenable",
    "verify_conditional_expectation",
]
