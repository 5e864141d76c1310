"""Finite models of l_p / c0 spaces: disjoint-support partitions, dense-image
operators and bounded operators with a prescribed kernel, all certified
against exact rational oracles."""
from .biorthogonal import BiorthogonalSystem, certify, coordinate_system, incidence_count, markushevich
from .operator_builder import (
    InexactError,
    InjectionMap,
    LinearOperator,
    LpSumDecomposition,
    RootScale,
    adjoint,
    allocate_theta,
    dense_image_operator,
    isometry_check,
    kernel_operator_via_duality,
    kernel_operator_via_quotient,
    lp_sum_decomposition,
    operator_norm_bound_check,
)
from .sparse_space import (
    FLOAT,
    ORACLE,
    Kind,
    SpaceDescriptor,
    SparseVector,
    VectorFamily,
    annihilator,
    dual_norm,
    family_from_rows,
    norm,
    norm_power,
    pairing,
    pre_annihilator,
    unit_vector,
)
from .support_graph import (
    ComponentDecomposition,
    DisjointPartition,
    IncidenceIndex,
    ZeroMemberError,
    build_incidence,
    components_equivrel,
    components_graph,
    disjoint_partition,
    partition_family,
    partition_violations,
)
from .verification import (
    SubspaceBasis,
    certify_kernel,
    check_dense_image,
    check_duality_chain,
    check_lemma25_roundtrip,
    check_spanning_roundtrip,
    image,
    kernel_basis,
    rank,
    row_space,
    span,
    subspace_equal,
)

__version__ = "0.1.0"
