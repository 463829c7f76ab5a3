"""Averages of convex functions over simplices and face-based upper bounds on them."""

from .bounds import (
    BoundReport,
    all_faces_barycenter_bound,
    barycenter_face_bound,
    barycenter_vertex_bound,
    check_lemma,
    check_refinement_monotonicity,
    divisor_bound,
    full_report,
    hh_classic,
    lemma_combine,
    mixed_group_bound,
    mixed_weights,
    partition_functional,
    regular_simplex_integral_bound,
    vertex_face_bound,
)
from .functions import (
    Affine,
    ExpAffine,
    LogSumExp,
    MaxAffine,
    NormPower,
    Polynomial,
    convexity_sample_check,
    function_from_dict,
)
from .integrate import (
    AvgResult,
    Method,
    avg,
    avg_monte_carlo,
    avg_polynomial_exact,
    avg_quadrature,
    jacobian_identity_check,
    monomial_integral_standard,
)
from .partitions import (
    Partition,
    enumerate_partitions,
    equal_block_partitions,
    group_splits,
    refines,
    sample_partitions,
    singleton_partition,
    trivial_partition,
)
from .simplex import (
    Simplex,
    barycenter,
    face,
    make_simplex,
    phi_map,
    regular_simplex,
    standard_simplex,
    volume,
)

__version__ = "0.1.0"
