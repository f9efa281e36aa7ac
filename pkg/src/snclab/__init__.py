"""Symmetric network-coding channel lab.

Library plus CLI for the SNC(lambda, omega) channel model, the lifted
sparse-graph code ensemble with affine-subspace message passing, and both
density-evolution layers, all over prime fields with exact arithmetic.
"""

from .channel import (
    ChannelOutput,
    SncParams,
    achievable_k,
    asymptotic_noise_entropy,
    brute_force_rank_count,
    capacity,
    exact_rank_count,
    singleton_bound,
    transmit,
    validate_params,
)
from .decoder import (
    DecoderConfig,
    DecodeResult,
    decode,
    recover_noise_space,
    symbol_error_rate,
)
from .degrees import (
    EdgeDegreeDistribution,
    NodeDegreeDistribution,
    TruncatedRhoStar,
    design_rate,
    edge_to_node,
    integral_rho,
    node_to_edge,
    rho_star,
)
from .ensemble import (
    LiftedCode,
    TannerGraph,
    build_code,
    check_satisfied,
    encode,
    exact_rate,
    lift,
    load_code,
    realize_degree_sequence,
    sample_tanner_graph,
    save_code,
)
from .linalg import (
    AffineSubspace,
    FieldSpec,
    Subspace,
    affine_image,
    affine_intersection,
    affine_sum,
    gaussian_binomial,
    random_invertible,
    random_rank_matrix,
    row_space,
    rref,
    solve,
    subspace_intersection,
    subspace_sum,
)

__version__ = "0.1.0"
