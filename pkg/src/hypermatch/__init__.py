"""Online hypergraph matching: algorithms, adversaries, oracles, certificates."""

from hypermatch.core import (
    EPS_FEAS,
    HyperEdge,
    Instance,
    VertexArrivalInstance,
    FractionalAllocation,
    IntegralMatching,
    Violation,
    validate_instance,
    pad_to_uniform,
    fill_levels,
    reduce_vertex_to_edge_arrival,
    lift_edge_decisions,
    parse_instance,
    serialize_instance,
    parse_vertex_instance,
    serialize_vertex_instance,
)
from hypermatch.algorithms import (
    Decision,
    Transcript,
    GreedyMatcher,
    WaterFiller,
    WeightedWaterFiller,
    make_algorithm,
    run_online,
)
from hypermatch.certificates import (
    DualCertificate,
    CertificateReport,
    certified_ratio,
    build_certificate,
    verify_certificate,
)
from hypermatch.adversaries import (
    ColoredInstance,
    StaircaseRun,
    gen_gk,
    gen_hk,
    gen_random,
    gen_random_vertex_arrival,
    verify_redblue,
    expected_value_estimate,
    run_staircase,
)
from hypermatch.oracles import (
    LpSolution,
    opt_integral,
    opt_fractional,
    disjoint_lower_bound,
)

__version__ = "0.1.0"
