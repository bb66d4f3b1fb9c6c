"""Distinguishability of orthogonal product states under local measurements.

The package decides whether a set of mutually orthogonal product states
across several parties can be perfectly told apart using local measurements
and classical communication, produces an explicit measurement protocol or a
stuck certificate backing the verdict, and simulates arbitrary local
instrument trees to verify discrimination claims numerically.
"""

from __future__ import annotations

from .distinguish import (
    MeasurementStep,
    ProtocolLeaf,
    ProtocolNode,
    ProtocolTree,
    StepOutcome,
    StuckCertificate,
    TraceLeaf,
    TraceSplit,
    TraceStuck,
    Verdict,
    decide,
    emit_protocol,
    finest_step,
    parse_protocol,
    stuck_certificate,
    verdict_to_json,
)
from .ensemble import (
    CATALOG_NAMES,
    Ensemble,
    ProductState,
    ValidationReport,
    apply_local_unitaries,
    catalog,
    emit_ensemble,
    ensure_complete,
    ensure_orthogonal,
    parse_ensemble,
    product_overlap,
    random_product_basis,
    random_unitary,
    validate,
)
from .errors import (
    BasisError,
    DimensionError,
    InstrumentError,
    InvalidModeError,
    LoccError,
    NotFoundError,
    NumericalInstabilityError,
    ParseError,
    SchemaError,
    TooLargeError,
    UnitarityError,
    ZeroVectorError,
)
from .linalg import (
    DEFAULT_TOL,
    LocalVector,
    SVDResult,
    basis_vector,
    gram_schmidt,
    inner_product,
    is_orthogonal,
    normalize,
    phase_normalize,
    project_onto,
    rank,
    svd_decompose,
)
from .oracle import PartitionFamily, enumerate_valid_partitions, exhaustive_decide
from .relativity import (
    OverlapGraph,
    Partition,
    chain_criterion,
    components,
    overlap_graph,
    relativity_chain,
)
from .simulate import (
    BUILTIN_PROTOCOL_NAMES,
    CanonicalOperator,
    DiscriminationReport,
    Instrument,
    LocalOperator,
    SimLeaf,
    SimNode,
    SimTree,
    apply_operator,
    builtin_protocol,
    canonicalize_operator,
    completeness_defect,
    extend_with_projective,
    lift_protocol,
    run_protocol,
    validate_instrument,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROTOCOL_NAMES",
    "BasisError",
    "CATALOG_NAMES",
    "CanonicalOperator",
    "DEFAULT_TOL",
    "DimensionError",
    "DiscriminationReport",
    "Ensemble",
    "Instrument",
    "InstrumentError",
    "InvalidModeError",
    "LoccError",
    "LocalOperator",
    "LocalVector",
    "MeasurementStep",
    "NotFoundError",
    "NumericalInstabilityError",
    "OverlapGraph",
    "ParseError",
    "Partition",
    "PartitionFamily",
    "ProductState",
    "ProtocolLeaf",
    "ProtocolNode",
    "ProtocolTree",
    "SVDResult",
    "SchemaError",
    "SimLeaf",
    "SimNode",
    "SimTree",
    "StepOutcome",
    "StuckCertificate",
    "TooLargeError",
    "TraceLeaf",
    "TraceSplit",
    "TraceStuck",
    "UnitarityError",
    "ValidationReport",
    "Verdict",
    "ZeroVectorError",
    "apply_local_unitaries",
    "apply_operator",
    "basis_vector",
    "builtin_protocol",
    "canonicalize_operator",
    "catalog",
    "chain_criterion",
    "completeness_defect",
    "components",
    "decide",
    "emit_ensemble",
    "emit_protocol",
    "ensure_complete",
    "ensure_orthogonal",
    "enumerate_valid_partitions",
    "exhaustive_decide",
    "extend_with_projective",
    "finest_step",
    "gram_schmidt",
    "inner_product",
    "is_orthogonal",
    "lift_protocol",
    "normalize",
    "overlap_graph",
    "parse_ensemble",
    "parse_protocol",
    "phase_normalize",
    "product_overlap",
    "project_onto",
    "random_product_basis",
    "random_unitary",
    "rank",
    "relativity_chain",
    "run_protocol",
    "stuck_certificate",
    "svd_decompose",
    "validate",
    "validate_instrument",
    "verdict_to_json",
]
