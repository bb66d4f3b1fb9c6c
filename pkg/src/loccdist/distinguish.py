"""Decide distinguishability by non-damaging local projective measurements.

The procedure repeatedly looks for a party whose overlap graph on the
current subset is disconnected.  Measuring the projectors onto the component
spans leaves every state intact, announces which block the state sits in,
and recurses.  For a complete orthogonal product basis this greedy use of
the finest available split is exact: if some subset gets stuck with every
party's graph connected, no local protocol whatsoever can tell the states
apart, and the stuck subset is the certificate.  For incomplete ensembles a
stuck subset merely exhausts projective measurements, so the verdict
degrades to unknown.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ensemble import Ensemble, ensure_complete, ensure_orthogonal
from .errors import InvalidModeError, SchemaError
from .jsonio import canonical_dumps, parse_json
from .linalg import DEFAULT_TOL, LocalVector, normalize
from .relativity import OverlapGraph, components, overlap_graph

__all__ = [
    "MeasurementStep",
    "ProtocolLeaf",
    "ProtocolNode",
    "ProtocolTree",
    "StepOutcome",
    "StuckCertificate",
    "TraceLeaf",
    "TraceSplit",
    "TraceStuck",
    "Verdict",
    "decide",
    "emit_protocol",
    "finest_step",
    "parse_protocol",
    "stuck_certificate",
    "verdict_to_json",
]


@dataclass(frozen=True)
class StepOutcome:
    """One measurement outcome: the states it keeps and its projector basis."""

    block: tuple[str, ...]
    basis: tuple[LocalVector, ...]


@dataclass(frozen=True)
class MeasurementStep:
    """A projective measurement at one party, one outcome per block."""

    party: int
    outcomes: tuple[StepOutcome, ...]

    def __post_init__(self) -> None:
        if len(self.outcomes) < 2:
            raise SchemaError("a measurement step needs at least two outcomes")


@dataclass(frozen=True)
class ProtocolLeaf:
    """Terminal point of a protocol: exactly one state remains."""

    label: str


@dataclass(frozen=True)
class ProtocolNode:
    """Internal point of a protocol: a step and one subtree per outcome."""

    step: MeasurementStep
    children: tuple["ProtocolTree", ...]

    def __post_init__(self) -> None:
        if len(self.children) != len(self.step.outcomes):
            raise SchemaError(
                f"node has {len(self.children)} children for {len(self.step.outcomes)} outcomes"
            )


ProtocolTree = ProtocolLeaf | ProtocolNode


@dataclass(frozen=True)
class StuckCertificate:
    """A subset on which every party's overlap graph is connected.

    Carries the full per-party graphs so the claim can be audited without
    re-deriving anything.
    """

    subset: tuple[str, ...]
    graphs: tuple[OverlapGraph, ...]

    def __post_init__(self) -> None:
        for g in self.graphs:
            if len(g.blocks()) != 1:
                raise SchemaError(
                    f"certificate graph at party {g.party} is disconnected; not stuck"
                )


@dataclass(frozen=True)
class TraceLeaf:
    label: str


@dataclass(frozen=True)
class TraceStuck:
    certificate: StuckCertificate


@dataclass(frozen=True)
class TraceSplit:
    subset: tuple[str, ...]
    step: MeasurementStep
    children: tuple["TraceNode", ...]


TraceNode = TraceLeaf | TraceStuck | TraceSplit


@dataclass(frozen=True)
class Verdict:
    """Decision outcome plus whichever witness backs it up."""

    kind: str  # "distinguishable" | "indistinguishable" | "unknown"
    tree: ProtocolTree | None = None
    certificate: StuckCertificate | None = None
    trace: TraceNode | None = None

    @property
    def distinguishable(self) -> bool:
        return self.kind == "distinguishable"


def finest_step(
    e: Ensemble, subset: tuple[str, ...], tol: float = DEFAULT_TOL
) -> MeasurementStep | None:
    """First party (ascending) whose graph on ``subset`` is disconnected.

    Returns the component-partition measurement at that party, or None when
    every party's graph is connected.
    """
    for party in range(e.parties):
        g = overlap_graph(e, subset, party, tol)
        if len(g.blocks()) >= 2:
            part = components(g, e, tol)
            outcomes = tuple(
                StepOutcome(block=block, basis=span)
                for block, span in zip(part.blocks, part.spans)
            )
            return MeasurementStep(party=party, outcomes=outcomes)
    return None


def stuck_certificate(
    e: Ensemble, subset: tuple[str, ...], tol: float = DEFAULT_TOL
) -> StuckCertificate:
    """Certificate that ``subset`` admits no non-damaging split at any party."""
    graphs = tuple(overlap_graph(e, subset, party, tol) for party in range(e.parties))
    return StuckCertificate(subset=subset, graphs=graphs)


def _explore(e: Ensemble, subset: tuple[str, ...], tol: float) -> TraceNode:
    if len(subset) == 1:
        return TraceLeaf(subset[0])
    step = finest_step(e, subset, tol)
    if step is None:
        return TraceStuck(stuck_certificate(e, subset, tol))
    children = tuple(_explore(e, outcome.block, tol) for outcome in step.outcomes)
    return TraceSplit(subset=subset, step=step, children=children)


def _first_stuck(node: TraceNode) -> TraceStuck | None:
    if isinstance(node, TraceStuck):
        return node
    if isinstance(node, TraceSplit):
        for child in node.children:
            found = _first_stuck(child)
            if found is not None:
                return found
    return None


def _to_tree(node: TraceNode) -> ProtocolTree:
    if isinstance(node, TraceLeaf):
        return ProtocolLeaf(node.label)
    assert isinstance(node, TraceSplit)
    return ProtocolNode(step=node.step, children=tuple(_to_tree(c) for c in node.children))


def decide(e: Ensemble, mode: str, tol: float = DEFAULT_TOL) -> Verdict:
    """Run the greedy finest-split procedure on the whole ensemble.

    ``mode`` is "complete" or "incomplete".  Complete mode demands a
    validated complete basis and may return an indistinguishability verdict;
    incomplete mode demands pairwise orthogonality only and reports a stuck
    search as unknown.  The full exploration (every block, not just the
    first stuck one) is kept on the verdict as ``trace``.
    """
    if mode == "complete":
        ensure_complete(e, tol)
    elif mode == "incomplete":
        ensure_orthogonal(e, tol)
    else:
        raise InvalidModeError(f"mode must be 'complete' or 'incomplete', got {mode!r}")
    if not e.states:
        raise InvalidModeError("cannot decide an empty ensemble")
    trace = _explore(e, e.labels, tol)
    stuck = _first_stuck(trace)
    if stuck is None:
        return Verdict(kind="distinguishable", tree=_to_tree(trace), trace=trace)
    kind = "indistinguishable" if mode == "complete" else "unknown"
    return Verdict(kind=kind, certificate=stuck.certificate, trace=trace)


# ---------------------------------------------------------------------------
# serialization


def _vector_to_json(v: LocalVector) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in v.entries]


def _tree_to_json(t: ProtocolTree) -> dict:
    if isinstance(t, ProtocolLeaf):
        return {"leaf": t.label}
    return {
        "party": t.step.party,
        "outcomes": [
            {"block": list(o.block), "basis": [_vector_to_json(b) for b in o.basis]}
            for o in t.step.outcomes
        ],
        "children": [_tree_to_json(c) for c in t.children],
    }


def emit_protocol(t: ProtocolTree) -> str:
    """Serialize a protocol tree to canonical JSON."""
    return canonical_dumps(_tree_to_json(t))


def _vector_from_json(data: object, where: str) -> LocalVector:
    if not isinstance(data, list) or not data:
        raise SchemaError(f"{where}: vector must be a non-empty list of [re, im] pairs")
    entries = []
    for i, pair in enumerate(data):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(part, (int, float)) and not isinstance(part, bool) for part in pair)
        ):
            raise SchemaError(f"{where}: entry {i} must be a [re, im] pair")
        entries.append(complex(pair[0], pair[1]))
    return normalize(entries)


def _tree_from_json(data: object, where: str = "protocol") -> ProtocolTree:
    if not isinstance(data, dict):
        raise SchemaError(f"{where}: node must be a JSON object")
    if "leaf" in data:
        if not isinstance(data["leaf"], str):
            raise SchemaError(f"{where}: leaf label must be a string")
        return ProtocolLeaf(data["leaf"])
    for key in ("party", "outcomes", "children"):
        if key not in data:
            raise SchemaError(f"{where}: node is missing key {key!r}")
    party = data["party"]
    if not isinstance(party, int) or isinstance(party, bool) or party < 0:
        raise SchemaError(f"{where}: party must be a non-negative integer")
    raw_outcomes = data["outcomes"]
    raw_children = data["children"]
    if not isinstance(raw_outcomes, list) or not isinstance(raw_children, list):
        raise SchemaError(f"{where}: outcomes and children must be lists")
    if len(raw_outcomes) != len(raw_children):
        raise SchemaError(
            f"{where}: {len(raw_outcomes)} outcomes vs {len(raw_children)} children"
        )
    outcomes = []
    for i, raw in enumerate(raw_outcomes):
        if not isinstance(raw, dict) or "block" not in raw or "basis" not in raw:
            raise SchemaError(f"{where}: outcome {i} needs 'block' and 'basis'")
        block = raw["block"]
        if not isinstance(block, list) or not all(isinstance(l, str) for l in block):
            raise SchemaError(f"{where}: outcome {i} block must be a list of labels")
        basis = raw["basis"]
        if not isinstance(basis, list) or not basis:
            raise SchemaError(f"{where}: outcome {i} basis must be a non-empty list")
        vectors = tuple(
            _vector_from_json(vec, f"{where}: outcome {i} basis vector {j}")
            for j, vec in enumerate(basis)
        )
        outcomes.append(StepOutcome(block=tuple(block), basis=vectors))
    step = MeasurementStep(party=party, outcomes=tuple(outcomes))
    children = tuple(
        _tree_from_json(raw, f"{where}.children[{i}]") for i, raw in enumerate(raw_children)
    )
    return ProtocolNode(step=step, children=children)


def parse_protocol(text: str) -> ProtocolTree:
    """Parse the canonical protocol JSON back into a tree."""
    return _tree_from_json(parse_json(text))


def _graph_to_json(g: OverlapGraph) -> dict:
    position = {m: i for i, m in enumerate(g.members)}
    edges = sorted(g.edges, key=lambda pair: (position[pair[0]], position[pair[1]]))
    return {
        "party": g.party,
        "members": list(g.members),
        "edges": [[a, b] for a, b in edges],
    }


def _certificate_to_json(cert: StuckCertificate) -> dict:
    return {
        "subset": list(cert.subset),
        "graphs": [_graph_to_json(g) for g in cert.graphs],
    }


def verdict_to_json(v: Verdict) -> dict:
    """Verdict as a JSON-ready dict; protocol or certificate ride along."""
    doc: dict = {"verdict": v.kind}
    if v.tree is not None:
        doc["protocol"] = _tree_to_json(v.tree)
    if v.certificate is not None:
        doc["certificate"] = _certificate_to_json(v.certificate)
    return doc
