"""Overlap structure of an ensemble as seen by a single party.

Two states are relative at a party when that party's vectors have a nonzero
inner product (within tolerance).  The resulting graph, its connected
components, and chains of consecutively relative, linearly independent
vectors are the raw material for both the decision procedure and the
sufficient indistinguishability criterion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, NumericalInstabilityError
from .ensemble import Ensemble, ensure_complete
from .linalg import DEFAULT_TOL, LocalVector, gram_schmidt, inner_product

__all__ = [
    "OverlapGraph",
    "Partition",
    "chain_criterion",
    "components",
    "overlap_graph",
    "relativity_chain",
]


@dataclass(frozen=True)
class OverlapGraph:
    """Relativity graph of a state subset at one party.

    Members keep the ensemble order; edges are unordered pairs stored with
    the earlier member first.
    """

    party: int
    members: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def neighbors(self, label: str) -> tuple[str, ...]:
        adjacent = {b for a, b in self.edges if a == label} | {
            a for a, b in self.edges if b == label
        }
        return tuple(m for m in self.members if m in adjacent)

    def blocks(self) -> tuple[tuple[str, ...], ...]:
        """Connected components, ordered by earliest member, members in order."""
        position = {m: i for i, m in enumerate(self.members)}
        parent = {m: m for m in self.members}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                # keep the earliest member as representative
                if position[ra] < position[rb]:
                    parent[rb] = ra
                else:
                    parent[ra] = rb
        grouped: dict[str, list[str]] = {}
        for m in self.members:
            grouped.setdefault(find(m), []).append(m)
        ordered = sorted(grouped.values(), key=lambda block: position[block[0]])
        return tuple(tuple(block) for block in ordered)


def overlap_graph(
    e: Ensemble, subset: Iterable[str], party: int, tol: float = DEFAULT_TOL
) -> OverlapGraph:
    """Build the relativity graph of ``subset`` at ``party``."""
    if not 0 <= party < e.parties:
        raise DimensionError(f"party {party} out of range for {e.parties} parties")
    wanted = set()
    for label in subset:
        e.index(label)  # raises NotFoundError for unknown labels
        wanted.add(label)
    members = tuple(label for label in e.labels if label in wanted)
    edges = set()
    for i in range(len(members)):
        vi = e.vector(members[i], party)
        for j in range(i + 1, len(members)):
            if abs(inner_product(vi, e.vector(members[j], party))) > tol:
                edges.add((members[i], members[j]))
    return OverlapGraph(party=party, members=members, edges=frozenset(edges))


@dataclass(frozen=True)
class Partition:
    """Connected components of an overlap graph with orthonormal block spans."""

    party: int
    blocks: tuple[tuple[str, ...], ...]
    spans: tuple[tuple[LocalVector, ...], ...]


def components(g: OverlapGraph, e: Ensemble, tol: float = DEFAULT_TOL) -> Partition:
    """Component partition of ``g`` with a span basis per block.

    Distinct blocks have no edges between them, so their spans must come out
    orthogonal; a cross-block overlap beyond 10 * tol means the tolerance no
    longer separates signal from noise and is reported as instability rather
    than silently absorbed.
    """
    blocks = g.blocks()
    spans = tuple(
        gram_schmidt((e.vector(label, g.party) for label in block), tol) for block in blocks
    )
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            for u in spans[i]:
                for w in spans[j]:
                    overlap = abs(inner_product(u, w))
                    if overlap > 10.0 * tol:
                        raise NumericalInstabilityError(
                            f"blocks {i} and {j} at party {g.party} have span overlap "
                            f"{overlap:.3e}, beyond 10*tol"
                        )
    return Partition(party=g.party, blocks=blocks, spans=spans)


def relativity_chain(
    e: Ensemble,
    party: int,
    start: str,
    length: int,
    tol: float = DEFAULT_TOL,
) -> tuple[str, ...] | None:
    """Find ``length + 1`` states chained by consecutive overlaps at ``party``.

    The chain starts at ``start``, every consecutive pair is relative, and
    the party vectors of the whole chain are linearly independent.  The
    search walks simple paths depth-first in member order and prunes any
    extension that fails to raise the rank, which is sound because a
    dependent prefix can never become independent again.  Returns the first
    chain found, or None.
    """
    if length < 0:
        raise DimensionError(f"chain length must be non-negative, got {length}")
    e.index(start)
    g = overlap_graph(e, e.labels, party, tol)
    neighbor_map = {m: g.neighbors(m) for m in g.members}

    orthobasis: list[np.ndarray] = []

    def residual(label: str) -> np.ndarray | None:
        w = e.vector(label, party).entries.astype(np.complex128)
        for _ in range(2):
            for b in orthobasis:
                w = w - np.vdot(b, w) * b
        n = float(np.linalg.norm(w))
        if n <= tol:
            return None
        return w / n

    path: list[str] = []
    visited: set[str] = set()

    def extend(label: str) -> tuple[str, ...] | None:
        r = residual(label)
        if r is None:
            return None
        path.append(label)
        visited.add(label)
        orthobasis.append(r)
        if len(path) == length + 1:
            return tuple(path)
        for nxt in neighbor_map[label]:
            if nxt in visited:
                continue
            found = extend(nxt)
            if found is not None:
                return found
        path.pop()
        visited.discard(label)
        orthobasis.pop()
        return None

    return extend(start)


def chain_criterion(e: Ensemble, tol: float = DEFAULT_TOL) -> bool:
    """Sufficient condition for LOCC indistinguishability of a complete basis.

    True iff at every party p, every state starts a relativity chain of
    d_p - 1 further states with linearly independent party vectors.  When
    this holds, no sequence of non-damaging local measurements can ever cut
    the ensemble apart.  False proves nothing by itself.

    A component-rank pre-filter handles the easy failures: a chain from a
    state lives inside that state's component, so a component whose span
    rank falls short of d_p rules the chain out without searching.
    """
    ensure_complete(e, tol)
    for party, d in enumerate(e.dims):
        if d == 1:
            continue
        g = overlap_graph(e, e.labels, party, tol)
        part = components(g, e, tol)
        span_rank: dict[str, int] = {}
        for block, span in zip(part.blocks, part.spans):
            for label in block:
                span_rank[label] = len(span)
        for label in e.labels:
            if span_rank[label] < d:
                return False
        for label in e.labels:
            if relativity_chain(e, party, label, d - 1, tol) is None:
                return False
    return True
