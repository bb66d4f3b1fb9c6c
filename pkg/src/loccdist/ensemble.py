"""Multipartite product-state ensembles: model, file format, catalog, generators.

An ensemble is an ordered, labeled collection of product states over fixed
local dimensions.  Everything else in the package consumes this model, so the
constructor enforces the structural invariants (matching dimensions, unique
labels, state count when the ensemble claims to be a complete basis) and the
parser normalizes every vector on the way in.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    InvalidModeError,
    NotFoundError,
    SchemaError,
    UnitarityError,
)
from .jsonio import canonical_dumps, parse_json
from .linalg import (
    DEFAULT_TOL,
    LocalVector,
    basis_vector,
    inner_product,
    normalize,
    phase_normalize,
    rank,
)

__all__ = [
    "CATALOG_NAMES",
    "Ensemble",
    "ProductState",
    "ValidationReport",
    "apply_local_unitaries",
    "catalog",
    "emit_ensemble",
    "ensure_complete",
    "ensure_orthogonal",
    "parse_ensemble",
    "product_overlap",
    "random_product_basis",
    "random_unitary",
    "validate",
]


@dataclass(frozen=True)
class ProductState:
    """One labeled product state, one unit vector per party."""

    label: str
    locals: tuple[LocalVector, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.label, str) or not self.label:
            raise SchemaError("state label must be a non-empty string")
        object.__setattr__(self, "locals", tuple(self.locals))
        if not self.locals:
            raise SchemaError(f"state {self.label!r} has no local vectors")


@dataclass(frozen=True)
class Ensemble:
    """Ordered collection of product states over fixed local dimensions."""

    name: str
    dims: tuple[int, ...]
    states: tuple[ProductState, ...]
    complete: bool

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise SchemaError(f"dims must be positive integers, got {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "states", tuple(self.states))
        seen: dict[str, int] = {}
        for i, s in enumerate(self.states):
            if s.label in seen:
                raise SchemaError(f"duplicate state label {s.label!r}")
            seen[s.label] = i
            if len(s.locals) != len(dims):
                raise SchemaError(
                    f"state {s.label!r} has {len(s.locals)} local vectors, expected {len(dims)}"
                )
            for p, v in enumerate(s.locals):
                if v.dim != dims[p]:
                    raise SchemaError(
                        f"state {s.label!r} party {p} has dim {v.dim}, expected {dims[p]}"
                    )
        if self.complete and len(self.states) != math.prod(dims):
            raise SchemaError(
                f"complete ensemble over dims {dims} needs {math.prod(dims)} states, "
                f"got {len(self.states)}"
            )
        object.__setattr__(self, "_index", seen)

    @property
    def parties(self) -> int:
        return len(self.dims)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.states)

    def index(self, label: str) -> int:
        try:
            return self._index[label]  # type: ignore[attr-defined]
        except KeyError:
            raise NotFoundError(f"no state labeled {label!r} in ensemble {self.name!r}") from None

    def state(self, label: str) -> ProductState:
        return self.states[self.index(label)]

    def vector(self, label: str, party: int) -> LocalVector:
        if not 0 <= party < self.parties:
            raise DimensionError(f"party {party} out of range for {self.parties} parties")
        return self.state(label).locals[party]


def product_overlap(a: ProductState, b: ProductState) -> complex:
    """Full inner product <a|b>, the product of the per-party inner products."""
    if len(a.locals) != len(b.locals):
        raise DimensionError("states have different party counts")
    out = 1.0 + 0.0j
    for u, v in zip(a.locals, b.locals):
        out *= inner_product(u, v)
    return out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the structural checks on an ensemble."""

    pairwise_orthogonal: bool
    complete_count: bool
    spans_full: tuple[bool, ...]
    offending_pairs: tuple[tuple[str, str, float], ...]
    claimed_complete: bool

    @property
    def passed(self) -> bool:
        """Orthogonality holds and, if completeness was claimed, the count matches."""
        return self.pairwise_orthogonal and (self.complete_count or not self.claimed_complete)


def validate(e: Ensemble, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check pairwise orthogonality, state count, and per-party spans."""
    offending: list[tuple[str, str, float]] = []
    for i in range(len(e.states)):
        for j in range(i + 1, len(e.states)):
            mag = abs(product_overlap(e.states[i], e.states[j]))
            if mag > tol:
                offending.append((e.states[i].label, e.states[j].label, mag))
    spans = tuple(
        rank((s.locals[p] for s in e.states), tol) == e.dims[p] for p in range(e.parties)
    )
    return ValidationReport(
        pairwise_orthogonal=not offending,
        complete_count=len(e.states) == math.prod(e.dims),
        spans_full=spans,
        offending_pairs=tuple(offending),
        claimed_complete=e.complete,
    )


def ensure_orthogonal(e: Ensemble, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Require pairwise orthogonality, as incomplete-mode analysis does."""
    report = validate(e, tol)
    if not report.pairwise_orthogonal:
        worst = max(report.offending_pairs, key=lambda t: t[2])
        raise InvalidModeError(
            f"ensemble {e.name!r} is not pairwise orthogonal: "
            f"|<{worst[0]}|{worst[1]}>| = {worst[2]:.3e}"
        )
    return report


def ensure_complete(e: Ensemble, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Require a validated complete orthogonal product basis."""
    report = ensure_orthogonal(e, tol)
    if not e.complete:
        raise InvalidModeError(f"ensemble {e.name!r} is not flagged complete")
    if not report.complete_count:
        raise InvalidModeError(
            f"ensemble {e.name!r} has {len(e.states)} states but dims {e.dims} "
            f"require {math.prod(e.dims)}"
        )
    return report


# ---------------------------------------------------------------------------
# file format


def parse_ensemble(text: str, tol: float = DEFAULT_TOL) -> Ensemble:
    """Parse the ensemble JSON format, normalizing every vector on load."""
    data = parse_json(text)
    if not isinstance(data, dict):
        raise SchemaError("ensemble must be a JSON object")
    for key in ("name", "dims", "complete", "states"):
        if key not in data:
            raise SchemaError(f"ensemble is missing key {key!r}")
    name = data["name"]
    if not isinstance(name, str):
        raise SchemaError("ensemble name must be a string")
    dims = data["dims"]
    if (
        not isinstance(dims, list)
        or not dims
        or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims)
    ):
        raise SchemaError("dims must be a non-empty list of positive integers")
    if not isinstance(data["complete"], bool):
        raise SchemaError("complete must be a boolean")
    raw_states = data["states"]
    if not isinstance(raw_states, list):
        raise SchemaError("states must be a list")
    states = []
    for k, raw in enumerate(raw_states):
        if not isinstance(raw, dict) or "label" not in raw or "vectors" not in raw:
            raise SchemaError(f"state {k} must be an object with 'label' and 'vectors'")
        label = raw["label"]
        if not isinstance(label, str):
            raise SchemaError(f"state {k} label must be a string")
        vectors = raw["vectors"]
        if not isinstance(vectors, list) or len(vectors) != len(dims):
            raise SchemaError(f"state {label!r} needs one vector per party ({len(dims)})")
        locals_ = []
        for p, vec in enumerate(vectors):
            if not isinstance(vec, list) or len(vec) != dims[p]:
                raise SchemaError(
                    f"state {label!r} party {p} needs {dims[p]} entries"
                )
            entries = np.empty(dims[p], dtype=np.complex128)
            for i, pair in enumerate(vec):
                if (
                    not isinstance(pair, list)
                    or len(pair) != 2
                    or not all(
                        isinstance(part, (int, float)) and not isinstance(part, bool)
                        for part in pair
                    )
                ):
                    raise SchemaError(
                        f"state {label!r} party {p} entry {i} must be a [re, im] pair"
                    )
                entries[i] = complex(pair[0], pair[1])
            if not np.isfinite(entries).all():
                raise SchemaError(f"state {label!r} party {p} has non-finite entries")
            locals_.append(normalize(entries, tol))
        states.append(ProductState(label, tuple(locals_)))
    return Ensemble(name=name, dims=tuple(dims), states=tuple(states), complete=data["complete"])


def emit_ensemble(e: Ensemble, tol: float = DEFAULT_TOL) -> str:
    """Serialize to canonical JSON: phase-normalized vectors, 17 digit floats."""
    states = []
    for s in e.states:
        vectors = []
        for v in s.locals:
            w = phase_normalize(v, tol)
            vectors.append([[float(z.real), float(z.imag)] for z in w.entries])
        states.append({"label": s.label, "vectors": vectors})
    doc = {
        "name": e.name,
        "dims": list(e.dims),
        "complete": e.complete,
        "states": states,
    }
    return canonical_dumps(doc)


# ---------------------------------------------------------------------------
# catalog


def _plus_minus(dim: int, i: int, j: int, sign: int) -> LocalVector:
    e = np.zeros(dim, dtype=np.complex128)
    e[i] = 1.0
    e[j] = float(sign)
    return normalize(e)


def _bennett9_parts() -> list[tuple[LocalVector, LocalVector]]:
    # Two-qutrit tile construction: one corner state plus four +/- pairs
    # wrapped around it.
    k = lambda i: basis_vector(3, i)
    pm = lambda i, j, s: _plus_minus(3, i, j, s)
    return [
        (k(0), k(0)),
        (k(2), pm(2, 0, +1)),
        (k(2), pm(2, 0, -1)),
        (k(1), pm(0, 1, +1)),
        (k(1), pm(0, 1, -1)),
        (pm(2, 0, +1), k(1)),
        (pm(2, 0, -1), k(1)),
        (pm(0, 1, +1), k(2)),
        (pm(0, 1, -1), k(2)),
    ]


def _grid16_parts() -> list[tuple[LocalVector, LocalVector]]:
    # Two-ququart analogue of the tile construction.
    k = lambda i: basis_vector(4, i)
    pm = lambda i, j, s: _plus_minus(4, i, j, s)
    return [
        (k(0), pm(0, 1, +1)),
        (k(0), pm(0, 1, -1)),
        (k(1), pm(1, 2, +1)),
        (k(1), pm(1, 2, -1)),
        (k(2), pm(2, 3, +1)),
        (k(2), pm(2, 3, -1)),
        (k(3), pm(0, 3, +1)),
        (k(3), pm(0, 3, -1)),
        (pm(0, 1, +1), k(3)),
        (pm(0, 1, -1), k(3)),
        (pm(2, 3, +1), k(1)),
        (pm(2, 3, -1), k(1)),
        (pm(1, 2, +1), k(0)),
        (pm(1, 2, -1), k(0)),
        (pm(0, 3, +1), k(2)),
        (pm(0, 3, -1), k(2)),
    ]


def _bennett9() -> Ensemble:
    states = tuple(
        ProductState(f"psi{i + 1}", (a, b)) for i, (a, b) in enumerate(_bennett9_parts())
    )
    return Ensemble("bennett9", (3, 3), states, complete=True)


def _grid16() -> Ensemble:
    states = tuple(
        ProductState(f"psi{i + 1}", (a, b)) for i, (a, b) in enumerate(_grid16_parts())
    )
    return Ensemble("grid16", (4, 4), states, complete=True)


def _cube64() -> Ensemble:
    ab = _grid16_parts()
    states = []
    for c in range(4):
        for i, (a, b) in enumerate(ab):
            states.append(ProductState(f"psi{c * 16 + i + 1}", (a, b, basis_vector(4, c))))
    return Ensemble("cube64", (4, 4, 4), states=tuple(states), complete=True)


def _finkelstein9() -> Ensemble:
    ab = _bennett9_parts()
    third = [
        basis_vector(2, 0),
        normalize(np.array([1.0, math.sqrt(3.0)]) / 2.0),
        normalize(np.array([1.0, -math.sqrt(3.0)]) / 2.0),
    ]
    states = tuple(
        ProductState(f"psi{i + 1}", (a, b, third[i // 3])) for i, (a, b) in enumerate(ab)
    )
    return Ensemble("finkelstein9", (3, 3, 2), states, complete=False)


def _comp2x2() -> Ensemble:
    states = tuple(
        ProductState(f"s{i}{j}", (basis_vector(2, i), basis_vector(2, j)))
        for i in range(2)
        for j in range(2)
    )
    return Ensemble("comp2x2", (2, 2), states, complete=True)


_CATALOG = {
    "bennett9": _bennett9,
    "grid16": _grid16,
    "cube64": _cube64,
    "finkelstein9": _finkelstein9,
    "comp2x2": _comp2x2,
}

CATALOG_NAMES: tuple[str, ...] = tuple(_CATALOG)


def catalog(name: str) -> Ensemble:
    """Return a built-in ensemble by name; see CATALOG_NAMES."""
    try:
        builder = _CATALOG[name]
    except KeyError:
        known = ", ".join(CATALOG_NAMES)
        raise NotFoundError(f"unknown catalog name {name!r} (known: {known})") from None
    return builder()


# ---------------------------------------------------------------------------
# transforms and generators


def apply_local_unitaries(
    e: Ensemble, us: list[np.ndarray] | tuple[np.ndarray, ...], tol: float = DEFAULT_TOL
) -> Ensemble:
    """Rotate every state by one unitary per party; overlaps are unchanged."""
    if len(us) != e.parties:
        raise DimensionError(f"need {e.parties} unitaries, got {len(us)}")
    mats = []
    for p, u in enumerate(us):
        m = np.asarray(u, dtype=np.complex128)
        if m.shape != (e.dims[p], e.dims[p]):
            raise DimensionError(
                f"party {p} unitary has shape {m.shape}, expected {(e.dims[p], e.dims[p])}"
            )
        dev = float(np.max(np.abs(m.conj().T @ m - np.eye(e.dims[p]))))
        if dev > tol:
            raise UnitarityError(f"party {p} matrix deviates from unitarity by {dev:.3e}")
        mats.append(m)
    states = tuple(
        ProductState(
            s.label,
            tuple(normalize(mats[p] @ s.locals[p].entries, tol) for p in range(e.parties)),
        )
        for s in e.states
    )
    return Ensemble(e.name, e.dims, states, e.complete)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    if dim < 1:
        raise DimensionError(f"dimension must be positive, got {dim}")
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _product_states(bases: tuple[tuple[LocalVector, ...], ...]) -> list[tuple[LocalVector, ...]]:
    out = []
    for combo in itertools.product(*[range(len(b)) for b in bases]):
        out.append(tuple(bases[p][i] for p, i in enumerate(combo)))
    return out


def _rotate_basis(basis: tuple[LocalVector, ...], rng: np.random.Generator) -> tuple[LocalVector, ...]:
    cols = np.column_stack([v.entries for v in basis])
    mixed = cols @ random_unitary(len(basis), rng)
    return tuple(normalize(mixed[:, j]) for j in range(len(basis)))


def _split_basis(
    bases: tuple[tuple[LocalVector, ...], ...], rng: np.random.Generator, depth: int
) -> list[tuple[LocalVector, ...]]:
    splittable = [p for p, b in enumerate(bases) if len(b) >= 2]
    if depth <= 0 or not splittable:
        return _product_states(bases)
    p = splittable[int(rng.integers(len(splittable)))]
    k = len(bases[p])
    mask = int(rng.integers(1, 2**k - 1))
    groups = (
        tuple(bases[p][i] for i in range(k) if (mask >> i) & 1),
        tuple(bases[p][i] for i in range(k) if not (mask >> i) & 1),
    )
    states: list[tuple[LocalVector, ...]] = []
    for group in groups:
        sub = list(bases)
        sub[p] = _rotate_basis(group, rng)
        for q in range(len(bases)):
            if q != p:
                sub[q] = _rotate_basis(bases[q], rng)
        states.extend(_split_basis(tuple(sub), rng, depth - 1))
    return states


def random_product_basis(dims: tuple[int, ...], seed: int, depth: int = 3) -> Ensemble:
    """Seeded complete orthogonal product basis with recursive block structure.

    Starting from the computational basis, ``depth`` rounds of splitting pick
    a party, cut its current block into two orthogonal sub-blocks mixed by
    independent random unitaries, and give each side fresh random rotations
    on the other parties.  Orthogonality across sides is carried by the
    chosen party alone, so the result is always a valid complete basis.
    Depth 0 reproduces the computational product basis exactly.
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise SchemaError(f"dims must be positive integers, got {dims!r}")
    rng = np.random.default_rng(seed)
    bases = tuple(tuple(basis_vector(d, i) for i in range(d)) for d in dims)
    combos = _split_basis(bases, rng, depth)
    states = tuple(
        ProductState(f"s{i + 1}", locals_) for i, locals_ in enumerate(combos)
    )
    shape = "x".join(str(d) for d in dims)
    return Ensemble(f"random-{shape}-seed{seed}-depth{depth}", dims, states, complete=True)
