"""Core data model: taxonomies, articulations, alignments, worlds, analysis results.

All types are immutable after construction and safe to share across threads.
Construction is permissive (invalid structures can be represented); use
:func:`validate` to obtain the list of invariant violations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .relations import BaseRelation, RelationMask

ConceptKey = str
PairKey = Tuple[str, str]
# Grid cell as (taxonomy-1 profile name, taxonomy-2 profile name); None is the
# "outside this taxonomy" coordinate.
Cell = Tuple[Optional[str], Optional[str]]


def concept_key(taxonomy_id: int, name: str) -> ConceptKey:
    return f"{taxonomy_id}.{name}"


@dataclass(frozen=True, order=True)
class Concept:
    """A named group within one taxonomy, identified by key "tid.name"."""

    taxonomy_id: int
    name: str

    @property
    def key(self) -> ConceptKey:
        return concept_key(self.taxonomy_id, self.name)


@dataclass(frozen=True)
class Taxonomy:
    """A rooted is_a tree over named concepts.

    ``parent`` maps each non-root concept name to its parent name.  Concept
    names are unique within the taxonomy.
    """

    id: int
    label: str
    concepts: Tuple[str, ...]
    parent: Mapping[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", tuple(self.concepts))
        object.__setattr__(self, "parent", dict(self.parent))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and set(self.concepts) == set(other.concepts)
            and dict(self.parent) == dict(other.parent)
        )

    def __contains__(self, name: str) -> bool:
        return name in set(self.concepts)

    def children(self, name: str) -> List[str]:
        return sorted(c for c, p in self.parent.items() if p == name)

    def roots(self) -> List[str]:
        """Concepts that never appear as a child, in sorted order."""
        return sorted(c for c in self.concepts if c not in self.parent)

    @property
    def root(self) -> str:
        roots = self.roots()
        if len(roots) != 1:
            raise ValueError(f"taxonomy {self.id} has {len(roots)} roots")
        return roots[0]

    def leaves(self) -> List[str]:
        parents = set(self.parent.values())
        return sorted(c for c in self.concepts if c not in parents)

    def is_leaf(self, name: str) -> bool:
        return name not in set(self.parent.values())

    def descendants_or_self(self, name: str) -> List[str]:
        out, stack = [], [name]
        kids: Dict[str, List[str]] = {}
        for c, p in self.parent.items():
            kids.setdefault(p, []).append(c)
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(kids.get(n, ()))
        return sorted(out)

    def is_ancestor(self, ancestor: str, descendant: str) -> bool:
        """True when ``ancestor`` lies strictly above ``descendant``."""
        n = descendant
        while n in self.parent:
            n = self.parent[n]
            if n == ancestor:
                return True
        return False

    def depth(self, name: str) -> int:
        d, n = 0, name
        while n in self.parent:
            n = self.parent[n]
            d += 1
        return d


@dataclass(frozen=True)
class SourceSpan:
    """Location of a token or line in the input text (1-based line)."""

    line: int
    column_start: int
    column_end: int
    text: str

    def describe(self) -> str:
        return f"line {self.line}, columns {self.column_start}-{self.column_end}"


@dataclass(frozen=True)
class Articulation:
    """An expert assertion relating one concept of each taxonomy.

    Stored directed taxonomy 1 -> taxonomy 2; input written in the other
    direction is normalized via the converse mask.  ``index`` is the position
    in the input articulation list and is the identity used by diagnoses.
    """

    index: int
    left: ConceptKey
    right: ConceptKey
    mask: RelationMask
    source: str = field(default="", compare=False)
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def text(self) -> str:
        return f"[{self.left} {self.mask.text(long=True)} {self.right}]"


@dataclass(frozen=True)
class ConstraintFlags:
    """Taxonomic covering constraints applied by the reasoner.

    Sibling disjointness and non-emptiness are mandatory in this version;
    only parent coverage can be switched off.
    """

    coverage: bool = True
    sibling_disjointness: bool = True
    non_emptiness: bool = True


@dataclass(frozen=True)
class Alignment:
    """Two rooted taxonomies plus articulations and constraint flags."""

    taxonomy1: Taxonomy
    taxonomy2: Taxonomy
    articulations: Tuple[Articulation, ...]
    flags: ConstraintFlags = ConstraintFlags()

    def __post_init__(self) -> None:
        object.__setattr__(self, "articulations", tuple(self.articulations))

    def taxonomy(self, taxonomy_id: int) -> Taxonomy:
        if taxonomy_id == 1:
            return self.taxonomy1
        if taxonomy_id == 2:
            return self.taxonomy2
        raise KeyError(f"unknown taxonomy id {taxonomy_id}")

    def concept_keys(self, taxonomy_id: int) -> List[ConceptKey]:
        t = self.taxonomy(taxonomy_id)
        return [concept_key(t.id, n) for n in sorted(t.concepts)]

    def with_articulations(self, articulations: Sequence[Articulation]) -> "Alignment":
        """Same taxonomies and flags, different articulation list."""
        return replace(self, articulations=tuple(articulations))

    def restricted_to(self, indices: Sequence[int]) -> "Alignment":
        """Keep only the articulations with the given original indices."""
        keep = set(indices)
        return self.with_articulations([a for a in self.articulations if a.index in keep])


@dataclass(frozen=True)
class World:
    """One consistent choice of a base relation for every cross-taxonomy pair.

    ``relations`` is total over (taxonomy-1 concept, taxonomy-2 concept)
    pairs.  ``witness`` is one inhabited-cell assignment of the region grid
    that realizes exactly these relations.
    """

    world_id: int
    relations: Mapping[PairKey, BaseRelation]
    witness: Tuple[Cell, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "relations", dict(self.relations))
        object.__setattr__(self, "witness", tuple(self.witness))

    def __eq__(self, other) -> bool:
        if not isinstance(other, World):
            return NotImplemented
        return (
            self.world_id == other.world_id
            and dict(self.relations) == dict(other.relations)
            and self.witness == other.witness
        )

    def relation(self, left: ConceptKey, right: ConceptKey) -> BaseRelation:
        return self.relations[(left, right)]


@dataclass(frozen=True)
class MirEntry:
    """Union mask and per-relation world counts for one concept pair."""

    left: ConceptKey
    right: ConceptKey
    mask: RelationMask
    counts: Mapping[BaseRelation, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", dict(self.counts))

    def count(self, relation: BaseRelation) -> int:
        return self.counts.get(relation, 0)


@dataclass(frozen=True)
class MirTable:
    """Maximally informative relations: per pair, the union over all worlds."""

    entries: Tuple[MirEntry, ...]
    world_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    def entry(self, left: ConceptKey, right: ConceptKey) -> MirEntry:
        for e in self.entries:
            if e.left == left and e.right == right:
                return e
        raise KeyError((left, right))

    def mask(self, left: ConceptKey, right: ConceptKey) -> RelationMask:
        return self.entry(left, right).mask


@dataclass(frozen=True)
class Diagnosis:
    """Explanation of an inconsistent alignment.

    ``mus`` is one inclusion-minimal unsatisfiable subset of articulation
    indices (tree structure and covering constraints are hard background and
    never appear in it).  ``repairs`` lists articulations whose single
    removal restores consistency.  ``all_minimal_conflicts`` is populated by
    exhaustive subset enumeration only for small inputs, else None.
    """

    consistent: bool
    mus: Tuple[int, ...] = ()
    repairs: Tuple[int, ...] = ()
    all_minimal_conflicts: Optional[Tuple[Tuple[int, ...], ...]] = None


@dataclass(frozen=True)
class Violation:
    """One failed model invariant, named by a stable code."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def _validate_taxonomy(t: Taxonomy, out: List[Violation]) -> None:
    names = list(t.concepts)
    seen = set()
    for n in names:
        if n in seen:
            out.append(Violation("duplicate-concept", f"taxonomy {t.id}: concept {n!r} declared twice"))
        seen.add(n)
    for child, parent in t.parent.items():
        if child not in seen:
            out.append(Violation("unknown-concept", f"taxonomy {t.id}: child {child!r} not declared"))
        if parent not in seen:
            out.append(Violation("unknown-concept", f"taxonomy {t.id}: parent {parent!r} not declared"))
    roots = [c for c in names if c not in t.parent]
    if len(roots) == 0 and names:
        out.append(Violation("cycle", f"taxonomy {t.id}: no root (parent links form a cycle)"))
    elif len(roots) > 1:
        out.append(Violation("multi-root", f"taxonomy {t.id}: multiple roots {roots}"))
    if not names:
        out.append(Violation("empty-taxonomy", f"taxonomy {t.id} has no concepts"))
        return
    # cycle / reachability check by walking parent chains
    for n in names:
        seen_chain = {n}
        cur = n
        while cur in t.parent:
            cur = t.parent[cur]
            if cur in seen_chain:
                out.append(Violation("cycle", f"taxonomy {t.id}: cycle through {cur!r}"))
                return
            seen_chain.add(cur)


def validate(alignment: Alignment) -> List[Violation]:
    """Check every model invariant; empty list means the alignment is well formed."""
    out: List[Violation] = []
    if alignment.taxonomy1.id != 1:
        out.append(Violation("bad-taxonomy-id", f"first taxonomy has id {alignment.taxonomy1.id}, expected 1"))
    if alignment.taxonomy2.id != 2:
        out.append(Violation("bad-taxonomy-id", f"second taxonomy has id {alignment.taxonomy2.id}, expected 2"))
    _validate_taxonomy(alignment.taxonomy1, out)
    _validate_taxonomy(alignment.taxonomy2, out)
    names1 = set(alignment.taxonomy1.concepts)
    names2 = set(alignment.taxonomy2.concepts)
    for i, art in enumerate(alignment.articulations):
        if art.index != i:
            out.append(Violation("bad-index", f"articulation {art.text()} has index {art.index}, expected {i}"))
        for side, key, names, tid in (
            ("left", art.left, names1, 1),
            ("right", art.right, names2, 2),
        ):
            prefix = f"{tid}."
            if not key.startswith(prefix) or key[len(prefix):] not in names:
                out.append(
                    Violation(
                        "unknown-concept",
                        f"articulation {art.text()}: {side} concept {key!r} not in taxonomy {tid}",
                    )
                )
    if not alignment.flags.sibling_disjointness:
        out.append(Violation("bad-flags", "sibling_disjointness cannot be disabled"))
    if not alignment.flags.non_emptiness:
        out.append(Violation("bad-flags", "non_emptiness cannot be disabled"))
    return out


# ---------------------------------------------------------------------------
# JSON codecs.  Stable field names; world relation maps as arrays sorted by
# (left key, right key).


def taxonomy_to_json(t: Taxonomy) -> dict:
    return {
        "id": t.id,
        "label": t.label,
        "concepts": sorted(t.concepts),
        "parents": [[c, t.parent[c]] for c in sorted(t.parent)],
    }


def taxonomy_from_json(data: dict) -> Taxonomy:
    return Taxonomy(
        id=data["id"],
        label=data["label"],
        concepts=tuple(data["concepts"]),
        parent={c: p for c, p in data["parents"]},
    )


def articulation_to_json(a: Articulation) -> dict:
    return {
        "index": a.index,
        "left": a.left,
        "right": a.right,
        "relations": list(a.mask.tokens(long=True)),
        "source": a.source,
    }


def articulation_from_json(data: dict) -> Articulation:
    return Articulation(
        index=data["index"],
        left=data["left"],
        right=data["right"],
        mask=RelationMask.from_tokens(data["relations"]),
        source=data.get("source", ""),
    )


def alignment_to_json(a: Alignment) -> dict:
    return {
        "taxonomies": [taxonomy_to_json(a.taxonomy1), taxonomy_to_json(a.taxonomy2)],
        "articulations": [articulation_to_json(x) for x in a.articulations],
        "flags": {
            "coverage": a.flags.coverage,
            "sibling_disjointness": a.flags.sibling_disjointness,
            "non_emptiness": a.flags.non_emptiness,
        },
    }


def alignment_from_json(data: dict) -> Alignment:
    t1, t2 = (taxonomy_from_json(t) for t in data["taxonomies"])
    flags = data.get("flags", {})
    return Alignment(
        taxonomy1=t1,
        taxonomy2=t2,
        articulations=tuple(articulation_from_json(x) for x in data["articulations"]),
        flags=ConstraintFlags(
            coverage=flags.get("coverage", True),
            sibling_disjointness=flags.get("sibling_disjointness", True),
            non_emptiness=flags.get("non_emptiness", True),
        ),
    )


def cell_to_json(cell: Cell) -> list:
    return [cell[0], cell[1]]


def world_to_json(w: World) -> dict:
    return {
        "id": w.world_id,
        "relations": [
            {"left": left, "right": right, "relation": w.relations[(left, right)].long_name}
            for left, right in sorted(w.relations)
        ],
        "witness": [cell_to_json(c) for c in w.witness],
    }


def world_from_json(data: dict) -> World:
    return World(
        world_id=data["id"],
        relations={
            (r["left"], r["right"]): next(
                b for b in BaseRelation if b.long_name == r["relation"]
            )
            for r in data["relations"]
        },
        witness=tuple((c[0], c[1]) for c in data["witness"]),
    )


def mir_to_json(m: MirTable) -> dict:
    return {
        "world_count": m.world_count,
        "entries": [
            {
                "left": e.left,
                "right": e.right,
                "mask": list(e.mask.tokens(long=True)),
                "counts": {r.long_name: e.counts[r] for r in sorted(e.counts)},
                "total": m.world_count,
            }
            for e in m.entries
        ],
    }


def diagnosis_to_json(d: Diagnosis) -> dict:
    return {
        "consistent": d.consistent,
        "mus": list(d.mus),
        "repairs": list(d.repairs),
        "all_minimal_conflicts": (
            None
            if d.all_minimal_conflicts is None
            else [list(c) for c in d.all_minimal_conflicts]
        ),
    }
