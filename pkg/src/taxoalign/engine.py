"""Native reasoner: region-grid encoding, consistency, possible-world enumeration.

The finite universe is a grid of element profiles.  A profile records, for
each taxonomy, the deepest concept containing the element (a leaf when parent
coverage is on, any node when it is off) or "outside" (None).  Sibling
disjointness makes this profile well defined, and the relation between any
two concepts depends only on which profiles are inhabited, so a scenario is a
subset of grid cells.  Every concept's extension is the set of cells whose
own-side coordinate lies in its subtree; parent coverage and sibling
disjointness hold by construction of the grid.

Cell sets are Python ints used as bitsets.  Constraints take two monotone
forms, AllEmpty(cells) and SomeInhabited(cells), for which satisfiability of
a conjunction is decided by one linear pass: empty every AllEmpty cell and
check each SomeInhabited against what is left ("maximal assignment").
Disjunctive articulations branch; the solver then refines each branch by
binding every cross-taxonomy pair whose relation is not yet forced, so each
search leaf is exactly one possible world and no deduplication is needed.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import Alignment, Cell, ConceptKey, PairKey, World, concept_key
from .relations import BASE_RELATIONS, BaseRelation, RelationMask

DEFAULT_BRANCH_BUDGET = 1_000_000
DEFAULT_WORLD_LIMIT = 10_000

BUDGET_ENV_VAR = "TAXOALIGN_BUDGET"


@dataclass(frozen=True)
class Budget:
    """Resource limits for one solver run; exceeding them raises, it never hangs."""

    max_branches: int = DEFAULT_BRANCH_BUDGET
    max_worlds: int = DEFAULT_WORLD_LIMIT

    @classmethod
    def from_env(cls) -> "Budget":
        """Default budget, overridable via TAXOALIGN_BUDGET="branches[,worlds]"."""
        raw = os.environ.get(BUDGET_ENV_VAR, "").strip()
        if not raw:
            return cls()
        parts = raw.split(",")
        branches = int(parts[0])
        worlds = int(parts[1]) if len(parts) > 1 and parts[1] else DEFAULT_WORLD_LIMIT
        return cls(max_branches=branches, max_worlds=worlds)


@dataclass
class SolverStats:
    """Counters for one run; all monotone while the run is active."""

    branches: int = 0
    propagations: int = 0
    realizability_checks: int = 0
    wall_time_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "branches": self.branches,
            "propagations": self.propagations,
            "realizability_checks": self.realizability_checks,
            "wall_time_s": self.wall_time_s,
        }


class BudgetExceededError(RuntimeError):
    """The branch budget ran out before the question was decided."""

    def __init__(self, message: str, stats: SolverStats):
        super().__init__(message)
        self.stats = stats


class EmptyConceptError(ValueError):
    """A witness leaves some concept without elements."""


# ---------------------------------------------------------------------------
# Region grid


@dataclass(frozen=True)
class RegionGrid:
    """The canonical cell universe for one alignment.

    Cells are indexed ``i1 * (n2 + 1) + i2`` with profiles sorted by name and
    the outside coordinate last, which makes index order the lexicographic
    order of cell labels.  The all-outside cell is excluded; cell count is
    ``(n1 + 1) * (n2 + 1) - 1``.
    """

    profiles1: Tuple[str, ...]
    profiles2: Tuple[str, ...]
    concept_keys1: Tuple[ConceptKey, ...]
    concept_keys2: Tuple[ConceptKey, ...]
    ext: Dict[ConceptKey, int]
    universe: int

    @property
    def n1(self) -> int:
        return len(self.profiles1)

    @property
    def n2(self) -> int:
        return len(self.profiles2)

    @property
    def cell_count(self) -> int:
        return (self.n1 + 1) * (self.n2 + 1) - 1

    def cell_index(self, i1: int, i2: int) -> int:
        return i1 * (self.n2 + 1) + i2

    def cell_label(self, index: int) -> Cell:
        i1, i2 = divmod(index, self.n2 + 1)
        p1 = self.profiles1[i1] if i1 < self.n1 else None
        p2 = self.profiles2[i2] if i2 < self.n2 else None
        return (p1, p2)

    def cells(self) -> List[Cell]:
        return [self.cell_label(i) for i in range(self.cell_count)]

    def cells_from_bits(self, bits: int) -> Tuple[Cell, ...]:
        out = []
        i = 0
        while bits:
            if bits & 1:
                out.append(self.cell_label(i))
            bits >>= 1
            i += 1
        return tuple(out)

    def bits_from_cells(self, cells: Iterable[Cell]) -> int:
        index1 = {p: i for i, p in enumerate(self.profiles1)}
        index2 = {p: i for i, p in enumerate(self.profiles2)}
        bits = 0
        for p1, p2 in cells:
            i1 = index1[p1] if p1 is not None else self.n1
            i2 = index2[p2] if p2 is not None else self.n2
            bits |= 1 << self.cell_index(i1, i2)
        return bits

    def cross_pairs(self) -> List[PairKey]:
        return [(lk, rk) for lk in self.concept_keys1 for rk in self.concept_keys2]


def build_grid(alignment: Alignment) -> RegionGrid:
    """Construct the region grid for an alignment (profiles depend on coverage)."""
    t1, t2 = alignment.taxonomy1, alignment.taxonomy2
    coverage = alignment.flags.coverage
    profiles1 = tuple(sorted(t1.leaves() if coverage else t1.concepts))
    profiles2 = tuple(sorted(t2.leaves() if coverage else t2.concepts))
    n1, n2 = len(profiles1), len(profiles2)
    width = n2 + 1
    row = {p: i for i, p in enumerate(profiles1)}
    col = {p: i for i, p in enumerate(profiles2)}
    total_bits = (n1 + 1) * width
    universe = (1 << (total_bits - 1)) - 1  # all cells except (outside, outside)
    row_full = (1 << width) - 1
    # bit i2 repeated once per row, including the outside row
    col_multiplier = ((1 << total_bits) - 1) // row_full

    ext: Dict[ConceptKey, int] = {}
    profile_set1, profile_set2 = set(profiles1), set(profiles2)
    for name in t1.concepts:
        bits = 0
        for d in t1.descendants_or_self(name):
            if d in profile_set1:
                bits |= row_full << (row[d] * width)
        ext[concept_key(1, name)] = bits
    for name in t2.concepts:
        bits = 0
        for d in t2.descendants_or_self(name):
            if d in profile_set2:
                bits |= (1 << col[d]) * col_multiplier
        ext[concept_key(2, name)] = bits

    return RegionGrid(
        profiles1=profiles1,
        profiles2=profiles2,
        concept_keys1=tuple(concept_key(1, n) for n in sorted(t1.concepts)),
        concept_keys2=tuple(concept_key(2, n) for n in sorted(t2.concepts)),
        ext=ext,
        universe=universe,
    )


# ---------------------------------------------------------------------------
# Constraint encoding


@dataclass(frozen=True)
class Disjunct:
    """Cell constraints realizing one base relation on one concept pair."""

    relation: BaseRelation
    all_empty: int
    some_inhabited: Tuple[int, ...]


@dataclass(frozen=True)
class DisjunctGroup:
    """One articulation's constraints: exactly one disjunct must hold."""

    articulation_index: int
    pair: PairKey
    disjuncts: Tuple[Disjunct, ...]


@dataclass(frozen=True)
class CellConstraintSet:
    """Full encoding: global non-emptiness plus one group per articulation."""

    non_emptiness: Tuple[int, ...]
    groups: Tuple[DisjunctGroup, ...]


def _zones(grid: RegionGrid, left: ConceptKey, right: ConceptKey) -> Tuple[int, int, int]:
    ex, ey = grid.ext[left], grid.ext[right]
    return ex & ~ey, ex & ey, ey & ~ex


def relation_disjunct(relation: BaseRelation, only_left: int, both: int, only_right: int) -> Disjunct:
    """Cell constraints for one base relation over the three zones of a pair.

    Non-emptiness of the concepts themselves is asserted globally, so only
    the zone conditions distinguishing the relation are emitted here.
    """
    if relation is BaseRelation.EQUALS:
        return Disjunct(relation, only_left | only_right, ())
    if relation is BaseRelation.IS_INCLUDED_IN:
        return Disjunct(relation, only_left, (only_right,))
    if relation is BaseRelation.INCLUDES:
        return Disjunct(relation, only_right, (only_left,))
    if relation is BaseRelation.DISJOINT:
        return Disjunct(relation, both, ())
    return Disjunct(relation, 0, (both, only_left, only_right))


def encode(alignment: Alignment, grid: RegionGrid) -> CellConstraintSet:
    """Translate articulations and covering constraints into cell constraints."""
    non_emptiness = tuple(grid.ext[k] for k in grid.concept_keys1 + grid.concept_keys2)
    groups = []
    for art in alignment.articulations:
        a, b, c = _zones(grid, art.left, art.right)
        disjuncts = tuple(relation_disjunct(r, a, b, c) for r in art.mask)
        groups.append(DisjunctGroup(art.index, (art.left, art.right), disjuncts))
    return CellConstraintSet(non_emptiness=non_emptiness, groups=tuple(groups))


# ---------------------------------------------------------------------------
# Solver


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    witness: Optional[Tuple[Cell, ...]]
    stats: SolverStats


@dataclass(frozen=True)
class WorldsResult:
    worlds: Tuple[World, ...]
    truncated: bool
    stats: SolverStats


_PATTERNS = {
    # relation -> (zones that must be empty, zones that must stay inhabited)
    # as index masks over (only_left, both, only_right)
    BaseRelation.EQUALS: ((0, 2), (1,)),
    BaseRelation.IS_INCLUDED_IN: ((0,), (1, 2)),
    BaseRelation.INCLUDES: ((2,), (0, 1)),
    BaseRelation.OVERLAPS: ((), (0, 1, 2)),
    BaseRelation.DISJOINT: ((1,), (0, 2)),
}

# A relation is only reachable from the current maximal assignment by
# emptying zones, never by inhabiting one, so the candidate set is bounded by
# the relations whose live zones are live now.  Listed in canonical order.
_CANDIDATE_SUPERSET = {
    BaseRelation.EQUALS: (BaseRelation.EQUALS,),
    BaseRelation.IS_INCLUDED_IN: (BaseRelation.EQUALS, BaseRelation.IS_INCLUDED_IN),
    BaseRelation.INCLUDES: (BaseRelation.EQUALS, BaseRelation.INCLUDES),
    BaseRelation.OVERLAPS: BASE_RELATIONS,
    BaseRelation.DISJOINT: (BaseRelation.DISJOINT,),
}


def _relation_of_zones(a_live: int, b_live: int, c_live: int) -> BaseRelation:
    if b_live:
        if a_live:
            return BaseRelation.OVERLAPS if c_live else BaseRelation.INCLUDES
        return BaseRelation.IS_INCLUDED_IN if c_live else BaseRelation.EQUALS
    return BaseRelation.DISJOINT


class _Solver:
    """Shared machinery for consistency checking and world enumeration."""

    def __init__(self, alignment: Alignment, budget: Budget):
        self.alignment = alignment
        self.grid = build_grid(alignment)
        self.budget = budget
        self.stats = SolverStats()
        self.universe = self.grid.universe
        # Globally required: every concept is non-empty.
        self.base_required: List[int] = [
            self.grid.ext[k] for k in self.grid.concept_keys1 + self.grid.concept_keys2
        ]
        # Allowed relation bits per articulated pair; duplicates conjoin.
        allowed: Dict[PairKey, int] = {}
        for art in alignment.articulations:
            pair = (art.left, art.right)
            allowed[pair] = allowed.get(pair, 0b11111) & art.mask.bits
        self.allowed = allowed
        self.art_pairs: List[PairKey] = sorted(allowed)
        self.trivially_inconsistent = any(bits == 0 for bits in allowed.values())

    # -- primitives ---------------------------------------------------------

    def _achievable(self, relation: BaseRelation, zones: Tuple[int, int, int],
                    forbidden: int, required: List[int]) -> bool:
        empty_idx, live_idx = _PATTERNS[relation]
        to_empty = 0
        for i in empty_idx:
            to_empty |= zones[i]
        avail = self.universe & ~(forbidden | to_empty)
        for i in live_idx:
            if not zones[i] & avail:
                return False
        if to_empty & ~forbidden:
            # newly forbidden cells: re-check every required set
            self.stats.realizability_checks += 1
            for q in required:
                if not q & avail:
                    return False
        return True

    def _push(self, relation: BaseRelation, zones: Tuple[int, int, int],
              forbidden: int, required: List[int]) -> Tuple[int, List[int]]:
        empty_idx, live_idx = _PATTERNS[relation]
        for i in empty_idx:
            forbidden |= zones[i]
        for i in live_idx:
            required.append(zones[i])
        self.stats.propagations += 1
        return forbidden, required

    def _spend_branch(self) -> None:
        self.stats.branches += 1
        if self.stats.branches > self.budget.max_branches:
            raise BudgetExceededError(
                f"branch budget of {self.budget.max_branches} exhausted", self.stats
            )

    # -- search -------------------------------------------------------------

    def _scan_entries(self, refine: bool) -> List[Tuple[int, int, int, bool]]:
        """(ext_left, ext_right, allowed bits, enforce) per pair, in scan order."""
        ext = self.grid.ext
        entries = [
            (ext[pair[0]], ext[pair[1]], self.allowed[pair], True)
            for pair in self.art_pairs
        ]
        if refine:
            art_set = set(self.art_pairs)
            entries.extend(
                (ext[pair[0]], ext[pair[1]], 0b11111, False)
                for pair in self.grid.cross_pairs()
                if pair not in art_set
            )
        return entries

    def _search(self, refine: bool, on_leaf, world_limit: Optional[int]) -> bool:
        """DFS over disjunct choices (and, when refining, unforced pairs).

        Returns True when the search was cut short by the world limit.
        """
        if self.trivially_inconsistent:
            return False
        entries = self._scan_entries(refine)
        stack: List[Tuple[int, List[int], int]] = [(0, list(self.base_required), 0)]
        emitted = 0
        while stack:
            forbidden, required, idx = stack.pop()
            dead = False
            while idx < len(entries):
                ext_left, ext_right, allowed_bits, enforce = entries[idx]
                both = ext_left & ext_right
                zones = (ext_left & ~both, both, ext_right & ~both)
                current = _relation_of_zones(
                    zones[0] & ~forbidden, zones[1] & ~forbidden, zones[2] & ~forbidden
                )
                candidates = [
                    r
                    for r in _CANDIDATE_SUPERSET[current]
                    if allowed_bits & r
                    and (r is current or self._achievable(r, zones, forbidden, required))
                ]
                if not candidates:
                    dead = True
                    break
                if len(candidates) == 1:
                    if enforce:
                        forbidden, required = self._push(
                            candidates[0], zones, forbidden, required
                        )
                    idx += 1
                    continue
                for r in reversed(candidates):
                    self._spend_branch()
                    f2, r2 = self._push(r, zones, forbidden, list(required))
                    stack.append((f2, r2, idx + 1))
                dead = True  # this frame is replaced by its children
                break
            if dead:
                continue
            emitted += 1
            if on_leaf(self.universe & ~forbidden):
                return bool(stack)
            if world_limit is not None and emitted >= world_limit:
                return bool(stack)
        return False

    # -- public -------------------------------------------------------------

    def check(self) -> ConsistencyResult:
        start = time.perf_counter()
        found: List[int] = []

        def leaf(smax: int) -> bool:
            found.append(smax)
            return True  # stop at the first satisfiable choice

        try:
            self._search(refine=False, on_leaf=leaf, world_limit=None)
        finally:
            self.stats.wall_time_s = time.perf_counter() - start
        if found:
            return ConsistencyResult(True, self.grid.cells_from_bits(found[0]), self.stats)
        return ConsistencyResult(False, None, self.stats)

    def enumerate(self, limit: int) -> WorldsResult:
        start = time.perf_counter()
        pairs = self.grid.cross_pairs()
        ext = self.grid.ext
        raw: List[Tuple[Tuple[int, ...], int]] = []

        def leaf(smax: int) -> bool:
            key = []
            for left, right in pairs:
                el, er = ext[left] & smax, ext[right] & smax
                both = el & er
                key.append(_relation_of_zones(el & ~both, both, er & ~both).value)
            raw.append((tuple(key), smax))
            return False

        try:
            truncated = self._search(refine=True, on_leaf=leaf, world_limit=limit)
        finally:
            self.stats.wall_time_s = time.perf_counter() - start
        raw.sort(key=lambda item: item[0])
        worlds = []
        for wid, (key, smax) in enumerate(raw):
            relations = {pair: BaseRelation(v) for pair, v in zip(pairs, key)}
            worlds.append(
                World(world_id=wid, relations=relations, witness=self.grid.cells_from_bits(smax))
            )
        return WorldsResult(tuple(worlds), truncated, self.stats)


def check_consistency(alignment: Alignment, budget: Optional[Budget] = None) -> ConsistencyResult:
    """Decide whether any scenario satisfies all articulations and constraints."""
    return _Solver(alignment, budget or Budget.from_env()).check()


def enumerate_worlds(
    alignment: Alignment,
    limit: Optional[int] = None,
    budget: Optional[Budget] = None,
) -> WorldsResult:
    """Enumerate every distinct possible world, in lexicographic relation-map order.

    World identity is the relation map over cross-taxonomy pairs.  The result
    is truncated (with a flag) at ``limit`` worlds; running past the branch
    budget raises :class:`BudgetExceededError`.
    """
    budget = budget or Budget.from_env()
    if limit is None:
        limit = budget.max_worlds
    return _Solver(alignment, budget).enumerate(limit)


def relation_map_of(witness: Sequence[Cell], grid: RegionGrid) -> Dict[PairKey, BaseRelation]:
    """Read the base relation of every cross pair off one inhabited-cell set."""
    bits = grid.bits_from_cells(witness)
    for key in grid.concept_keys1 + grid.concept_keys2:
        if not grid.ext[key] & bits:
            raise EmptyConceptError(f"concept {key} has no inhabited cell in the witness")
    out: Dict[PairKey, BaseRelation] = {}
    for pair in grid.cross_pairs():
        a, b, c = _zones(grid, *pair)
        out[pair] = _relation_of_zones(a & bits, b & bits, c & bits)
    return out


def has_unique_inhabitation(alignment: Alignment) -> bool:
    """Cheap sufficient test that exactly one cell assignment is satisfiable.

    Only applicable when every articulation mask is a singleton.  Pins every
    inhabited cell via some required set that it alone satisfies; if all of
    the maximal assignment is pinned, no other assignment exists, hence there
    is exactly one possible world.
    """
    if any(len(a.mask) != 1 for a in alignment.articulations):
        return False
    grid = build_grid(alignment)
    constraints = encode(alignment, grid)
    forbidden = 0
    required = list(constraints.non_emptiness)
    for group in constraints.groups:
        (disjunct,) = group.disjuncts
        forbidden |= disjunct.all_empty
        required.extend(disjunct.some_inhabited)
    smax = grid.universe & ~forbidden
    pinned = 0
    for q in required:
        alive = q & smax
        if not alive:
            return False  # inconsistent, not unique
        if alive & (alive - 1) == 0:
            pinned |= alive
    return smax == pinned
