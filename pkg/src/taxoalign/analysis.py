"""Computations over worlds and articulations: MIR tables, consensus,
inconsistency diagnosis and repair, MIR provenance, interactive ambiguity
reduction, and world distances.

Tree structure and the covering constraints are hard background throughout:
explanations and provenance sets range over articulation indices only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .engine import Budget, check_consistency, enumerate_worlds
from .model import Alignment, Articulation, Diagnosis, MirEntry, MirTable, PairKey, World
from .relations import BASE_RELATIONS, BaseRelation, RelationMask

EXHAUSTIVE_CONFLICT_LIMIT = 12


class ConsistentAlignmentError(ValueError):
    """diagnose() was called on an alignment that has a possible world."""


class NotEntailedError(ValueError):
    """The provenance target does not hold in every possible world."""


class EmptyAnswerError(ValueError):
    """An ambiguity-reduction answer would leave no surviving world."""


def mir(worlds: Sequence[World]) -> MirTable:
    """Per concept pair: the union mask over all worlds plus relation counts."""
    if not worlds:
        raise ValueError("MIR is undefined for an empty world list")
    pairs = sorted(worlds[0].relations)
    entries = []
    for pair in pairs:
        counts: Dict[BaseRelation, int] = {}
        for w in worlds:
            r = w.relations[pair]
            counts[r] = counts.get(r, 0) + 1
        mask = RelationMask.of(*counts)
        entries.append(MirEntry(left=pair[0], right=pair[1], mask=mask, counts=counts))
    return MirTable(entries=tuple(entries), world_count=len(worlds))


def consensus(table: MirTable) -> List[Tuple[PairKey, BaseRelation]]:
    """Exactly the pairs whose relation is the same in every world."""
    return [
        ((e.left, e.right), e.mask.single)
        for e in table.entries
        if e.mask.is_singleton()
    ]


def mir_to_csv(table: MirTable) -> str:
    """CSV export with one row per pair and per-relation world counts."""
    lines = ["left,right,mask,count_eq,count_lt,count_gt,count_ov,count_dj,total"]
    for e in table.entries:
        mask = " ".join(r.symbol for r in e.mask)
        counts = ",".join(str(e.count(r)) for r in BASE_RELATIONS)
        lines.append(f"{e.left},{e.right},{mask},{counts},{table.world_count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Diagnosis and repair


def _consistent(alignment: Alignment, indices: Sequence[int], budget: Optional[Budget]) -> bool:
    return check_consistency(alignment.restricted_to(indices), budget=budget).consistent


def diagnose(alignment: Alignment, budget: Optional[Budget] = None) -> Diagnosis:
    """Explain an inconsistent alignment.

    Returns one minimal unsatisfiable subset of articulation indices found by
    deletion-based shrinking, plus every single articulation whose removal
    alone restores consistency.  For at most ``EXHAUSTIVE_CONFLICT_LIMIT``
    articulations, all minimal conflicts are enumerated as well.
    """
    all_indices = [a.index for a in alignment.articulations]
    if _consistent(alignment, all_indices, budget):
        raise ConsistentAlignmentError("alignment is consistent; nothing to diagnose")

    # deletion-based shrinking: drop each member that is not needed
    mus = list(all_indices)
    for idx in all_indices:
        trial = [i for i in mus if i != idx]
        if not _consistent(alignment, trial, budget):
            mus = trial

    repairs = [
        idx
        for idx in mus
        if _consistent(alignment, [i for i in all_indices if i != idx], budget)
    ]

    all_conflicts: Optional[Tuple[Tuple[int, ...], ...]] = None
    if len(all_indices) <= EXHAUSTIVE_CONFLICT_LIMIT:
        found: List[Tuple[int, ...]] = []
        for size in range(1, len(all_indices) + 1):
            for subset in combinations(all_indices, size):
                if any(set(c) <= set(subset) for c in found):
                    continue  # contains a smaller conflict, not minimal
                if not _consistent(alignment, subset, budget):
                    found.append(subset)
        all_conflicts = tuple(found)

    return Diagnosis(
        consistent=False,
        mus=tuple(mus),
        repairs=tuple(repairs),
        all_minimal_conflicts=all_conflicts,
    )


def structural_facts(alignment: Alignment, indices: Sequence[int]) -> List[str]:
    """is_a chains between concepts mentioned by the given articulations.

    These are the hard background facts a white-box explanation cites
    alongside the minimal unsatisfiable subset.
    """
    keep = set(indices)
    mentioned: Dict[int, List[str]] = {1: [], 2: []}
    for art in alignment.articulations:
        if art.index in keep:
            mentioned[1].append(art.left.split(".", 1)[1])
            mentioned[2].append(art.right.split(".", 1)[1])
    facts = []
    for tid in (1, 2):
        taxonomy = alignment.taxonomy(tid)
        names = sorted(set(mentioned[tid]))
        for low, high in ((a, b) for a in names for b in names if a != b):
            if taxonomy.is_ancestor(high, low):
                facts.append(f"{tid}.{low} is_a {tid}.{high}")
    return facts


# ---------------------------------------------------------------------------
# MIR provenance


def _entails(alignment: Alignment, indices: Sequence[int], pair: PairKey,
             target: RelationMask, budget: Optional[Budget]) -> bool:
    """True when every world of the restricted alignment keeps pair in target.

    Decided by refutation: the target is entailed exactly when asserting its
    complement as one more articulation leaves no possible world.  This
    avoids enumerating the (possibly huge) world set of weakly constrained
    sub-alignments.
    """
    complement = target.bits ^ 0b11111
    if complement == 0:
        return True  # the full mask is vacuously entailed
    sub = alignment.restricted_to(indices)
    probe = Articulation(
        index=len(alignment.articulations),
        left=pair[0],
        right=pair[1],
        mask=RelationMask(complement),
    )
    refuter = sub.with_articulations(tuple(sub.articulations) + (probe,))
    return not check_consistency(refuter, budget=budget).consistent


def mir_provenance(
    alignment: Alignment,
    pair: PairKey,
    target: RelationMask,
    budget: Optional[Budget] = None,
) -> List[int]:
    """An inclusion-minimal articulation subset that still entails the target.

    Deletion-based shrinking over entailment checks: drop every articulation
    whose absence keeps "relation(pair) within target" true in all worlds.
    """
    all_indices = [a.index for a in alignment.articulations]
    if not _entails(alignment, all_indices, pair, target, budget):
        raise NotEntailedError(
            f"{pair[0]} {target.text(long=False)} {pair[1]} does not hold in every world"
        )
    keep = list(all_indices)
    for idx in all_indices:
        trial = [i for i in keep if i != idx]
        if _entails(alignment, trial, pair, target, budget):
            keep = trial
    return keep


# ---------------------------------------------------------------------------
# Interactive ambiguity reduction


@dataclass(frozen=True)
class Question:
    """One discriminating concept pair with its candidate answers.

    Each candidate is a single base relation; its count is the number of
    currently surviving worlds that would remain after that answer.
    """

    pair: PairKey
    candidates: Tuple[Tuple[BaseRelation, int], ...]

    @property
    def worst_case(self) -> int:
        return max(count for _, count in self.candidates)


@dataclass(frozen=True)
class ReductionSession:
    """Filtering state over a fixed full world list; answers only narrow it."""

    alignment: Alignment
    worlds: Tuple[World, ...]
    answers: Mapping[PairKey, RelationMask]
    surviving: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "answers", dict(self.answers))
        object.__setattr__(self, "surviving", tuple(self.surviving))

    @classmethod
    def start(cls, alignment: Alignment, worlds: Sequence[World]) -> "ReductionSession":
        return cls(
            alignment=alignment,
            worlds=tuple(worlds),
            answers={},
            surviving=tuple(w.world_id for w in worlds),
        )

    def surviving_worlds(self) -> List[World]:
        ids = set(self.surviving)
        return [w for w in self.worlds if w.world_id in ids]


def next_question(session: ReductionSession) -> Optional[Question]:
    """The varying pair minimizing the worst-case surviving count, or None.

    Ties are broken by lexicographic pair key, so the questioning order is
    deterministic.
    """
    alive = session.surviving_worlds()
    if len(alive) <= 1:
        return None
    best: Optional[Question] = None
    for pair in sorted(alive[0].relations):
        counts: Dict[BaseRelation, int] = {}
        for w in alive:
            r = w.relations[pair]
            counts[r] = counts.get(r, 0) + 1
        if len(counts) < 2:
            continue
        q = Question(
            pair=pair,
            candidates=tuple((r, counts[r]) for r in BASE_RELATIONS if r in counts),
        )
        if best is None or q.worst_case < best.worst_case:
            best = q
    return best


def apply_answer(
    session: ReductionSession, pair: PairKey, mask: RelationMask
) -> ReductionSession:
    """Filter the surviving worlds by an answer; rejected if none would remain."""
    alive = session.surviving_worlds()
    if not alive:
        raise EmptyAnswerError("no surviving worlds to filter")
    if pair not in alive[0].relations:
        raise KeyError(f"unknown concept pair {pair}")
    remaining = [w.world_id for w in alive if w.relations[pair] in mask]
    if not remaining:
        raise EmptyAnswerError(
            f"no possible world has {pair[0]} {mask.text(long=False)} {pair[1]}"
        )
    answers = dict(session.answers)
    previous = answers.get(pair)
    # a nonempty survivor set guarantees the masks intersect
    answers[pair] = mask if previous is None else RelationMask(previous.intersection_bits(mask))
    return replace(session, answers=answers, surviving=tuple(remaining))


def world_distance(w1: World, w2: World) -> int:
    """Number of cross-taxonomy pairs on which two worlds disagree."""
    if set(w1.relations) != set(w2.relations):
        raise ValueError("worlds come from different pair grids")
    return sum(1 for pair, r in w1.relations.items() if w2.relations[pair] is not r)
