import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import alignments
from taxoalign.model import (
    Alignment,
    Articulation,
    ConstraintFlags,
    Taxonomy,
    World,
    alignment_from_json,
    alignment_to_json,
    validate,
    world_from_json,
    world_to_json,
)
from taxoalign.parser import parse_alignment, serialize_alignment
from taxoalign.relations import BaseRelation, RelationMask


def make_taxonomy(**kwargs):
    base = dict(id=1, label="t", concepts=("A", "B"), parent={"B": "A"})
    base.update(kwargs)
    return Taxonomy(**base)


class TestTaxonomy:
    def test_root_and_leaves(self):
        t = make_taxonomy(concepts=("A", "B", "C"), parent={"B": "A", "C": "A"})
        assert t.root == "A"
        assert t.leaves() == ["B", "C"]
        assert t.children("A") == ["B", "C"]
        assert t.descendants_or_self("A") == ["A", "B", "C"]
        assert t.is_ancestor("A", "C")
        assert not t.is_ancestor("C", "A")
        assert t.depth("C") == 1

    def test_equality_ignores_declaration_order(self):
        a = make_taxonomy(concepts=("A", "B"))
        b = make_taxonomy(concepts=("B", "A"))
        assert a == b


class TestValidate:
    def test_well_formed(self, two_leaf_merge):
        assert validate(two_leaf_merge) == []

    def test_unknown_concept_in_articulation(self):
        t1 = make_taxonomy(id=1)
        t2 = make_taxonomy(id=2, concepts=("C", "D"), parent={"D": "C"})
        art = Articulation(0, "1.Z", "2.C", RelationMask.of(BaseRelation.EQUALS))
        violations = validate(Alignment(t1, t2, (art,)))
        assert any(v.code == "unknown-concept" for v in violations)

    def test_two_roots(self):
        t1 = Taxonomy(id=1, label="t", concepts=("A", "B", "C"), parent={"C": "A"})
        t2 = make_taxonomy(id=2)
        violations = validate(Alignment(t1, t2, ()))
        assert any(v.code == "multi-root" for v in violations)

    def test_cycle(self):
        t1 = Taxonomy(id=1, label="t", concepts=("A", "B"), parent={"A": "B", "B": "A"})
        t2 = make_taxonomy(id=2)
        violations = validate(Alignment(t1, t2, ()))
        assert any(v.code == "cycle" for v in violations)

    def test_mandatory_flags(self):
        t1, t2 = make_taxonomy(id=1), make_taxonomy(id=2)
        a = Alignment(t1, t2, (), ConstraintFlags(sibling_disjointness=False))
        assert any(v.code == "bad-flags" for v in validate(a))


class TestJson:
    def test_alignment_round_trip(self, demo_alignment):
        data = alignment_to_json(demo_alignment)
        assert set(data) == {"taxonomies", "articulations", "flags"}
        again = alignment_from_json(json.loads(json.dumps(data)))
        assert again == demo_alignment

    @given(alignments())
    def test_alignment_round_trip_random(self, alignment):
        assert alignment_from_json(alignment_to_json(alignment)) == alignment

    def test_world_relations_sorted(self):
        w = World(
            world_id=0,
            relations={
                ("1.B", "2.E"): BaseRelation.DISJOINT,
                ("1.A", "2.E"): BaseRelation.EQUALS,
            },
            witness=(("A", "E"),),
        )
        data = world_to_json(w)
        pairs = [(r["left"], r["right"]) for r in data["relations"]]
        assert pairs == sorted(pairs)
        assert world_from_json(data) == w


class TestSerializationRoundTrip:
    @given(alignments())
    def test_parse_of_serialize_is_identity(self, alignment):
        text = serialize_alignment(alignment)
        again = parse_alignment(text, coverage=alignment.flags.coverage)
        assert again == alignment

    def test_serialize_deterministic(self, demo_alignment):
        assert serialize_alignment(demo_alignment) == serialize_alignment(demo_alignment)
