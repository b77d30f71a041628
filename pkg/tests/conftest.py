import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from taxoalign.model import Alignment, Articulation, Taxonomy
from taxoalign.relations import BaseRelation, RelationMask


@pytest.fixture
def singleton_pair():
    """One concept per taxonomy, articulated 1.A {== <} 2.B; two worlds."""
    t1 = Taxonomy(id=1, label="t1", concepts=("A",), parent={})
    t2 = Taxonomy(id=2, label="t2", concepts=("B",), parent={})
    mask = RelationMask.of(BaseRelation.EQUALS, BaseRelation.IS_INCLUDED_IN)
    return Alignment(t1, t2, (Articulation(0, "1.A", "2.B", mask),))


@pytest.fixture
def two_leaf_merge():
    """A(B,C) against D(E,F) with leafwise congruence; exactly one world."""
    t1 = Taxonomy(id=1, label="t1", concepts=("A", "B", "C"), parent={"B": "A", "C": "A"})
    t2 = Taxonomy(id=2, label="t2", concepts=("D", "E", "F"), parent={"E": "D", "F": "D"})
    arts = (
        Articulation(0, "1.B", "2.E", RelationMask.of(BaseRelation.EQUALS)),
        Articulation(1, "1.C", "2.F", RelationMask.of(BaseRelation.EQUALS)),
    )
    return Alignment(t1, t2, arts)


@pytest.fixture
def contradictory_pair():
    """1.A == 2.B and 1.A ! 2.B cannot both hold."""
    t1 = Taxonomy(id=1, label="t1", concepts=("A",), parent={})
    t2 = Taxonomy(id=2, label="t2", concepts=("B",), parent={})
    return Alignment(
        t1,
        t2,
        (
            Articulation(0, "1.A", "2.B", RelationMask.of(BaseRelation.EQUALS)),
            Articulation(1, "1.A", "2.B", RelationMask.of(BaseRelation.DISJOINT)),
        ),
    )


@pytest.fixture
def nested_conflict():
    """1.A {== <} 2.B with 1.D > 2.B while 1.D is_a 1.A; inconsistent."""
    t1 = Taxonomy(id=1, label="t1", concepts=("A", "D", "E"), parent={"D": "A", "E": "A"})
    t2 = Taxonomy(id=2, label="t2", concepts=("B",), parent={})
    return Alignment(
        t1,
        t2,
        (
            Articulation(
                0, "1.A", "2.B",
                RelationMask.of(BaseRelation.EQUALS, BaseRelation.IS_INCLUDED_IN),
            ),
            Articulation(1, "1.D", "2.B", RelationMask.of(BaseRelation.INCLUDES)),
        ),
    )


@pytest.fixture
def demo_alignment():
    from taxoalign.datasets import demo_alignment as load

    return load()
