import pytest

from taxoalign.engine import build_grid, enumerate_worlds
from taxoalign.relations import BaseRelation
from taxoalign.viz import (
    MERGED,
    UNIQUE_T1,
    UNIQUE_T2,
    build_rcg,
    cluster_to_dot,
    distance_matrix,
    distances_to_csv,
    rcg_to_dot,
)


@pytest.fixture
def demo_worlds(demo_alignment):
    repaired = demo_alignment.restricted_to([0, 1, 2, 3, 4])
    return repaired, enumerate_worlds(repaired).worlds


class TestBuildRcg:
    def test_two_leaf_merge(self, two_leaf_merge):
        (world,) = enumerate_worlds(two_leaf_merge).worlds
        rcg = build_rcg(world, two_leaf_merge)
        assert [n.node_id for n in rcg.nodes] == ["1.A=2.D", "1.B=2.E", "1.C=2.F"]
        assert all(n.category == MERGED for n in rcg.nodes)
        assert [(e.container, e.contained, e.kind) for e in rcg.edges] == [
            ("1.A=2.D", "1.B=2.E", "input"),
            ("1.A=2.D", "1.C=2.F", "input"),
        ]

    def test_singleton_inclusion_world(self, singleton_pair):
        worlds = enumerate_worlds(singleton_pair).worlds
        lt_world = worlds[1]
        assert lt_world.relations[("1.A", "2.B")] is BaseRelation.IS_INCLUDED_IN
        rcg = build_rcg(lt_world, singleton_pair)
        assert {n.node_id: n.category for n in rcg.nodes} == {
            "1.A": UNIQUE_T1,
            "2.B": UNIQUE_T2,
        }
        assert [(e.container, e.contained, e.kind) for e in rcg.edges] == [
            ("2.B", "1.A", "inferred")
        ]

    def test_singleton_congruent_world(self, singleton_pair):
        eq_world = enumerate_worlds(singleton_pair).worlds[0]
        rcg = build_rcg(eq_world, singleton_pair)
        assert [n.node_id for n in rcg.nodes] == ["1.A=2.B"]
        assert rcg.edges == ()

    def test_partition(self, demo_worlds):
        alignment, worlds = demo_worlds
        every = {f"1.{c}" for c in alignment.taxonomy1.concepts} | {
            f"2.{c}" for c in alignment.taxonomy2.concepts
        }
        for world in worlds:
            rcg = build_rcg(world, alignment)
            seen = [m for n in rcg.nodes for m in n.members]
            assert sorted(seen) == sorted(every)

    def test_transitive_reduction(self, demo_worlds):
        alignment, worlds = demo_worlds
        for world in worlds:
            rcg = build_rcg(world, alignment)
            children = {}
            for e in rcg.edges:
                children.setdefault(e.container, set()).add(e.contained)

            def reachable(src, dst, steps):
                if steps > 0 and src == dst:
                    return True
                return any(
                    reachable(n, dst, steps + 1) for n in children.get(src, ())
                )

            for e in rcg.edges:
                two_step = any(
                    reachable(mid, e.contained, 1)
                    for mid in children.get(e.container, ())
                    if mid != e.contained
                )
                assert not two_step, (e, world.world_id)

    def test_edge_soundness(self, demo_worlds):
        alignment, worlds = demo_worlds
        grid = build_grid(alignment)
        for world in worlds:
            rcg = build_rcg(world, alignment)
            bits = grid.bits_from_cells(world.witness)
            ext_of_node = {}
            for n in rcg.nodes:
                ext_of_node[n.node_id] = grid.ext[n.members[0]] & bits
            for e in rcg.edges:
                outer, inner = ext_of_node[e.container], ext_of_node[e.contained]
                assert inner & ~outer == 0 and inner != outer

    def test_overlap_absent(self, demo_worlds):
        alignment, worlds = demo_worlds
        for world in worlds:
            rcg = build_rcg(world, alignment)
            ids = {n.node_id for n in rcg.nodes}
            for e in rcg.edges:
                assert e.container in ids and e.contained in ids


class TestDot:
    def test_styles(self, two_leaf_merge, singleton_pair):
        (world,) = enumerate_worlds(two_leaf_merge).worlds
        dot = rcg_to_dot(build_rcg(world, two_leaf_merge))
        assert dot.count("shape=box") == 3
        assert dot.count("fillcolor=grey") == 3
        assert dot.count("color=black") == 2
        lt_world = enumerate_worlds(singleton_pair).worlds[1]
        dot = rcg_to_dot(build_rcg(lt_world, singleton_pair))
        assert 'shape=diamond, style=filled, fillcolor=green' in dot
        assert 'shape=octagon, style=filled, fillcolor=yellow' in dot
        assert '"2.B" -> "1.A" [color=red];' in dot

    def test_byte_identical(self, demo_alignment):
        repaired = demo_alignment.restricted_to([0, 1, 2, 3, 4])
        worlds = enumerate_worlds(repaired).worlds
        first = [rcg_to_dot(build_rcg(w, repaired)) for w in worlds]
        second = [rcg_to_dot(build_rcg(w, repaired)) for w in worlds]
        assert first == second

    def test_snapshot_one_node(self, singleton_pair):
        eq_world = enumerate_worlds(singleton_pair).worlds[0]
        dot = rcg_to_dot(build_rcg(eq_world, singleton_pair))
        assert dot == (
            "digraph rcg {\n"
            "  rankdir=TB;\n"
            '  "1.A=2.B" [shape=box, style=filled, fillcolor=grey];\n'
            "}\n"
        )


class TestCluster:
    def test_single_world(self, two_leaf_merge):
        worlds = enumerate_worlds(two_leaf_merge).worlds
        dot, csv_text = cluster_to_dot(worlds)
        assert '"w0"' in dot and "--" not in dot
        assert csv_text == "world,0\n0,0\n"

    def test_two_worlds_distance_one(self, singleton_pair):
        worlds = enumerate_worlds(singleton_pair).worlds
        dot, csv_text = cluster_to_dot(worlds)
        assert '"w0" -- "w1" [label=1];' in dot
        assert csv_text == "world,0,1\n0,0,1\n1,1,0\n"

    def test_matrix_symmetric_zero_diagonal(self, demo_alignment):
        repaired = demo_alignment.restricted_to([0, 1, 2, 3, 4])
        worlds = enumerate_worlds(repaired).worlds
        matrix = distance_matrix(worlds)
        for i in range(len(worlds)):
            assert matrix[i][i] == 0
            for j in range(len(worlds)):
                assert matrix[i][j] == matrix[j][i]
        csv_text = distances_to_csv(worlds, matrix)
        assert csv_text.splitlines()[0] == "world,0,1,2,3,4,5,6"

    def test_spanning_tree_connects_everything(self, demo_alignment):
        repaired = demo_alignment.restricted_to([0, 1, 2, 3, 4])
        worlds = enumerate_worlds(repaired).worlds
        dot, _ = cluster_to_dot(worlds)
        edges = [l for l in dot.splitlines() if "--" in l]
        assert len(edges) >= len(worlds) - 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cluster_to_dot([])

    def test_deterministic(self, demo_alignment):
        repaired = demo_alignment.restricted_to([0, 1, 2, 3, 4])
        worlds = enumerate_worlds(repaired).worlds
        assert cluster_to_dot(worlds) == cluster_to_dot(worlds)
