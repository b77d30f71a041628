"""Visualization artifacts: reduced containment graphs and the world-distance
network, emitted as deterministic DOT text.

An RCG shows one possible world: concepts with identical extensions are
merged into one node, and edges show proper inclusion, drawn from container
to contained and transitively reduced.  Overlap is not drawn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .analysis import world_distance
from .engine import build_grid
from .model import Alignment, World

MERGED = "merged"
UNIQUE_T1 = "unique_t1"
UNIQUE_T2 = "unique_t2"

DEFAULT_STYLE = {
    MERGED: ("box", "grey"),
    UNIQUE_T1: ("diamond", "green"),
    UNIQUE_T2: ("octagon", "yellow"),
}


@dataclass(frozen=True)
class RcgNode:
    """A maximal group of concepts sharing one extension in this world."""

    node_id: str
    members: Tuple[str, ...]
    category: str


@dataclass(frozen=True)
class RcgEdge:
    """Proper inclusion, container to contained; input edges restate an is_a
    pair of one input tree, all others are inferred."""

    container: str
    contained: str
    kind: str  # "input" | "inferred"


@dataclass(frozen=True)
class Rcg:
    nodes: Tuple[RcgNode, ...]
    edges: Tuple[RcgEdge, ...]

    def node(self, node_id: str) -> RcgNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


def build_rcg(world: World, alignment: Alignment) -> Rcg:
    """Merge equal-extension concepts and keep the Hasse edges of inclusion."""
    grid = build_grid(alignment)
    witness = grid.bits_from_cells(world.witness)

    groups: Dict[int, List[str]] = {}
    for key in grid.concept_keys1 + grid.concept_keys2:
        groups.setdefault(grid.ext[key] & witness, []).append(key)

    node_of: Dict[int, str] = {}
    nodes = []
    for extension, members in groups.items():
        members = sorted(members)
        node_id = "=".join(members)
        has1 = any(m.startswith("1.") for m in members)
        has2 = any(m.startswith("2.") for m in members)
        category = MERGED if has1 and has2 else (UNIQUE_T1 if has1 else UNIQUE_T2)
        node_of[extension] = node_id
        nodes.append(RcgNode(node_id=node_id, members=tuple(members), category=category))
    nodes.sort(key=lambda n: n.node_id)

    extensions = sorted(groups, key=lambda e: (-bin(e).count("1"), node_of[e]))

    def strictly_contains(outer: int, inner: int) -> bool:
        return outer != inner and inner & ~outer == 0

    hasse: List[Tuple[int, int]] = []
    for outer in extensions:
        for inner in extensions:
            if not strictly_contains(outer, inner):
                continue
            if any(
                strictly_contains(outer, mid) and strictly_contains(mid, inner)
                for mid in extensions
            ):
                continue
            hasse.append((outer, inner))

    input_pairs = set()
    for taxonomy in (alignment.taxonomy1, alignment.taxonomy2):
        for child, parent in taxonomy.parent.items():
            input_pairs.add((f"{taxonomy.id}.{parent}", f"{taxonomy.id}.{child}"))

    edges = []
    for outer, inner in hasse:
        container, contained = node_of[outer], node_of[inner]
        is_input = any(
            (p, c) in input_pairs
            for p in groups[outer]
            for c in groups[inner]
        )
        edges.append(RcgEdge(container, contained, "input" if is_input else "inferred"))
    edges.sort(key=lambda e: (e.container, e.contained))
    return Rcg(nodes=tuple(nodes), edges=tuple(edges))


def rcg_to_dot(rcg: Rcg, style: Optional[Dict[str, Tuple[str, str]]] = None) -> str:
    """Byte-stable DOT rendering with the fixed node/edge legend."""
    style = style or DEFAULT_STYLE
    lines = ["digraph rcg {", "  rankdir=TB;"]
    for n in rcg.nodes:
        shape, color = style[n.category]
        lines.append(
            f'  "{n.node_id}" [shape={shape}, style=filled, fillcolor={color}];'
        )
    for e in rcg.edges:
        color = "black" if e.kind == "input" else "red"
        lines.append(f'  "{e.container}" -> "{e.contained}" [color={color}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def distance_matrix(worlds: Sequence[World]) -> List[List[int]]:
    """Full symmetric matrix of pairwise world distances (zero diagonal)."""
    n = len(worlds)
    matrix = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = world_distance(worlds[i], worlds[j])
            matrix[i][j] = matrix[j][i] = d
    return matrix


def distances_to_csv(worlds: Sequence[World], matrix: Sequence[Sequence[int]]) -> str:
    ids = [str(w.world_id) for w in worlds]
    lines = ["world," + ",".join(ids)] if ids else ["world"]
    for wid, row in zip(ids, matrix):
        lines.append(wid + "," + ",".join(str(d) for d in row))
    return "\n".join(lines) + "\n"


def _spanning_edges(matrix: Sequence[Sequence[int]]) -> List[Tuple[int, int]]:
    """Kruskal's minimum spanning tree with deterministic tie-breaking."""
    n = len(matrix)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = sorted(
        (matrix[i][j], i, j) for i in range(n) for j in range(i + 1, n)
    )
    chosen = []
    for _, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            chosen.append((i, j))
    return chosen


def cluster_to_dot(
    worlds: Sequence[World], matrix: Optional[Sequence[Sequence[int]]] = None
) -> Tuple[str, str]:
    """(DOT text, CSV matrix) for the possible-world distance network.

    The drawn edge set is a minimum spanning tree plus every edge of minimal
    nonzero distance, each labeled with its distance.
    """
    if not worlds:
        raise ValueError("cluster needs at least one world")
    if matrix is None:
        matrix = distance_matrix(worlds)
    csv_text = distances_to_csv(worlds, matrix)
    n = len(worlds)
    keep = set(_spanning_edges(matrix))
    nonzero = [matrix[i][j] for i in range(n) for j in range(i + 1, n) if matrix[i][j] > 0]
    if nonzero:
        dmin = min(nonzero)
        for i in range(n):
            for j in range(i + 1, n):
                if matrix[i][j] == dmin:
                    keep.add((i, j))
    lines = ["graph worlds {", "  layout=neato;"]
    for w in worlds:
        lines.append(f'  "w{w.world_id}" [shape=circle];')
    for i, j in sorted(keep):
        lines.append(
            f'  "w{worlds[i].world_id}" -- "w{worlds[j].world_id}" [label={matrix[i][j]}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n", csv_text
