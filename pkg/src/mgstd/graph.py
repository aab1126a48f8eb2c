"""Morse decompositions of cell digraphs.

Morse sets are the nontrivial strongly connected components (two or more
nodes, or one node with a self-loop).  Trivial components are dropped from
the decomposition but still carry reachability, so two Morse sets joined
through gradient-like cells stay ordered.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Hashable, Iterable

import numpy as np

from .errors import ParameterError
from .grid import GridSpec, barycenter
from .transitions import Digraph


def _tarjan(nodes, successors) -> list[list]:
    """Iterative Tarjan.  Components come out in reverse topological order."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(successors.get(root, ())))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def scc(g: Digraph) -> list[frozenset]:
    """Strongly connected components, sorted by smallest member."""
    comps = _tarjan(g.nodes, g.successors)
    return sorted((frozenset(c) for c in comps), key=min)


def _condensation(g: Digraph):
    """Components in topological order plus their successor index lists."""
    comps = _tarjan(g.nodes, g.successors)[::-1]
    owner = {v: k for k, comp in enumerate(comps) for v in comp}
    succ = [set() for _ in comps]
    for a, b in g.edges:
        ka, kb = owner[a], owner[b]
        if ka != kb:
            succ[ka].add(kb)
    for k, nxt in enumerate(succ):
        if any(j <= k for j in nxt):
            raise AssertionError("condensation is not acyclic")
    return comps, owner, succ


def _reach_bits(succ) -> list[int]:
    """Bitset of components reachable from each component (itself included).

    ``succ`` must be indexed in topological order.
    """
    reach = [0] * len(succ)
    for k in range(len(succ) - 1, -1, -1):
        bits = 1 << k
        for j in succ[k]:
            bits |= reach[j]
        reach[k] = bits
    return reach


def condensation_reachability(g: Digraph, components) -> set[tuple[int, int]]:
    """Strict order on ``components`` induced by paths in ``g``.

    ``(j, i)`` is in the result iff ``i != j`` and some vertex of
    ``components[j]`` reaches some vertex of ``components[i]``.
    """
    comps, owner, succ = _condensation(g)
    reach = _reach_bits(succ)
    keys = [owner[next(iter(c))] for c in components]
    order = set()
    for j, kj in enumerate(keys):
        bits = reach[kj]
        for i, ki in enumerate(keys):
            if i != j and (bits >> ki) & 1:
                order.add((j, i))
    return order


def transitive_closure(edges: Iterable[tuple[Hashable, Hashable]]) -> set:
    """Strict reachability pairs of a digraph given by its edges."""
    succ: dict = {}
    for a, b in edges:
        succ.setdefault(a, set()).add(b)
        succ.setdefault(b, set())
    closure = set()
    for s in succ:
        seen, todo = set(), list(succ[s])
        while todo:
            v = todo.pop()
            if v in seen:
                continue
            seen.add(v)
            todo.extend(succ[v])
        closure.update((s, v) for v in seen)
    return closure


def transitive_reduction(edges: Iterable[tuple[Hashable, Hashable]]) -> set:
    """Unique minimal edge set of a DAG with the same transitive closure."""
    edges = set(edges)
    succ: dict = {}
    for a, b in edges:
        if a == b:
            raise ParameterError(f"self-loop at {a!r}: not a DAG")
        succ.setdefault(a, set()).add(b)
        succ.setdefault(b, set())
    nodes = list(succ)
    comps = _tarjan(nodes, succ)
    if any(len(c) > 1 for c in comps):
        raise ParameterError("cycle detected: transitive reduction needs a DAG")
    # Tarjan emits sinks first: that is a valid order for accumulating reach.
    reach: dict = {}
    for (v,) in comps:
        r = set()
        for w in succ[v]:
            r.add(w)
            r |= reach[w]
        reach[v] = r
    reduced = set()
    for a, b in edges:
        if not any(b in reach[w] for w in succ[a] if w != b):
            reduced.add((a, b))
    return reduced


@dataclass(frozen=True, eq=False)
class MorseDecomposition:
    """Morse sets named MS0, MS1, ... by decreasing size.

    ``order`` and ``reduced`` hold ``(higher, lower)`` index pairs: higher
    reaches lower through the digraph.
    """

    morse_sets: tuple[tuple[int, ...], ...]
    order: frozenset
    reduced: tuple[tuple[int, int], ...]
    digraph: Digraph

    @property
    def names(self) -> list[str]:
        return [f"MS{k}" for k in range(len(self.morse_sets))]

    @property
    def sizes(self) -> list[int]:
        return [len(s) for s in self.morse_sets]

    def __len__(self):
        return len(self.morse_sets)

    def to_dict(self) -> dict:
        return {"sets": [list(s) for s in self.morse_sets],
                "order": sorted([list(p) for p in self.order]),
                "reduced": [list(p) for p in self.reduced]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _is_nontrivial(comp, g: Digraph) -> bool:
    if len(comp) > 1:
        return True
    (v,) = comp
    return g.has_edge(v, v)


def morse_decomposition(g: Digraph) -> MorseDecomposition:
    comps, owner, succ = _condensation(g)
    keep = [k for k, c in enumerate(comps) if _is_nontrivial(c, g)]
    keep.sort(key=lambda k: (-len(comps[k]), min(comps[k])))
    reach = _reach_bits(succ)
    order = set()
    for hi, kh in enumerate(keep):
        for lo, kl in enumerate(keep):
            if hi != lo and (reach[kh] >> kl) & 1:
                order.add((hi, lo))
    reduced = transitive_reduction(order)
    sets = tuple(tuple(sorted(comps[k])) for k in keep)
    return MorseDecomposition(sets, frozenset(order), tuple(sorted(reduced)), g)


def combinatorial_attractors(md: MorseDecomposition) -> list[str]:
    """Names of the minimal Morse sets (sinks of the Morse graph)."""
    higher = {hi for hi, _ in md.reduced}
    return [name for k, name in enumerate(md.names) if k not in higher]


@dataclass(frozen=True)
class MorseNode:
    name: str
    size: int
    barycenter: tuple[float, ...]


@dataclass(frozen=True)
class MorseGraph:
    nodes: tuple[MorseNode, ...]
    edges: tuple[tuple[int, int], ...]


def morse_graph(md: MorseDecomposition, grid: GridSpec) -> MorseGraph:
    nodes = tuple(
        MorseNode(name, len(cells), tuple(float(x) for x in barycenter(cells, grid)))
        for name, cells in zip(md.names, md.morse_sets))
    return MorseGraph(nodes, md.reduced)


def _depths(n, edges) -> list[int]:
    """Longest-path depth from the sources of a DAG."""
    preds = [[] for _ in range(n)]
    for a, b in edges:
        preds[b].append(a)
    depth: list[int | None] = [None] * n

    def visit(v):
        if depth[v] is None:
            depth[v] = 1 + max((visit(p) for p in preds[v]), default=-1)
        return depth[v]

    for v in range(n):
        visit(v)
    return depth


def export_dot(mg: MorseGraph) -> str:
    """Graphviz text; nodes labelled ``MSk (size)`` and ranked by depth."""
    lines = ["digraph MorseGraph {", "  rankdir=TB;", "  node [shape=ellipse];"]
    for node in mg.nodes:
        style = ", style=filled" if node.size >= 2 else ""
        lines.append(f'  {node.name} [label="{node.name} ({node.size})"{style}];')
    depth = _depths(len(mg.nodes), mg.edges)
    for level in sorted(set(depth)):
        members = " ".join(mg.nodes[k].name + ";" for k in range(len(mg.nodes))
                           if depth[k] == level)
        lines.append(f"  {{ rank=same; {members} }}")
    for a, b in mg.edges:
        lines.append(f"  {mg.nodes[a].name} -> {mg.nodes[b].name};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def witness_path(g: Digraph, sources, targets) -> list[int] | None:
    """Shortest node path in ``g`` from any of ``sources`` to any of ``targets``."""
    targets = set(targets)
    parent = {s: None for s in sources}
    queue = list(sources)
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        for w in g.successors[v]:
            if w in parent:
                continue
            parent[w] = v
            if w in targets:
                path = [w]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(w)
    return None


def barycenters(md: MorseDecomposition, grid: GridSpec) -> np.ndarray:
    return np.array([barycenter(cells, grid) for cells in md.morse_sets]).reshape(
        len(md), grid.m)
