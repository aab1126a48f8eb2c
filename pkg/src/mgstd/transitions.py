"""Occupancy and transition counts on a grid, and the maps built from them.

Counts are exact integers kept in sorted arrays keyed by linearized cell id.
Transition probabilities are only ever formed on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dataset import Dataset, source_mask
from .errors import DomainError, ParameterError
from .grid import GridSpec

FORWARD = "forward"
BACKWARD = "backward"
COMPARABLE = "comparable"
NONE = "none"


@dataclass(frozen=True, eq=False)
class TransitionCounts:
    grid: GridSpec
    cells: np.ndarray  # occupied cells, sorted
    nu: np.ndarray     # occupancy of each entry of ``cells``
    src: np.ndarray    # pair sources, sorted by (src, dst)
    dst: np.ndarray
    mu: np.ndarray     # count of each (src, dst) pair, all >= 1

    @cached_property
    def _pair_keys(self) -> np.ndarray:
        return self.src * self.grid.n_cells + self.dst

    def occupancy(self, i) -> int:
        k = np.searchsorted(self.cells, i)
        if k < self.cells.size and self.cells[k] == i:
            return int(self.nu[k])
        return 0

    def count(self, i, j) -> int:
        key = i * self.grid.n_cells + j
        keys = self._pair_keys
        k = np.searchsorted(keys, key)
        if k < keys.size and keys[k] == key:
            return int(self.mu[k])
        return 0

    @property
    def total_pairs(self) -> int:
        return int(self.mu.sum())

    def reverse_counts(self) -> np.ndarray:
        """``mu[j -> i]`` aligned with every stored pair ``i -> j`` (0 if absent)."""
        keys = self._pair_keys
        if keys.size == 0:
            return np.zeros(0, dtype=np.int64)
        rev = self.dst * self.grid.n_cells + self.src
        k = np.minimum(np.searchsorted(keys, rev), keys.size - 1)
        return np.where(keys[k] == rev, self.mu[k], 0)

    def nu_of(self, cells) -> np.ndarray:
        k = np.searchsorted(self.cells, cells)
        return self.nu[k]

    def to_tsv(self) -> tuple[str, str]:
        """``(pairs, occupancy)`` TSV texts: ``i_cell j_cell mu`` and ``i_cell nu``."""
        pairs = ["i_cell\tj_cell\tmu"] + [
            f"{i}\t{j}\t{c}" for i, j, c in zip(self.src.tolist(), self.dst.tolist(),
                                                 self.mu.tolist())]
        occ = ["i_cell\tnu"] + [
            f"{i}\t{c}" for i, c in zip(self.cells.tolist(), self.nu.tolist())]
        return "\n".join(pairs) + "\n", "\n".join(occ) + "\n"


@dataclass(frozen=True, eq=False)
class Digraph:
    """Directed graph on linearized cell ids; self-loops allowed."""

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    grid: GridSpec | None = None

    def __post_init__(self):
        nodes = tuple(sorted({int(v) for v in self.nodes}))
        edges = tuple(sorted({(int(a), int(b)) for a, b in self.edges}))
        node_set = set(nodes)
        for a, b in edges:
            if a not in node_set or b not in node_set:
                raise ParameterError(f"edge ({a}, {b}) has an endpoint outside the node set")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @cached_property
    def successors(self) -> dict[int, list[int]]:
        succ = {v: [] for v in self.nodes}
        for a, b in self.edges:
            succ[a].append(b)
        return succ

    def has_edge(self, a, b) -> bool:
        return (a, b) in self.edge_set

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def to_tsv(self) -> str:
        return "source\ttarget\n" + "".join(f"{a}\t{b}\n" for a, b in self.edges)

    def to_dot(self, name="F") -> str:
        lines = [f"digraph {name} {{"]
        lines += [f"  {v};" for v in self.nodes]
        lines += [f"  {a} -> {b};" for a, b in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"


def count_transitions(d: Dataset, grid: GridSpec) -> TransitionCounts:
    """Occupancy over all of D and pair counts over consecutive points."""
    if d.n_points and d.m != grid.m:
        raise ParameterError(f"dataset dimension {d.m} != grid dimension {grid.m}")
    try:
        cell = grid.locate(d.points) if d.n_points else np.empty(0, dtype=np.int64)
    except DomainError:
        inside = grid.contains(d.points)
        k = int(np.flatnonzero(~inside)[0])
        sid = d.ids[int(d.series_index()[k])]
        raise DomainError(
            f"point {d.points[k].tolist()} of series {sid!r} outside grid domain") from None

    cells, nu = np.unique(cell, return_counts=True)
    idx = np.flatnonzero(source_mask(d))
    keys = cell[idx] * grid.n_cells + cell[idx + 1]
    ukeys, mu = np.unique(keys, return_counts=True)
    src, dst = np.divmod(ukeys, grid.n_cells)
    return TransitionCounts(grid, cells.astype(np.int64), nu.astype(np.int64),
                            src.astype(np.int64), dst.astype(np.int64),
                            mu.astype(np.int64))


def transition_probability(tc: TransitionCounts, i, j) -> float:
    nu_i = tc.occupancy(i)
    if nu_i == 0:
        raise ParameterError(f"transition probability from empty cell {i} is undefined")
    return tc.count(i, j) / nu_i


def _superiority_ratio(mu_ij, mu_ji, nu_i, nu_j):
    """``T_ij / T_ji``, with a zero opposing count giving +inf."""
    if mu_ji == 0:
        return math.inf
    return (mu_ij * nu_j) / (mu_ji * nu_i)


def _check_rho(rho):
    if not rho >= 1:
        raise ParameterError(f"superiority parameter must be >= 1, got {rho}")


def classify_pair(tc: TransitionCounts, i, j, rho) -> str:
    """Dominant direction between distinct cells ``i`` and ``j``."""
    _check_rho(rho)
    if i == j:
        raise ParameterError("classify_pair needs two distinct cells")
    mu_ij, mu_ji = tc.count(i, j), tc.count(j, i)
    if mu_ij == 0 and mu_ji == 0:
        return NONE
    if mu_ij == 0:
        return BACKWARD
    ratio = _superiority_ratio(mu_ij, mu_ji, tc.occupancy(i), tc.occupancy(j))
    if ratio > rho:
        return FORWARD
    if ratio < 1.0 / rho:
        return BACKWARD
    return COMPARABLE


def admissible_pairs(tc: TransitionCounts, rho) -> np.ndarray:
    """Mask over stored pairs that survive the superiority test (threshold aside).

    Self pairs are always admissible; ``i -> j`` is admissible when it is
    forward or comparable.  Vectorized equivalent of :func:`classify_pair`.
    """
    _check_rho(rho)
    mu_ji = tc.reverse_counts()
    nu_i = tc.nu_of(tc.src).astype(float)
    nu_j = tc.nu_of(tc.dst).astype(float)
    with np.errstate(divide="ignore"):
        ratio = np.where(mu_ji > 0, (tc.mu * nu_j) / (np.maximum(mu_ji, 1) * nu_i), np.inf)
    return (tc.src == tc.dst) | (ratio >= 1.0 / rho)


def build_multivalued_map(tc: TransitionCounts, rho, mu_star,
                          admissible: np.ndarray | None = None) -> Digraph:
    """Filtered map: keep ``i -> j`` when admissible and ``mu_ij >= mu_star``."""
    _check_rho(rho)
    if mu_star < 1:
        raise ParameterError(f"threshold must be >= 1, got {mu_star}")
    if admissible is None:
        admissible = admissible_pairs(tc, rho)
    keep = admissible & (tc.mu >= mu_star)
    return Digraph(tuple(tc.cells.tolist()),
                   tuple(zip(tc.src[keep].tolist(), tc.dst[keep].tolist())), tc.grid)


def build_deterministic_map(d: Dataset, grid: GridSpec) -> Digraph:
    """Edge ``i -> j`` for every observed pair from cell i to cell j."""
    if d.n_points == 0:
        return Digraph((), (), grid)
    cell = grid.locate(d.points)
    idx = np.flatnonzero(source_mask(d))
    edges = set(zip(cell[idx].tolist(), cell[idx + 1].tolist()))
    return Digraph(tuple(np.unique(cell).tolist()), tuple(edges), grid)
