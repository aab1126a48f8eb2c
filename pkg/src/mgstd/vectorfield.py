"""Shift-averaged vector fields summarizing Morse-graph connections.

For every grid shift the Morse graph is computed, each connection between
Morse sets becomes an arrow placed between their barycenters, arrows are
averaged per cell of the shifted grid, and finally everything is averaged
again on the unshifted ("canonical") grid.

Arrow lengths are in cell units: multiply by ``h`` to draw in data units.
"""
from __future__ import annotations

import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ParameterError
from .grid import DEFAULT_MAX_HALF_WIDTH, SNAP_TOL, GridSpec, build_grid
from .graph import MorseDecomposition, barycenters, morse_decomposition
from .transitions import build_multivalued_map, count_transitions

log = logging.getLogger(__name__)

SOURCE_MAJOR = "source-major"
TARGET_MAJOR = "target-major"


@dataclass(frozen=True)
class EdgeVector:
    center: np.ndarray
    vector: np.ndarray
    source: str
    target: str
    source_size: int
    target_size: int


@dataclass(frozen=True, eq=False)
class CellField:
    """Vectors attached to cells of one grid, with their support counts."""

    grid: GridSpec
    cells: np.ndarray    # sorted linearized ids
    vectors: np.ndarray  # (k, m)
    support: np.ndarray  # (k,)

    def __len__(self):
        return self.cells.size

    def centers(self) -> np.ndarray:
        return self.grid.cell_center(self.cells) if self.cells.size else \
            np.empty((0, self.grid.m))

    def as_dict(self) -> dict[int, np.ndarray]:
        return dict(zip(self.cells.tolist(), self.vectors))

    def to_tsv(self) -> str:
        """One row per supported cell: center, vector (cell units), support."""
        axes = "xyz" if self.grid.m <= 3 else [str(k + 1) for k in range(self.grid.m)]
        header = [f"q{a}" for a in axes[:self.grid.m]] + \
                 [f"w{a}" for a in axes[:self.grid.m]] + ["support"]
        rows = ["\t".join(header)]
        for q, w, s in zip(self.centers().tolist(), self.vectors.tolist(),
                           self.support.tolist()):
            rows.append("\t".join([repr(x) for x in q] + [repr(x) for x in w] + [str(s)]))
        return "\n".join(rows) + "\n"


# The canonical-grid result has the same shape as a per-shift field.
VectorField = CellField


def _empty_field(grid) -> CellField:
    return CellField(grid, np.empty(0, dtype=np.int64), np.empty((0, grid.m)),
                     np.empty(0, dtype=np.int64))


def edge_vectors(md: MorseDecomposition, grid: GridSpec, interp=SOURCE_MAJOR,
                 full_order=False) -> list[EdgeVector]:
    """One arrow per Morse-graph edge ``MSi -> MSj``.

    The arrow points from the barycenter of MSi toward that of MSj, has
    length ``(#MSi + #MSj) / 2`` and is centered at the point dividing the
    segment in ratio ``#MSi : #MSj`` (``source-major``) or ``#MSj : #MSi``
    (``target-major``).
    """
    if interp not in (SOURCE_MAJOR, TARGET_MAJOR):
        raise ParameterError(f"unknown interpolation {interp!r}")
    if len(md) == 0:
        return []
    pts = barycenters(md, grid)
    sizes = md.sizes
    names = md.names
    pairs = sorted(md.order) if full_order else md.reduced
    out, skipped = [], []
    for i, j in pairs:
        diff = pts[j] - pts[i]
        dist = float(np.linalg.norm(diff))
        if dist == 0.0:
            skipped.append(f"{names[i]} -> {names[j]}")
            continue
        si, sj = sizes[i], sizes[j]
        frac = si / (si + sj) if interp == SOURCE_MAJOR else sj / (si + sj)
        out.append(EdgeVector(center=pts[i] + frac * diff,
                              vector=diff / dist * ((si + sj) / 2),
                              source=names[i], target=names[j],
                              source_size=si, target_size=sj))
    if skipped:
        log.warning("coincident barycenters, edges skipped: %s", ", ".join(skipped))
    return out


def _average_into(grid: GridSpec, centers, vectors) -> CellField:
    if len(centers) == 0:
        return _empty_field(grid)
    centers = np.asarray(centers, dtype=float).reshape(-1, grid.m)
    vectors = np.asarray(vectors, dtype=float).reshape(-1, grid.m)
    inside = grid.contains(centers)
    if not inside.all():
        log.warning("%d arrow centers outside the grid domain skipped", int((~inside).sum()))
        centers, vectors = centers[inside], vectors[inside]
        if len(centers) == 0:
            return _empty_field(grid)
    cell = grid.locate(centers)
    cells, inverse, support = np.unique(cell, return_inverse=True, return_counts=True)
    sums = np.zeros((cells.size, grid.m))
    np.add.at(sums, inverse, vectors)
    return CellField(grid, cells.astype(np.int64), sums / support[:, None],
                     support.astype(np.int64))


def shift_field(vectors: list[EdgeVector], grid: GridSpec) -> CellField:
    """Per-cell mean of the arrows whose centers fall in each cell of ``grid``."""
    return _average_into(grid, [v.center for v in vectors], [v.vector for v in vectors])


def canonical_average(per_shift_fields, max_half_width=math.inf) -> CellField:
    """Average per-shift cell vectors over the cells of the unshifted grid.

    Every per-shift cell vector counts once, placed at the center of its
    shifted cell.  The canonical grid is the smallest unshifted grid holding
    all those centers.
    """
    fields = list(per_shift_fields)
    if not fields:
        raise ParameterError("no per-shift fields to average")
    h, m = fields[0].grid.h, fields[0].grid.m
    for f in fields:
        if f.grid.m != m or not math.isclose(f.grid.h, h, rel_tol=1e-12):
            raise ParameterError("all shifted fields must share h and m")
    centers = [f.centers() for f in fields if len(f)]
    vectors = [f.vectors for f in fields if len(f)]
    centers = np.concatenate(centers) if centers else np.empty((0, m))
    vectors = np.concatenate(vectors) if vectors else np.empty((0, m))
    bound = float(np.abs(centers).max()) if len(centers) else 0.0
    canon = build_grid(m, h, (0.0,) * m, bound, max_half_width)
    if len(centers) and np.any(centers >= canon.upper - SNAP_TOL * h):
        # a center on the closed top face would share the last cell with its
        # lower neighbour; give it a cell of its own
        canon = GridSpec(m, h, canon.L + h, canon.delta)
    return _average_into(canon, centers, vectors)


def shift_lattice(h, increment, m) -> list[tuple[float, ...]]:
    """All shift vectors with coordinates ``0, inc, 2 inc, ... < h``."""
    if not 0 < increment <= h:
        raise ParameterError(f"shift increment must lie in (0, h], got {increment}")
    steps = [round(k * increment, 12) for k in range(int(math.ceil(h / increment)) + 1)]
    steps = [s for s in steps if s < h - 1e-12]
    return [tuple(p) for p in itertools.product(steps, repeat=m)]


@dataclass(frozen=True, eq=False)
class ShiftResult:
    delta: tuple[float, ...]
    grid: GridSpec
    decomposition: MorseDecomposition
    vectors: list[EdgeVector]
    field: CellField


@dataclass(frozen=True, eq=False)
class MgstdResult:
    field: CellField
    shifts: list[ShiftResult]
    h: float
    rho: float
    mu_star: int


def decompose(d: Dataset, h, rho, mu_star, delta=None,
              max_half_width=DEFAULT_MAX_HALF_WIDTH) -> tuple[GridSpec, MorseDecomposition]:
    """Grid, counts, filtered map and Morse decomposition for one shift."""
    grid = build_grid(d.m, h, delta, d.bound(), max_half_width)
    tc = count_transitions(d, grid)
    return grid, morse_decomposition(build_multivalued_map(tc, rho, mu_star))


def _one_shift(d, delta, h, rho, mu_star, interp, full_order, max_half_width):
    grid, md = decompose(d, h, rho, mu_star, delta, max_half_width)
    vecs = edge_vectors(md, grid, interp, full_order)
    return ShiftResult(tuple(delta), grid, md, vecs, shift_field(vecs, grid))


_WORKER_DATA = None


def _init_worker(d):
    global _WORKER_DATA
    _WORKER_DATA = d


def _call_with_data(args):
    fn, rest = args
    return fn(_WORKER_DATA, *rest)


def map_shifts(fn, d: Dataset, arglists, jobs=1) -> list:
    """``[fn(d, *args) for args in arglists]``, optionally in worker processes.

    Results come back in input order whatever the completion order.
    """
    arglists = list(arglists)
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(arglists) < 2:
        return [fn(d, *args) for args in arglists]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(d,)) as pool:
        chunk = max(1, len(arglists) // (4 * jobs))
        return list(pool.map(_call_with_data, [(fn, a) for a in arglists],
                             chunksize=chunk))


def run_mgstd(d: Dataset, h, rho, mu_star, shift_increment=0.01, interp=SOURCE_MAJOR,
              full_order=False, jobs=1,
              max_half_width=DEFAULT_MAX_HALF_WIDTH) -> MgstdResult:
    """Sweep all grid shifts at a fixed threshold and average the arrows."""
    if mu_star < 1:
        raise ParameterError(f"threshold must be >= 1, got {mu_star}")
    if not rho >= 1:
        raise ParameterError(f"superiority parameter must be >= 1, got {rho}")
    deltas = shift_lattice(h, shift_increment, d.m)
    shifts = map_shifts(_one_shift, d, [
        (delta, h, rho, mu_star, interp, full_order, max_half_width) for delta in deltas],
        jobs)
    field = canonical_average([s.field for s in shifts])
    return MgstdResult(field, shifts, h, rho, int(mu_star))
