"""Shifted cubical grids on a box in R^m.

A grid of cell size ``h`` covers ``prod_l [-L + delta_l, L + delta_l]``.
Cells are half-open ``[a, a + h)`` on every axis, except that the upper
face of the domain belongs to the last cell.  Cells are addressed either by
per-axis integer coordinates ``c`` (``0 <= c_l < 2L/h``) or by their
row-major linearization, which is what the digraph code uses as node id.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

# Values this close to a cell boundary (in units of h) snap onto it.
SNAP_TOL = 1e-12

DEFAULT_MAX_HALF_WIDTH = 4.0


@dataclass(frozen=True)
class GridSpec:
    m: int
    h: float
    L: float
    delta: tuple[float, ...]

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"dimension must be positive, got {self.m}")
        if not self.h > 0:
            raise ParameterError(f"cell size must be positive, got {self.h}")
        delta = tuple(float(d) for d in self.delta)
        object.__setattr__(self, "delta", delta)
        if len(delta) != self.m:
            raise ParameterError(f"expected {self.m} shifts, got {len(delta)}")
        for d in delta:
            if not 0.0 <= d < self.h:
                raise ParameterError(f"shift {d} outside [0, {self.h})")
        ratio = self.L / self.h
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ParameterError(
                f"half-width {self.L} is not a positive multiple of h={self.h}")

    @property
    def half_cells(self) -> int:
        return int(round(self.L / self.h))

    @property
    def cells_per_axis(self) -> int:
        return 2 * self.half_cells

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells_per_axis,) * self.m

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis ** self.m

    @property
    def lower(self) -> np.ndarray:
        return -self.L + np.asarray(self.delta)

    @property
    def upper(self) -> np.ndarray:
        return self.L + np.asarray(self.delta)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = (pts - self.lower) / self.h
        n = self.cells_per_axis
        return np.all((t >= -SNAP_TOL) & (t <= n + SNAP_TOL), axis=1)

    def locate_coords(self, points) -> np.ndarray:
        """Per-axis cell coordinates of each row of ``points`` (shape (n, m))."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.m)
        t = (pts - self.lower) / self.h
        k = np.rint(t)
        t = np.where(np.abs(t - k) < SNAP_TOL, k, t)
        n = self.cells_per_axis
        bad = ~np.all((t >= 0) & (t <= n), axis=1)
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise DomainError(
                f"point {pts[idx].tolist()} outside grid domain "
                f"{list(zip(self.lower.tolist(), self.upper.tolist()))}")
        c = np.floor(t).astype(np.int64)
        np.minimum(c, n - 1, out=c)
        return c

    def locate(self, points) -> np.ndarray:
        """Linearized cell ids of each row of ``points``."""
        return self.linearize(self.locate_coords(points))

    def linearize(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.m)
        return np.ravel_multi_index(tuple(coords.T), self.shape).astype(np.int64)

    def unravel(self, cells) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64).reshape(-1)
        return np.stack(np.unravel_index(cells, self.shape), axis=1).astype(np.int64)

    def cell_lower(self, cells) -> np.ndarray:
        return self.lower + self.unravel(cells) * self.h

    def cell_center(self, cells) -> np.ndarray:
        return self.lower + (self.unravel(cells) + 0.5) * self.h

    def lattice_coords(self, cells) -> np.ndarray:
        """Cell coordinates relative to the lattice origin ``delta``.

        Unlike ``unravel`` these do not depend on the half-width ``L``, so
        they are comparable between grids that differ only in extent.
        """
        return self.unravel(cells) - self.half_cells

    def to_dict(self) -> dict:
        return {"m": self.m, "h": self.h, "L": self.L, "delta": list(self.delta)}

    @classmethod
    def from_dict(cls, data: dict) -> GridSpec:
        return cls(int(data["m"]), float(data["h"]), float(data["L"]),
                   tuple(data["delta"]))


def build_grid(m, h, delta=None, data_bound=0.0,
               max_half_width=DEFAULT_MAX_HALF_WIDTH) -> GridSpec:
    """Smallest shifted grid whose domain contains ``[-data_bound, data_bound]^m``.

    ``L`` is the least positive multiple of ``h`` with
    ``-L + delta_l <= -data_bound`` and ``L + delta_l >= data_bound``.
    """
    if not h > 0:
        raise ParameterError(f"cell size must be positive, got {h}")
    delta = tuple(float(d) for d in (delta if delta is not None else (0.0,) * m))
    if len(delta) != m:
        raise ParameterError(f"expected {m} shifts, got {len(delta)}")
    for d in delta:
        if not 0.0 <= d < h:
            raise ParameterError(f"shift {d} outside [0, {h})")
    if not data_bound < max_half_width:
        raise ParameterError(
            f"data bound {data_bound} not below enclosing half-width {max_half_width}")

    k = max(1, math.ceil((data_bound + max(delta)) / h - 1e-9))
    while not all(-k * h + d <= -data_bound and k * h + d >= data_bound for d in delta):
        k += 1
    L = k * h
    if L > max_half_width + 1e-9:
        raise ParameterError(
            f"required half-width {L} exceeds enclosing half-width {max_half_width}")
    return GridSpec(m, h, L, delta)


def locate(point, grid: GridSpec) -> tuple[int, ...]:
    """Cell coordinates of a single point."""
    return tuple(int(c) for c in grid.locate_coords(np.asarray(point, dtype=float))[0])


def barycenter(cells, grid: GridSpec) -> np.ndarray:
    """Mean of the centers of ``cells`` (linearized ids)."""
    cells = np.asarray(list(cells), dtype=np.int64)
    if cells.size == 0:
        raise ParameterError("barycenter of an empty cell set")
    return grid.cell_center(cells).mean(axis=0)
