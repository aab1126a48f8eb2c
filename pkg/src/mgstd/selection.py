"""Choosing the transition threshold and the grid size from the data."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ParameterError, SelectionError
from .grid import DEFAULT_MAX_HALF_WIDTH, GridSpec, build_grid
from .graph import morse_decomposition
from .transitions import admissible_pairs, build_multivalued_map, count_transitions
from .vectorfield import map_shifts, shift_lattice

log = logging.getLogger(__name__)

COVERAGE_CAP = 100
DEFAULT_BAND = (10, 20)


@dataclass(frozen=True)
class MuStarSelection:
    """Outcome of the threshold scan; ``mu_star`` is None when nothing qualified."""

    mu_star: int | None
    thresholds: list[int]
    ratios: list[float]

    @property
    def found(self) -> bool:
        return self.mu_star is not None

    def to_tsv(self) -> str:
        return "mu_star\tratio\n" + "".join(
            f"{t}\t{r!r}\n" for t, r in zip(self.thresholds, self.ratios))


def size_ratio(md) -> float:
    """Size of the largest Morse set over the second largest (inf if < 2 sets)."""
    sizes = md.sizes
    if len(sizes) < 2:
        return math.inf
    return sizes[0] / sizes[1]


def select_mu_star(d: Dataset, grid: GridSpec, rho, A=5.0, mu_max=100,
                   full_curve=True) -> MuStarSelection:
    """Smallest threshold at which the size ratio of the two largest Morse sets drops below ``A``.

    The counts do not depend on the threshold, so they are computed once and
    only the edge filter and decomposition are repeated.  With
    ``full_curve=False`` the scan stops at the first qualifying threshold.
    """
    if not A > 1:
        raise ParameterError(f"ratio bound A must exceed 1, got {A}")
    if mu_max < 1:
        raise ParameterError(f"mu_max must be >= 1, got {mu_max}")
    tc = count_transitions(d, grid)
    adm = admissible_pairs(tc, rho)
    top = int(tc.mu[adm].max()) if adm.any() else 0
    thresholds, ratios = [], []
    chosen = None
    for mu in range(1, mu_max + 1):
        if mu > top:
            r = math.inf  # no edges left, hence no Morse sets
        else:
            r = size_ratio(morse_decomposition(build_multivalued_map(tc, rho, mu, adm)))
        thresholds.append(mu)
        ratios.append(r)
        if chosen is None and r < A:
            chosen = mu
            if not full_curve:
                break
    return MuStarSelection(chosen, thresholds, ratios)


def _shift_mu_star(d, delta, h, rho, A, mu_max, max_half_width):
    grid = build_grid(d.m, h, delta, d.bound(), max_half_width)
    return select_mu_star(d, grid, rho, A, mu_max, full_curve=False).mu_star


@dataclass(frozen=True)
class AveragedMuStar:
    value: int
    mean: float
    per_shift: list[tuple[tuple[float, ...], int | None]] = field(repr=False)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def select_mu_star_averaged(d: Dataset, h, rho, A=5.0, shift_increment=0.01, mu_max=100,
                            jobs=1, max_half_width=DEFAULT_MAX_HALF_WIDTH) -> AveragedMuStar:
    """Per-shift thresholds averaged over the shift lattice, rounded half up."""
    deltas = shift_lattice(h, shift_increment, d.m)
    values = map_shifts(_shift_mu_star, d,
                        [(delta, h, rho, A, mu_max, max_half_width) for delta in deltas], jobs)
    per_shift = list(zip(deltas, values))
    ok = [v for v in values if v is not None]
    if len(ok) < len(values):
        log.warning("%d of %d shifts found no threshold below mu_max=%d; excluded",
                    len(values) - len(ok), len(values), mu_max)
    if not ok:
        raise SelectionError(f"no shift yields a threshold up to mu_max={mu_max}")
    mean = float(np.mean(ok))
    return AveragedMuStar(round_half_up(mean), mean, per_shift)


def grid_coverage(d: Dataset, h, n_max=COVERAGE_CAP,
                  max_half_width=math.inf) -> np.ndarray:
    """``h^m * #{cells with at least n points}`` for ``n = 1..n_max`` (unshifted grid)."""
    if not h > 0:
        raise ParameterError(f"cell size must be positive, got {h}")
    if d.n_points == 0:
        return np.zeros(n_max)
    grid = build_grid(d.m, h, None, d.bound(), max_half_width)
    _, nu = np.unique(grid.locate(d.points), return_counts=True)
    n = np.arange(1, n_max + 1)
    counts = (nu[None, :] >= n[:, None]).sum(axis=1)
    return h ** d.m * counts


def recommend_h(d: Dataset, candidates, band=DEFAULT_BAND, n_max=COVERAGE_CAP,
                max_half_width=math.inf) -> tuple[float, dict[float, np.ndarray]]:
    """Candidate cell size maximizing the mean coverage over ``n`` in ``band``.

    Returns the winner and every candidate's full coverage curve.
    """
    candidates = list(candidates)
    if not candidates:
        raise ParameterError("no candidate cell sizes")
    lo, hi = band
    if not 1 <= lo <= hi <= n_max:
        raise ParameterError(f"band {band} not inside [1, {n_max}]")
    table = {h: grid_coverage(d, h, n_max, max_half_width) for h in candidates}
    score = {h: float(curve[lo - 1:hi].mean()) for h, curve in table.items()}
    best = max(candidates, key=lambda h: score[h])
    return best, table
