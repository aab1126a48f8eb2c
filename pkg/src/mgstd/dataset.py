"""Collections of finite time series and their transition pairs.

All series of a :class:`Dataset` share one point array; ``offsets`` marks
where each series starts, so datasets with a million two-point series stay
cheap to build and to count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError, ParseError


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray   # (n_points, m), all series concatenated
    offsets: np.ndarray  # (n_series + 1,), series k is points[offsets[k]:offsets[k+1]]
    ids: tuple

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise DataError(f"points must be a 2-d array, got shape {pts.shape}")
        offsets = np.asarray(self.offsets, dtype=np.int64)
        if offsets.ndim != 1 or offsets.size < 1 or offsets[0] != 0 \
                or offsets[-1] != len(pts) or np.any(np.diff(offsets) < 0):
            raise DataError("offsets do not partition the point array")
        if len(self.ids) != offsets.size - 1:
            raise DataError(f"{len(self.ids)} ids for {offsets.size - 1} series")
        if not np.all(np.isfinite(pts)):
            raise DataError("dataset contains non-finite values")
        pts.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "ids", tuple(self.ids))

    @classmethod
    def from_series(cls, series, ids=None, m=None) -> Dataset:
        """Build from a sequence of (n_k, m) arrays; 1-d arrays are read as m=1."""
        arrays = []
        for s in series:
            a = np.asarray(s, dtype=float)
            if a.ndim == 1:
                a = a.reshape(-1, 1) if (m in (None, 1)) else a.reshape(-1, m)
            arrays.append(a)
        if m is None:
            m = arrays[0].shape[1] if arrays else 1
        for k, a in enumerate(arrays):
            if a.shape[1] != m:
                raise DataError(f"series {k} has dimension {a.shape[1]}, expected {m}")
        lengths = [len(a) for a in arrays]
        offsets = np.concatenate([[0], np.cumsum(lengths, dtype=np.int64)])
        points = np.concatenate(arrays) if arrays else np.empty((0, m))
        if ids is None:
            ids = [str(k) for k in range(len(arrays))]
        return cls(points, offsets, tuple(ids))

    @property
    def m(self) -> int:
        return self.points.shape[1]

    @property
    def n_series(self) -> int:
        return self.offsets.size - 1

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def series(self, k) -> np.ndarray:
        return self.points[self.offsets[k]:self.offsets[k + 1]]

    def __iter__(self):
        for k in range(self.n_series):
            yield self.ids[k], self.series(k)

    def __len__(self):
        return self.n_series

    def bound(self) -> float:
        """Largest coordinate magnitude over all points (0 for an empty dataset)."""
        return float(np.abs(self.points).max()) if self.n_points else 0.0

    def series_index(self) -> np.ndarray:
        """Series number of every point."""
        return np.repeat(np.arange(self.n_series), self.lengths)


def transition_pairs(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Consecutive pairs ``(y_n, y_{n+1})`` within each series.

    Returns ``(sources, targets)``, two ``(P, m)`` arrays in series order,
    ``P = sum(len - 1)``.  Sources are exactly the points of D' (every point
    except each series' last).
    """
    src = source_mask(d)
    idx = np.flatnonzero(src)
    return d.points[idx], d.points[idx + 1]


def source_mask(d: Dataset) -> np.ndarray:
    """Boolean mask of points that have a successor in their series."""
    mask = np.ones(d.n_points, dtype=bool)
    ends = d.offsets[1:] - 1
    mask[ends[d.lengths > 0]] = False
    return mask


def standardize(d: Dataset) -> Dataset:
    """Pooled zero-mean, unit-variance coordinates (population variance)."""
    if d.n_points == 0:
        raise DataError("cannot standardize an empty dataset")
    mean = d.points.mean(axis=0)
    std = d.points.std(axis=0)
    for ell, s in enumerate(std):
        if not s > 0:
            raise DataError(f"coordinate {ell + 1} has zero variance")
    return Dataset((d.points - mean) / std, d.offsets, d.ids)


def pca_project(raw: Dataset, m: int) -> Dataset:
    """Standardized scores on the top-``m`` principal axes of the pooled covariance.

    Each axis is signed so that its largest-magnitude loading is positive.
    """
    if m < 1 or raw.m < m:
        raise ParameterError(f"cannot project dimension {raw.m} data onto {m} components")
    if raw.n_points < 2:
        raise DataError("PCA needs at least two points")
    centered = raw.points - raw.points.mean(axis=0)
    cov = centered.T @ centered / raw.n_points
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = max(float(evals[0]), 0.0)
    rank = int(np.sum(evals > 1e-12 * scale)) if scale > 0 else 0
    if rank < m:
        raise DataError(f"covariance has rank {rank} < {m}")
    axes = evecs[:, :m]
    pivot = np.argmax(np.abs(axes), axis=0)
    axes = axes * np.sign(axes[pivot, np.arange(m)])
    return standardize(Dataset(centered @ axes, raw.offsets, raw.ids))


def reindex_interleave(d: Dataset, stride: int) -> Dataset:
    """Split every series into ``stride`` subsampled series.

    Series ``k`` yields series ``k:c`` for ``c = 0..stride-1`` holding every
    ``stride``-th point starting at offset ``c``.  Nothing is padded, so the
    offsets may end up with different lengths.
    """
    if stride < 1:
        raise ParameterError(f"stride must be >= 1, got {stride}")
    if stride == 1:
        return d
    short = np.flatnonzero(d.lengths < stride)
    if short.size:
        raise DataError(f"series {d.ids[short[0]]} shorter than stride {stride}")
    series, ids = [], []
    for sid, pts in d:
        for c in range(stride):
            series.append(pts[c::stride])
            ids.append(f"{sid}:{c}")
    return Dataset.from_series(series, ids=ids, m=d.m)


# --- CSV -------------------------------------------------------------------

CSV_HEADER_PREFIX = "series_id"


def ingest_csv(stream) -> Dataset:
    """Parse rows ``series_id, step, y1, ..., ym``.

    A leading header row starting with ``series_id`` is skipped.  Rows may
    appear in any order; each series is sorted by step and steps must then
    be consecutive integers.
    """
    if isinstance(stream, (str, Path)):
        with open(stream, newline="") as fh:
            return ingest_csv(fh)

    rows: dict[str, list[tuple[int, int, list[float]]]] = {}
    order: list[str] = []
    m = None
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if lineno == 1 and row[0].strip() == CSV_HEADER_PREFIX:
            continue
        if len(row) < 3:
            raise ParseError(f"expected at least 3 columns, got {len(row)}", lineno)
        if m is None:
            m = len(row) - 2
        elif len(row) - 2 != m:
            raise ParseError(f"expected {m} coordinates, got {len(row) - 2}", lineno)
        sid = row[0].strip()
        try:
            step = int(row[1])
        except ValueError:
            raise ParseError(f"step {row[1]!r} is not an integer", lineno) from None
        try:
            ys = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in ys):
            raise ParseError("non-finite coordinate", lineno)
        if sid not in rows:
            rows[sid] = []
            order.append(sid)
        rows[sid].append((step, lineno, ys))

    series = []
    for sid in order:
        entries = sorted(rows[sid], key=lambda e: e[0])
        for prev, cur in zip(entries, entries[1:]):
            if cur[0] == prev[0]:
                raise ParseError(f"duplicate step {cur[0]} for series {sid!r}", cur[1])
            if cur[0] != prev[0] + 1:
                raise ParseError(
                    f"series {sid!r} jumps from step {prev[0]} to {cur[0]}", cur[1])
        series.append(np.array([e[2] for e in entries], dtype=float))
    return Dataset.from_series(series, ids=order, m=m if m is not None else 1)


def write_csv(d: Dataset, stream, header=True) -> None:
    if isinstance(stream, (str, Path)):
        with open(stream, "w", newline="") as fh:
            return write_csv(d, fh, header)
    if header:
        stream.write(",".join(["series_id", "step"]
                              + [f"y{ell + 1}" for ell in range(d.m)]) + "\n")
    buf = io.StringIO()
    for sid, pts in d:
        for n, y in enumerate(pts.tolist()):
            buf.write(f"{sid},{n}," + ",".join(repr(v) for v in y) + "\n")
        if buf.tell() > 1 << 20:
            stream.write(buf.getvalue())
            buf = io.StringIO()
    stream.write(buf.getvalue())


# --- binary rows + JSON sidecar ------------------------------------------------

def save_binary(d: Dataset, path) -> None:
    """Write ``path`` (little-endian f64 rows) and ``path.json`` (header)."""
    path = Path(path)
    d.points.astype("<f8").tofile(path)
    header = {"m": d.m, "dtype": "<f8", "ids": list(d.ids),
              "lengths": d.lengths.tolist()}
    Path(str(path) + ".json").write_text(json.dumps(header))


def load_binary(path) -> Dataset:
    path = Path(path)
    header = json.loads(Path(str(path) + ".json").read_text())
    pts = np.fromfile(path, dtype=header.get("dtype", "<f8")).astype(float)
    m = int(header["m"])
    if pts.size % m:
        raise DataError(f"{path}: {pts.size} values is not a multiple of m={m}")
    offsets = np.concatenate([[0], np.cumsum(header["lengths"], dtype=np.int64)])
    return Dataset(pts.reshape(-1, m), offsets, tuple(header["ids"]))


def load_dataset(path) -> Dataset:
    """Load a CSV file or a binary file with its ``.json`` sidecar."""
    path = Path(path)
    if Path(str(path) + ".json").exists() and path.suffix != ".csv":
        return load_binary(path)
    return ingest_csv(path)
