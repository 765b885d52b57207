"""Reproducible Poisson obstacle fields with lazy, unbounded realisation.

The obstacle configuration is a Poisson point process of intensity ``nu``
on all of R^d, each point carrying a closed blocking ball of radius ``a``.
Space is partitioned into lattice cells of side ``cell_size``; the points of
every cell are generated on first touch from a counter-based hash of
(master_seed, cell coordinates).  Regenerating any cell therefore yields
identical points no matter when, where or in what order it is queried, and
particles may wander arbitrarily far without a pre-declared bounding box.

Scalar queries (``is_blocked``, ``nearest_obstacle_distance``) realise only
the cells they touch.  Bulk queries (``is_blocked_many``, ``largest_clearing``)
realise whole boxes through the vectorised twin of the same hash, so both
paths see the same points; a sorted-array index (d = 1) or a k-d tree
(d >= 2) serves the batched nearest-neighbour lookups.

Cell realisation is idempotent, so concurrent readers may duplicate work
but can never disagree; there is no mutation besides cache fills.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .seeds import (
    cell_key,
    cell_key_array,
    stream_u64,
    stream_u64_array,
    u01,
    u01_array,
)

__all__ = [
    "ObstacleField",
    "Clearing",
    "field_create",
    "is_blocked",
    "nearest_obstacle_distance",
    "largest_clearing",
    "load_points",
    "save_points",
]

_POISSON_TAIL = 1e-17
_MAX_POISSON_TERMS = 4096


def _poisson_cdf_table(lam: float) -> np.ndarray:
    """Cumulative Poisson(lam) probabilities out to negligible tail mass.

    Stops once the pmf term itself is negligible past the mode; the
    accumulated float sum can stall a few ulps below 1.0.
    """
    pmf = math.exp(-lam)
    cdf = [pmf]
    k = 0
    while 1.0 - cdf[-1] > _POISSON_TAIL and not (k > lam and pmf < 1e-18):
        k += 1
        if k >= _MAX_POISSON_TERMS:
            raise ValueError(
                f"cell mean {lam} too large; decrease cell_size so that "
                "nu * cell_size^d stays moderate"
            )
        pmf *= lam / k
        cdf.append(cdf[-1] + pmf)
    return np.asarray(cdf)


@dataclass(frozen=True)
class Clearing:
    """An obstacle-free ball: no blocking ball intersects B(center, radius).

    Equivalently every obstacle centre is at distance >= radius + a from
    ``center`` (blocking balls are closed).
    """

    center: tuple
    radius: float


class ObstacleField:
    """Lazily realised Poisson obstacle configuration on R^d.

    Parameters
    ----------
    d : dimension
    nu : obstacle centre intensity (> 0 for Poisson fields)
    a : blocking ball radius (> 0); blocking is inclusive (closed balls)
    master_seed : integer seed; fields with equal (d, nu, a, seed, cell_size)
        are indistinguishable under any query sequence
    cell_size : lattice pitch for lazy realisation; defaults to max(a, 1.0)
        so that a point query touches at most a 3^d cell neighbourhood
    """

    def __init__(self, d, nu, a, master_seed, cell_size=None):
        if int(d) != d or d < 1:
            raise ValueError(f"dimension must be a positive integer, got {d}")
        if not nu > 0:
            raise ValueError(f"nu must be strictly positive, got {nu}")
        if not a > 0:
            raise ValueError(f"a must be strictly positive, got {a}")
        if cell_size is None:
            cell_size = max(float(a), 1.0)
        if not cell_size > 0:
            raise ValueError(f"cell_size must be strictly positive, got {cell_size}")
        self.d = int(d)
        self.nu = float(nu)
        self.a = float(a)
        self.master_seed = int(master_seed)
        self.cell_size = float(cell_size)
        self._finite = False
        self._cells: dict[tuple, np.ndarray] = {}
        self._cdf = _poisson_cdf_table(self.nu * self.cell_size**self.d)
        self._line_cache = None  # d == 1: (lo_cell, hi_cell, sorted points)
        self._tree_cache = None  # d >= 2: (lo_cell, hi_cell, points, cKDTree)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_points(cls, points, a, d=None, cell_size=None):
        """Finite field from an explicit point list (tests, fixtures).

        Every cell not covered by ``points`` is empty.  ``nu`` is kept only
        for bookkeeping and set to 0.
        """
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            if d is None:
                raise ValueError("dimension required for an empty point field")
            pts = pts.reshape(0, d)
        if pts.ndim == 1:
            pts = pts[:, None]
        if d is not None and pts.shape[1] != d:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
        obj = cls.__new__(cls)
        obj.d = pts.shape[1]
        obj.nu = 0.0
        obj.a = float(a)
        if not obj.a > 0:
            raise ValueError(f"a must be strictly positive, got {a}")
        obj.master_seed = 0
        obj.cell_size = float(cell_size) if cell_size else max(obj.a, 1.0)
        obj._finite = True
        obj._cdf = None
        obj._line_cache = None
        obj._tree_cache = None
        cells: dict[tuple, list] = {}
        for row in pts:
            c = tuple(int(math.floor(x / obj.cell_size)) for x in row)
            cells.setdefault(c, []).append(row)
        obj._cells = {c: np.asarray(v, dtype=float) for c, v in cells.items()}
        return obj

    @property
    def realized_cells(self) -> dict:
        """Cells realised so far: cell coordinate tuple -> (k, d) point array."""
        return self._cells

    def spec_record(self) -> dict:
        """Small serialisable record identifying this field."""
        return {
            "d": self.d,
            "nu": self.nu,
            "a": self.a,
            "master_seed": self.master_seed,
            "cell_size": self.cell_size,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ObstacleField":
        return cls(rec["d"], rec["nu"], rec["a"], rec["master_seed"], rec["cell_size"])

    # -- cell realisation --------------------------------------------------

    def _cell_points(self, cell: tuple) -> np.ndarray:
        pts = self._cells.get(cell)
        if pts is not None:
            return pts
        if self._finite:
            return _EMPTY.setdefault(self.d, np.empty((0, self.d)))
        key = cell_key(self.master_seed, cell)
        u = u01(stream_u64(key, 0))
        count = int(np.searchsorted(self._cdf, u, side="left"))
        if count == 0:
            pts = np.empty((0, self.d))
        else:
            coords = np.empty((count, self.d))
            for j in range(count):
                for q in range(self.d):
                    uu = u01(stream_u64(key, 1 + j * self.d + q))
                    coords[j, q] = (cell[q] + uu) * self.cell_size
            pts = coords
        self._cells[cell] = pts
        return pts

    def realize_box(self, lo, hi) -> np.ndarray:
        """All obstacle centres x with lo <= x < hi (component-wise).

        Bulk-vectorised; produces exactly the same points as scalar cell
        realisation would.
        """
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self._finite:
            if not self._cells:
                return np.empty((0, self.d))
            pts = np.concatenate(list(self._cells.values()))
            mask = np.all((pts >= lo) & (pts < hi), axis=1)
            return pts[mask]
        lo_cell = np.floor(lo / self.cell_size).astype(np.int64)
        hi_cell = np.floor((hi - 1e-12) / self.cell_size).astype(np.int64)
        ranges = [np.arange(lo_cell[q], hi_cell[q] + 1) for q in range(self.d)]
        grids = np.meshgrid(*ranges, indexing="ij")
        cells = np.stack([g.ravel() for g in grids], axis=1)
        pts = self._bulk_points(cells)
        mask = np.all((pts >= lo) & (pts < hi), axis=1)
        return pts[mask]

    def _bulk_points(self, cells: np.ndarray) -> np.ndarray:
        keys = cell_key_array(self.master_seed, cells)
        u0 = u01_array(stream_u64_array(keys, np.zeros(len(keys), dtype=np.uint64)))
        counts = np.searchsorted(self._cdf, u0, side="left")
        total = int(counts.sum())
        if total == 0:
            return np.empty((0, self.d))
        rep_keys = np.repeat(keys, counts)
        rep_cells = np.repeat(cells, counts, axis=0)
        # per-point index j within its cell
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        j = np.arange(total, dtype=np.uint64) - np.repeat(offsets, counts).astype(np.uint64)
        coords = np.empty((total, self.d))
        for q in range(self.d):
            counters = np.uint64(1) + j * np.uint64(self.d) + np.uint64(q)
            uu = u01_array(stream_u64_array(rep_keys, counters))
            coords[:, q] = (rep_cells[:, q] + uu) * self.cell_size
        return coords

    # -- scalar queries ----------------------------------------------------

    def is_blocked(self, x) -> bool:
        """True iff x lies within distance a (inclusive) of an obstacle centre."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cs = self.cell_size
        lo = np.floor((x - self.a) / cs).astype(int)
        hi = np.floor((x + self.a) / cs).astype(int)
        a2 = self.a * self.a
        for cell in itertools.product(*(range(lo[q], hi[q] + 1) for q in range(self.d))):
            pts = self._cell_points(cell)
            if len(pts) and np.min(np.sum((pts - x) ** 2, axis=1)) <= a2:
                return True
        return False

    def nearest_obstacle_distance(self, x, search_cap: float) -> float:
        """Distance from x to the nearest obstacle centre, if <= search_cap.

        Returns ``math.inf`` when no centre lies within the cap.  Expanding
        ring search over cell shells; cells at Chebyshev shell m can only
        hold points at distance >= (m-1) * cell_size, which bounds the scan.
        """
        if not search_cap > 0:
            raise ValueError(f"search_cap must be positive, got {search_cap}")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cs = self.cell_size
        c0 = tuple(int(math.floor(v / cs)) for v in x)
        best = math.inf
        m = 0
        while True:
            for cell in _chebyshev_shell(c0, m):
                pts = self._cell_points(cell)
                if len(pts):
                    dmin = math.sqrt(float(np.min(np.sum((pts - x) ** 2, axis=1))))
                    if dmin < best:
                        best = dmin
            if best <= m * cs:
                break
            if m * cs > search_cap:
                break
            m += 1
        return best if best <= search_cap else math.inf

    # -- bulk queries --------------------------------------------------------

    def _ensure_bulk_cache(self, lo: np.ndarray, hi: np.ndarray):
        """Realised box covering [lo, hi), grown geometrically as needed."""
        cache = self._line_cache if self.d == 1 else self._tree_cache
        if cache is not None and np.all(cache[0] <= lo) and np.all(cache[1] >= hi):
            return cache
        pad = 4.0 * self.cell_size
        new_lo = lo - pad
        new_hi = hi + pad
        if cache is not None:
            new_lo = np.minimum(new_lo, cache[0])
            new_hi = np.maximum(new_hi, cache[1])
        pts = self.realize_box(new_lo, new_hi)
        if self.d == 1:
            cache = (new_lo, new_hi, np.sort(pts[:, 0]))
            self._line_cache = cache
        else:
            from scipy.spatial import cKDTree

            tree = cKDTree(pts) if len(pts) else None
            cache = (new_lo, new_hi, pts, tree)
            self._tree_cache = cache
        return cache

    def nearest_distances(self, xs: np.ndarray) -> np.ndarray:
        """Nearest-centre distances for a batch of query points.

        Valid wherever the returned distance is smaller than the distance
        from the query point to the realised box boundary; callers that need
        exactness beyond that (``largest_clearing``) re-realise with a
        bigger margin.  For blocking queries the margin is >= a by
        construction, which is all that is needed.
        """
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 1:
            xs = xs[:, None]
        margin = max(self.a, self.cell_size) + self.cell_size
        lo = xs.min(axis=0) - margin
        hi = xs.max(axis=0) + margin
        cache = self._ensure_bulk_cache(lo, hi)
        if self.d == 1:
            line = cache[2]
            if len(line) == 0:
                return np.full(len(xs), np.inf)
            q = xs[:, 0]
            idx = np.searchsorted(line, q)
            left = np.where(idx > 0, np.abs(q - line[np.maximum(idx - 1, 0)]), np.inf)
            right = np.where(idx < len(line), np.abs(line[np.minimum(idx, len(line) - 1)] - q), np.inf)
            return np.minimum(left, right)
        tree = cache[3]
        if tree is None:
            return np.full(len(xs), np.inf)
        dist, _ = tree.query(xs)
        return dist

    def is_blocked_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`is_blocked` (inclusive radius)."""
        return self.nearest_distances(xs) <= self.a


_EMPTY: dict[int, np.ndarray] = {}


def _chebyshev_shell(c0: tuple, m: int):
    """Cells at Chebyshev distance exactly m from cell c0."""
    d = len(c0)
    if m == 0:
        yield c0
        return
    rng = range(-m, m + 1)
    for offset in itertools.product(rng, repeat=d):
        if max(abs(o) for o in offset) == m:
            yield tuple(c0[q] + offset[q] for q in range(d))


# -- module-level operations (thin wrappers named for what they do) ---------


def field_create(d, nu, a, master_seed, cell_size=None) -> ObstacleField:
    """Create a lazy, reproducible Poisson obstacle field."""
    return ObstacleField(d, nu, a, master_seed, cell_size)


def is_blocked(field: ObstacleField, x) -> bool:
    return field.is_blocked(x)


def nearest_obstacle_distance(field: ObstacleField, x, search_cap: float) -> float:
    return field.nearest_obstacle_distance(x, search_cap)


def largest_clearing(field: ObstacleField, ell: float, resolution: float) -> Clearing:
    """Largest obstacle-free ball centred on a pitch-``resolution`` grid in B(0, ell).

    Grid-restricted, hence a lower bound on the true largest clearing.  The
    centre grid depends only on ``resolution``, so for a fixed field the
    returned radius is monotone non-decreasing in ``ell``.
    """
    if not ell > 0:
        raise ValueError(f"ell must be positive, got {ell}")
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    k = int(math.floor(ell / resolution))
    axis = np.arange(-k, k + 1) * resolution
    if field.d == 1:
        centers = axis[:, None]
    else:
        grids = np.meshgrid(*([axis] * field.d), indexing="ij")
        centers = np.stack([g.ravel() for g in grids], axis=1)
        centers = centers[np.sum(centers**2, axis=1) <= ell * ell + 1e-12]

    if field._finite and not field._cells:
        return Clearing((0.0,) * field.d, math.inf)

    margin = max(8.0 * field.cell_size, 2.0 * field.a)
    for _ in range(60):
        pts = field.realize_box(centers.min(axis=0) - margin, centers.max(axis=0) + margin)
        if len(pts) == 0:
            margin *= 2.0
            continue
        if field.d == 1:
            line = np.sort(pts[:, 0])
            q = centers[:, 0]
            idx = np.searchsorted(line, q)
            left = np.where(idx > 0, np.abs(q - line[np.maximum(idx - 1, 0)]), np.inf)
            right = np.where(
                idx < len(line), np.abs(line[np.minimum(idx, len(line) - 1)] - q), np.inf
            )
            dists = np.minimum(left, right)
        else:
            from scipy.spatial import cKDTree

            dists, _ = cKDTree(pts).query(centers)
        if float(dists.max()) <= margin:
            # ties (e.g. symmetric gaps) resolved toward the origin
            ties = np.nonzero(dists >= dists.max())[0]
            best = int(ties[np.argmin(np.sum(centers[ties] ** 2, axis=1))])
            radius = max(0.0, float(dists[best]) - field.a)
            return Clearing(tuple(float(v) for v in centers[best]), radius)
        margin *= 2.0
    raise RuntimeError("clearing search failed to stabilise; field looks pathologically empty")


# -- point fixtures ----------------------------------------------------------


def save_points(path, points, header: str | None = None):
    """Write points as plain text, one per line, comma-separated coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for row in pts:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_points(path) -> np.ndarray:
    """Read a point fixture: .json files hold a list of coordinate lists,
    anything else is plain text with one comma-separated point per line.
    Lines starting with '#' are comments."""
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return np.asarray(json.load(fh), dtype=float)
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(v) for v in line.split(",")])
    return np.asarray(rows, dtype=float)
