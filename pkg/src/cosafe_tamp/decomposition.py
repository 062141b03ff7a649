"""Region-conforming rectangular decomposition of the accessible workspace."""
from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field

import numpy as np

Rect = tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

_EPS = 1e-9


class DecompositionError(ValueError):
    pass


class LocateError(ValueError):
    pass


def rect_area(r: Rect) -> float:
    return max(0.0, r[2] - r[0]) * max(0.0, r[3] - r[1])


def rect_overlap(a: Rect, b: Rect) -> float:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    return w * h if (w > 0 and h > 0) else 0.0


def rect_contains(outer: Rect, inner: Rect, tol: float = _EPS) -> bool:
    return (inner[0] >= outer[0] - tol and inner[1] >= outer[1] - tol
            and inner[2] <= outer[2] + tol and inner[3] <= outer[3] + tol)


@dataclass(frozen=True)
class Workspace:
    bounds: Rect
    regions: tuple[Rect, ...]  # region k has proposition id k + 1
    fixed: tuple[Rect, ...] = ()

    def __post_init__(self):
        x0, y0, x1, y1 = self.bounds
        if not (x1 - x0 > _EPS and y1 - y0 > _EPS):
            raise DecompositionError(f"degenerate workspace bounds {self.bounds}")
        for k, r in enumerate(self.regions):
            if rect_area(r) <= 0:
                raise DecompositionError(f"region {k + 1} is degenerate")
            if not rect_contains(self.bounds, r):
                raise DecompositionError(f"region {k + 1} leaves the workspace")
            for j in range(k):
                if rect_overlap(r, self.regions[j]) > 0:
                    raise DecompositionError(f"regions {j + 1} and {k + 1} overlap")
            for f in self.fixed:
                if rect_overlap(r, f) > 0:
                    raise DecompositionError(f"region {k + 1} overlaps a fixed body")


def _clip(r: Rect, b: Rect) -> Rect:
    return (max(r[0], b[0]), max(r[1], b[1]), min(r[2], b[2]), min(r[3], b[3]))


def _grid_lines(lo: float, hi: float, edges, resolution: float) -> np.ndarray:
    lines = sorted({lo, hi, *(e for e in edges if lo < e < hi)})
    n = int(np.floor((hi - lo) / resolution + _EPS))
    fixed = np.asarray(lines)
    cuts = [u for u in (lo + k * resolution for k in range(1, n + 1))
            if u < hi and np.min(np.abs(fixed - u)) > 1e-7]
    return np.unique(np.asarray(lines + cuts, dtype=float))


@dataclass
class Decomposition:
    workspace: Workspace
    xs: np.ndarray
    ys: np.ndarray
    grid_id: np.ndarray        # (nx, ny) cell id or -1 inside fixed bodies
    rects: np.ndarray          # (n, 4)
    labels: np.ndarray         # (n,) proposition id
    centers: np.ndarray        # (n, 2)
    areas: np.ndarray          # (n,)
    grid_index: np.ndarray     # (n, 2) i, j
    adjacency: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def n_cells(self) -> int:
        return len(self.labels)

    def locate(self, p) -> tuple[int, int]:
        """Cell id and proposition of point ``p``.

        Points on a cell edge go to the +x / +y neighbour when it exists.
        """
        x, y = float(p[0]), float(p[1])
        x0, y0, x1, y1 = self.workspace.bounds
        if not (x0 - _EPS <= x <= x1 + _EPS and y0 - _EPS <= y <= y1 + _EPS):
            raise LocateError(f"point ({x}, {y}) outside the workspace")
        nx, ny = self.grid_id.shape
        i = min(max(bisect_right(self.xs, x) - 1, 0), nx - 1)
        j = min(max(bisect_right(self.ys, y) - 1, 0), ny - 1)
        cid = self.grid_id[i, j]
        if cid < 0:
            # on the boundary of a fixed body: fall back to the -x / -y side
            on_x = abs(x - self.xs[i]) <= _EPS and i > 0
            on_y = abs(y - self.ys[j]) <= _EPS and j > 0
            for di, dj in ((1, 0), (0, 1), (1, 1)):
                if (di and not on_x) or (dj and not on_y):
                    continue
                cid = self.grid_id[i - di, j - dj]
                if cid >= 0:
                    break
        if cid < 0:
            raise LocateError(f"point ({x}, {y}) inside a fixed body")
        return int(cid), int(self.labels[cid])

    def label_of(self, p) -> int:
        return self.locate(p)[1]

    def extract_trace(self, path) -> tuple[int, ...]:
        out: list[int] = []
        for p in path:
            lab = self.locate(p)[1]
            if not out or out[-1] != lab:
                out.append(lab)
        if not out:
            raise ValueError("empty path")
        return tuple(out)

    def reachable(self, start_cell: int) -> np.ndarray:
        seen = np.zeros(self.n_cells, dtype=bool)
        seen[start_cell] = True
        queue = deque([start_cell])
        while queue:
            c = queue.popleft()
            for d in self.adjacency[c]:
                if not seen[d]:
                    seen[d] = True
                    queue.append(d)
        return seen

    def components(self) -> np.ndarray:
        comp = np.full(self.n_cells, -1, dtype=int)
        k = 0
        for c in range(self.n_cells):
            if comp[c] < 0:
                comp[self.reachable(c)] = k
                k += 1
        return comp


def decompose(w: Workspace, resolution: float | None = None) -> Decomposition:
    """Grid whose lines include every region and fixed-body edge.

    Cells inside fixed bodies are dropped; the rest are labelled by the region
    containing their centre (0 when none does).
    """
    x0, y0, x1, y1 = w.bounds
    if resolution is None:
        resolution = min(x1 - x0, y1 - y0) / 20.0
    if not resolution > 0:
        raise DecompositionError("resolution must be positive")
    rects_all = list(w.regions) + [_clip(f, w.bounds) for f in w.fixed]
    xs = _grid_lines(x0, x1, [v for r in rects_all for v in (r[0], r[2])], resolution)
    ys = _grid_lines(y0, y1, [v for r in rects_all for v in (r[1], r[3])], resolution)
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    blocked = np.zeros(CX.shape, dtype=bool)
    for f in w.fixed:
        blocked |= (CX > f[0]) & (CX < f[2]) & (CY > f[1]) & (CY < f[3])
    label_grid = np.zeros(CX.shape, dtype=np.int64)
    for k, r in enumerate(w.regions):
        label_grid[(CX > r[0]) & (CX < r[2]) & (CY > r[1]) & (CY < r[3])] = k + 1

    grid_id = np.full(CX.shape, -1, dtype=np.int64)
    ii, jj = np.nonzero(~blocked)
    grid_id[ii, jj] = np.arange(len(ii))
    rects = np.column_stack([xs[ii], ys[jj], xs[ii + 1], ys[jj + 1]])
    labels = label_grid[ii, jj]
    centers = np.column_stack([cx[ii], cy[jj]])
    areas = (rects[:, 2] - rects[:, 0]) * (rects[:, 3] - rects[:, 1])

    nx, ny = grid_id.shape
    adjacency = []
    for i, j in zip(ii, jj):
        nb = []
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            a, b = i + di, j + dj
            if 0 <= a < nx and 0 <= b < ny and grid_id[a, b] >= 0:
                nb.append(int(grid_id[a, b]))
        adjacency.append(tuple(nb))
    return Decomposition(w, xs, ys, grid_id, rects, labels, centers, areas,
                         np.column_stack([ii, jj]), adjacency)
