"""Raster geometry: grid sampling, vectorized escape-rate fields, labeling.

All geometric predicates in the package are raster predicates over a uniform
power-of-two grid; exactness is resolution-relative by design. Cells whose
4-neighborhood straddles a level set belong to no component (components are
open sets), so component masks are the 4-erosion of the sublevel mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

ESCAPE_RADIUS = 1e8
GREEN_MAX_ITER = 256

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

_MIN_RESOLUTION = 256
_MAX_RESOLUTION = 8192


@dataclass(frozen=True)
class GridSpec:
    """Uniform square grid: bounding box plus resolution.

    Cells are indexed (row, col); row 0 is the lowest imaginary part.
    Resolution must be a power of two between 256 and 8192.
    """

    center: complex
    half_width: float
    resolution: int

    def __post_init__(self):
        r = self.resolution
        if r < _MIN_RESOLUTION or r > _MAX_RESOLUTION or (r & (r - 1)) != 0:
            raise ValueError(
                f"resolution must be a power of two in [{_MIN_RESOLUTION}, "
                f"{_MAX_RESOLUTION}], got {r}"
            )
        if not (self.half_width > 0):
            raise ValueError("half_width must be positive")

    @property
    def cell_size(self) -> float:
        return 2.0 * self.half_width / self.resolution

    @property
    def cell_area(self) -> float:
        return self.cell_size ** 2

    def cell_of(self, z: complex):
        """Cell containing z, or None when z is outside the grid."""
        if not (np.isfinite(z.real) and np.isfinite(z.imag)):
            return None
        dx = z.real - self.center.real
        dy = z.imag - self.center.imag
        if abs(dx) >= self.half_width or abs(dy) >= self.half_width:
            return None
        h = self.cell_size
        col = int(np.floor((dx + self.half_width) / h))
        row = int(np.floor((dy + self.half_width) / h))
        if 0 <= row < self.resolution and 0 <= col < self.resolution:
            return (row, col)
        return None

    def center_of(self, row: int, col: int) -> complex:
        h = self.cell_size
        x = self.center.real - self.half_width + (col + 0.5) * h
        y = self.center.imag - self.half_width + (row + 0.5) * h
        return complex(x, y)

    def row_points(self, row: int) -> np.ndarray:
        h = self.cell_size
        cols = np.arange(self.resolution)
        x = self.center.real - self.half_width + (cols + 0.5) * h
        y = self.center.imag - self.half_width + (row + 0.5) * h
        return x + 1j * y

    def to_json(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "half_width": float(self.half_width),
            "resolution": int(self.resolution),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GridSpec":
        cx, cy = doc["center"]
        return cls(complex(cx, cy), float(doc["half_width"]), int(doc["resolution"]))


def magnitude(z: complex) -> float:
    """|z| that saturates to infinity instead of overflowing."""
    try:
        return abs(z)
    except OverflowError:
        return float("inf")


def green_value(coeffs: np.ndarray, degree: int, z: complex,
                n_iter: int = GREEN_MAX_ITER,
                escape_radius: float = ESCAPE_RADIUS) -> float:
    """Escape-rate potential at a single point.

    Returns log|f^k(z)| / degree^k for the first k with |f^k(z)| above the
    escape radius, else 0. Satisfies G(f(z)) = degree * G(z) for escaping z
    up to truncation error.
    """
    w = complex(z)
    rev = coeffs[::-1]
    for k in range(n_iter + 1):
        a = magnitude(w)
        if not np.isfinite(a) or a > escape_radius:
            if not np.isfinite(a):
                # one polynomial step past the radius cannot overflow for
                # degree <= 8, but guard anyway: treat as immediate escape
                return float("inf")
            return float(np.log(a) * float(degree) ** (-k))
        acc = 0j
        for c in rev:
            acc = acc * w + c
        w = acc
    return 0.0


def green_field(coeffs: np.ndarray, degree: int, grid: GridSpec,
                n_iter: int = GREEN_MAX_ITER,
                escape_radius: float = ESCAPE_RADIUS,
                block_rows: int = 512) -> np.ndarray:
    """Escape-rate potential sampled at every cell center.

    Computed in row blocks with active-set compression so memory stays
    proportional to the block, not the iteration count.
    """
    res = grid.resolution
    out = np.zeros((res, res), dtype=np.float64)
    rev = np.array(coeffs[::-1], dtype=np.complex128)
    logd = float(degree)
    for r0 in range(0, res, block_rows):
        r1 = min(res, r0 + block_rows)
        rows = np.arange(r0, r1)
        h = grid.cell_size
        x = grid.center.real - grid.half_width + (np.arange(res) + 0.5) * h
        y = grid.center.imag - grid.half_width + (rows + 0.5) * h
        z = (x[None, :] + 1j * y[:, None]).ravel()
        g = np.zeros(z.size, dtype=np.float64)
        idx = np.arange(z.size)
        w = z
        for k in range(n_iter + 1):
            a = np.abs(w)
            esc = a > escape_radius
            if esc.any():
                g[idx[esc]] = np.log(a[esc]) * logd ** (-k)
                keep = ~esc
                idx = idx[keep]
                w = w[keep]
            if idx.size == 0:
                break
            acc = np.full(w.shape, rev[0], dtype=np.complex128)
            for c in rev[1:]:
                acc *= w
                acc += c
            w = acc
        out[r0:r1, :] = g.reshape(r1 - r0, res)
    return out


def erode4(inside: np.ndarray) -> np.ndarray:
    """Cells of ``inside`` whose full 4-neighborhood is also inside.

    Grid-edge cells have missing neighbors and are treated as straddling.
    """
    er = inside.copy()
    er[1:, :] &= inside[:-1, :]
    er[:-1, :] &= inside[1:, :]
    er[:, 1:] &= inside[:, :-1]
    er[:, :-1] &= inside[:, 1:]
    er[0, :] = False
    er[-1, :] = False
    er[:, 0] = False
    er[:, -1] = False
    return er


def label_components(mask: np.ndarray):
    """4-connected components with deterministic labels.

    Labels are assigned by the smallest flat (row-major) index of each
    component, starting at 0; cells outside the mask get -1.
    """
    raw, n = ndimage.label(mask, structure=_FOUR_CONN)
    if n == 0:
        return np.full(mask.shape, -1, dtype=np.int32), 0
    flat = raw.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    nz = np.flatnonzero(flat)
    # reversed scan: earlier indices overwrite later ones
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable")
    remap = np.empty(n + 1, dtype=np.int32)
    remap[0] = -1
    remap[1 + order] = np.arange(n, dtype=np.int32)
    return remap[raw], n


def flood_fill_labels(mask: np.ndarray):
    """Reference BFS flood fill, independent of the production labeler.

    Used as a test oracle; intentionally simple and unoptimized.
    """
    rows, cols = mask.shape
    labels = np.full(mask.shape, -1, dtype=np.int32)
    count = 0
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c] or labels[r, c] >= 0:
                continue
            stack = [(r, c)]
            labels[r, c] = count
            while stack:
                rr, cc = stack.pop()
                for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    nr, nc = rr + dr, cc + dc
                    if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] \
                            and labels[nr, nc] < 0:
                        labels[nr, nc] = count
                        stack.append((nr, nc))
            count += 1
    return labels, count


def rle_encode(mask: np.ndarray) -> list:
    """Row-major run-length encoding: alternating run lengths, zeros first."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(x) for x in runs]


def rle_decode(runs: list, shape) -> np.ndarray:
    total = int(np.prod(shape))
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    if pos != total:
        raise ValueError(f"run lengths sum to {pos}, expected {total}")
    return flat.reshape(shape)
