"""Puzzle trees: labeled sublevel components at every depth, decorated.

Depth-n pieces are the 4-connected components of {G < r * d^-n}, which is
exactly the n-th preimage of the outer domain. Each piece carries its parent
(containment one depth up), its image (the piece its points map into), the
critical points it contains, and the degree of the map on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import raster
from .errors import (
    AmbiguousCellError,
    InvalidSetupError,
    RasterInconsistencyError,
    ResolutionExhaustedError,
)
from .mapmodel import SetUpRestriction

MIN_PIECE_CELLS = 16
_IMAGE_CROSS_CHECKS = 16


class PieceId(NamedTuple):
    depth: int
    index: int


@dataclass
class Piece:
    id: PieceId
    cells: np.ndarray  # flat indices into the layer's cropped label array
    sample: complex
    parent: Optional[PieceId]
    image: Optional[PieceId]
    critical_marks: frozenset
    local_degree: int

    @property
    def cell_count(self) -> int:
        return int(self.cells.size)


@dataclass
class PieceLayer:
    depth: int
    threshold: float
    offset: tuple  # (row0, col0) of the cropped window in grid coordinates
    shape: tuple
    labels: np.ndarray  # int32, -1 for cells in no piece
    pieces: list = field(default_factory=list)

    def label_at(self, cell) -> int:
        r = cell[0] - self.offset[0]
        c = cell[1] - self.offset[1]
        if 0 <= r < self.shape[0] and 0 <= c < self.shape[1]:
            return int(self.labels[r, c])
        return -1

    def mask_of(self, index: int) -> np.ndarray:
        return self.labels == index


@dataclass
class PuzzleTree:
    setup: SetUpRestriction
    layers: list

    @property
    def max_depth(self) -> int:
        return len(self.layers) - 1

    @property
    def grid(self):
        return self.setup.grid

    def piece(self, pid: PieceId) -> Piece:
        return self.layers[pid.depth].pieces[pid.index]

    def pieces_at(self, depth: int):
        return self.layers[depth].pieces

    def piece_count(self, depth: int) -> int:
        return len(self.layers[depth].pieces)

    def area_of(self, pid: PieceId) -> float:
        return self.piece(pid).cell_count * self.grid.cell_area

    def cells_of(self, pid: PieceId):
        """Grid (row, col) pairs of the piece's cells, scan order."""
        layer = self.layers[pid.depth]
        rows, cols = np.unravel_index(self.piece(pid).cells, layer.shape)
        return rows + layer.offset[0], cols + layer.offset[1]

    def mask_of(self, pid: PieceId):
        """(mask, offset) with the mask cropped to the layer window."""
        layer = self.layers[pid.depth]
        return layer.mask_of(pid.index), layer.offset

    def full_mask_of(self, pid: PieceId) -> np.ndarray:
        layer = self.layers[pid.depth]
        res = self.grid.resolution
        out = np.zeros((res, res), dtype=bool)
        r0, c0 = layer.offset
        out[r0:r0 + layer.shape[0], c0:c0 + layer.shape[1]] = layer.mask_of(pid.index)
        return out

    def ancestor(self, pid: PieceId, depth: int) -> PieceId:
        """The piece of the given shallower depth containing this piece."""
        if depth > pid.depth:
            raise ValueError("ancestor depth must not exceed piece depth")
        cur = pid
        while cur.depth > depth:
            cur = self.piece(cur).parent
        return cur

    def contains(self, outer: PieceId, inner: PieceId) -> bool:
        """Containment of pieces; equal pieces count as contained."""
        if outer.depth > inner.depth:
            return False
        return self.ancestor(inner, outer.depth) == outer

    def strictly_contains(self, outer: PieceId, inner: PieceId) -> bool:
        return outer.depth < inner.depth and self.ancestor(inner, outer.depth) == outer

    def disjoint(self, p: PieceId, q: PieceId) -> bool:
        if p.depth == q.depth:
            return p != q
        if p.depth < q.depth:
            return self.ancestor(q, p.depth) != p
        return self.ancestor(p, q.depth) != q

    def critical_chain(self, crit_index: int):
        """P_n(c) for n = 0..max_depth, or a shorter list if unresolved."""
        c = self.setup.criticals[crit_index]
        out = []
        for n in range(self.max_depth + 1):
            pid = piece_containing(self, c.location, n)
            if pid is None:
                break
            out.append(pid)
        return out


def _grouped_cells(labels: np.ndarray, count: int):
    flat = labels.ravel()
    idx = np.flatnonzero(flat >= 0)
    labs = flat[idx]
    order = np.argsort(labs, kind="stable")
    grouped = idx[order]
    starts = np.searchsorted(labs[order], np.arange(count + 1))
    return [grouped[starts[i]:starts[i + 1]] for i in range(count)]


def _boundary_adjacent(mask: np.ndarray) -> np.ndarray:
    inner = mask.copy()
    inner[1:, :] &= mask[:-1, :]
    inner[:-1, :] &= mask[1:, :]
    inner[:, 1:] &= mask[:, :-1]
    inner[:, :-1] &= mask[:, 1:]
    inner[0, :] = False
    inner[-1, :] = False
    inner[:, 0] = False
    inner[:, -1] = False
    return mask & ~inner


def build_tree(setup: SetUpRestriction, max_depth: int) -> PuzzleTree:
    """Label every depth up to ``max_depth`` and decorate the pieces.

    Aborts with ResolutionExhaustedError (carrying the partial tree) as soon
    as any component at some depth falls below raster scale, so that no
    depth in the returned tree is missing pieces.
    """
    if setup.validation is None or not setup.validation.ok:
        raise InvalidSetupError("restriction failed validation; see its report",
                                report=None if setup.validation is None
                                else setup.validation.to_json())
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")

    g = setup.green_grid
    grid = setup.grid
    d = setup.degree
    bounded = [(i, c) for i, c in enumerate(setup.criticals) if not c.escapes]

    tree = PuzzleTree(setup=setup, layers=[])
    for n in range(max_depth + 1):
        t = setup.threshold(n)
        inside = g < t
        rows = np.flatnonzero(inside.any(axis=1))
        cols = np.flatnonzero(inside.any(axis=0))
        r0, r1 = int(rows[0]), int(rows[-1]) + 1
        c0, c1 = int(cols[0]), int(cols[-1]) + 1
        sub = inside[r0:r1, c0:c1]
        padded = np.pad(sub, 1)
        eroded = raster.erode4(padded)[1:-1, 1:-1]

        raw_labels, raw_n = raster.label_components(sub)
        labels, count = raster.label_components(eroded)

        # resolution guard: every raw component must survive erosion with a
        # usable number of cells, else deeper combinatorics would silently
        # lose pieces
        if raw_n:
            raw_flat = raw_labels.ravel()
            er_flat = eroded.ravel()
            surv = np.bincount(raw_flat[(raw_flat >= 0) & er_flat],
                               minlength=raw_n)
            if count:
                sizes = np.bincount(labels.ravel()[labels.ravel() >= 0],
                                    minlength=count)
            else:
                sizes = np.array([], dtype=np.int64)
            if (surv < MIN_PIECE_CELLS).any() or count == 0 or \
                    (sizes < MIN_PIECE_CELLS).any():
                raise ResolutionExhaustedError(
                    f"a depth-{n} component falls below raster scale "
                    f"({MIN_PIECE_CELLS} cells)",
                    resolved_depth=n - 1,
                    partial_tree=tree if n > 0 else None,
                    depth=n)

        layer = PieceLayer(depth=n, threshold=t, offset=(r0, c0),
                           shape=sub.shape, labels=labels)
        gsub = g[r0:r1, c0:c1]
        gflat = gsub.ravel()
        cells_by_piece = _grouped_cells(labels, count)
        bnd = _boundary_adjacent(labels >= 0)
        bnd_flat = bnd.ravel()

        marks_by_piece = {}
        for ci, crit in bounded:
            cell = grid.cell_of(crit.location)
            lab = -1
            if cell is not None:
                rr, cc = cell[0] - r0, cell[1] - c0
                if 0 <= rr < sub.shape[0] and 0 <= cc < sub.shape[1]:
                    lab = int(labels[rr, cc])
            if lab < 0:
                raise ResolutionExhaustedError(
                    f"critical point {crit.location} unresolved at depth {n}",
                    resolved_depth=n - 1,
                    partial_tree=tree if n > 0 else None, depth=n)
            marks_by_piece.setdefault(lab, set()).add(ci)

        for i in range(count):
            cells = cells_by_piece[i]
            order = np.argsort(gflat[cells], kind="stable")
            sample_flat = int(cells[order[0]])
            sr, sc = np.unravel_index(sample_flat, sub.shape)
            sample = grid.center_of(sr + r0, sc + c0)
            marks = frozenset(marks_by_piece.get(i, set()))
            local_degree = 1 + sum(setup.criticals[ci].local_degree - 1
                                   for ci in marks)
            parent = image = None
            if n >= 1:
                prev = tree.layers[n - 1]
                # low-potential cells are deepest inside; try a few in order
                candidates = cells[order[:8]]
                parent = _resolve_link(tree, prev, grid, sub.shape, (r0, c0),
                                       candidates, None, n, i, kind="parent")
                fz_fn = setup.map
                image = _resolve_link(tree, prev, grid, sub.shape, (r0, c0),
                                      candidates, fz_fn, n, i, kind="image")
            pid = PieceId(n, i)
            layer.pieces.append(Piece(id=pid, cells=cells, sample=sample,
                                      parent=parent, image=image,
                                      critical_marks=marks,
                                      local_degree=local_degree))
        tree.layers.append(layer)

        # cross-check image links on cells near the piece edge
        if n >= 1:
            prev = tree.layers[n - 1]
            for piece in layer.pieces:
                bcells = piece.cells[bnd_flat[piece.cells]]
                if bcells.size == 0:
                    continue
                sel = bcells[np.linspace(0, bcells.size - 1,
                                         min(_IMAGE_CROSS_CHECKS, bcells.size)
                                         ).astype(int)]
                for fi in np.unique(sel):
                    rr, cc = np.unravel_index(int(fi), sub.shape)
                    w = setup.map(grid.center_of(rr + r0, cc + c0))
                    cell = grid.cell_of(w)
                    if cell is None:
                        continue
                    lab = prev.label_at(cell)
                    if lab >= 0 and PieceId(n - 1, lab) != piece.image:
                        raise RasterInconsistencyError(
                            f"image cross-check failed for piece {piece.id}: "
                            f"edge sample maps into piece index {lab}, "
                            f"decoration says {piece.image}",
                            piece=tuple(piece.id))
    return tree


def _resolve_link(tree, prev_layer, grid, shape, offset, candidate_cells,
                  map_fn, depth, index, kind):
    for flat in candidate_cells:
        rr, cc = np.unravel_index(int(flat), shape)
        z = grid.center_of(rr + offset[0], cc + offset[1])
        if map_fn is not None:
            z = map_fn(z)
        cell = grid.cell_of(z)
        if cell is None:
            continue
        lab = prev_layer.label_at(cell)
        if lab >= 0:
            return PieceId(depth - 1, lab)
    raise ResolutionExhaustedError(
        f"could not resolve the {kind} of depth-{depth} piece {index}; "
        "no candidate sample lands in a labeled cell one depth up",
        resolved_depth=depth - 1, partial_tree=tree, depth=depth)


def build_tree_capped(setup: SetUpRestriction, max_depth: int) -> PuzzleTree:
    """build_tree, but truncate at the last fully resolved depth instead of
    raising when the grid runs out of resolution."""
    try:
        return build_tree(setup, max_depth)
    except ResolutionExhaustedError as exc:
        if exc.partial_tree is None:
            raise
        return exc.partial_tree


def piece_containing(tree: PuzzleTree, z: complex, n: int):
    """The unique depth-n piece whose mask holds z's cell, or None.

    Raises AmbiguousCellError when the cell straddles the level set at this
    depth (the caller must refine the grid to decide membership).
    """
    if n > tree.max_depth:
        raise ValueError(f"depth {n} exceeds max_depth {tree.max_depth}")
    cell = tree.grid.cell_of(z)
    if cell is None:
        return None
    layer = tree.layers[n]
    lab = layer.label_at(cell)
    if lab >= 0:
        return PieceId(n, lab)
    if tree.setup.green_grid[cell] < layer.threshold:
        raise AmbiguousCellError(
            f"cell {cell} straddles the depth-{n} level set",
            cell=cell, depth=n)
    return None


def iterated_image(tree: PuzzleTree, p: PieceId, k: int) -> PieceId:
    """The depth-(depth(p)-k) piece the k-th iterate maps p onto."""
    if k < 0 or k > p.depth:
        raise ValueError("need 0 <= k <= depth(p)")
    cur = p
    for _ in range(k):
        cur = tree.piece(cur).image
    return cur


def iterated_degree(tree: PuzzleTree, p: PieceId, k: int) -> int:
    """Degree of the k-th iterate restricted to p: the product of the
    per-step degrees along p, f(p), ..., f^(k-1)(p)."""
    if k < 0 or k > p.depth:
        raise ValueError("need 0 <= k <= depth(p)")
    deg = 1
    cur = p
    for _ in range(k):
        deg *= tree.piece(cur).local_degree
        cur = tree.piece(cur).image
    return deg


def interior_samples(tree: PuzzleTree, pid: PieceId, count: int, rng=None):
    """Cell-center sample points inside a piece: all cells when the piece is
    small, otherwise a seeded random choice."""
    piece = tree.piece(pid)
    layer = tree.layers[pid.depth]
    cells = piece.cells
    if cells.size > count:
        if rng is None:
            rng = np.random.default_rng(0)
        cells = rng.choice(cells, size=count, replace=False)
        cells = np.sort(cells)
    rows, cols = np.unravel_index(cells, layer.shape)
    return [tree.grid.center_of(int(r) + layer.offset[0],
                                int(c) + layer.offset[1])
            for r, c in zip(rows, cols)]


def verify_nesting(tree: PuzzleTree, up_to_depth: int | None = None,
                   ring: int = 1):
    """Audit that deeper pieces nest strictly (with a ring) or are disjoint.

    Checks each piece against its parent mask grown by ``ring`` cells, and
    pairwise disjointness within a depth. Returns a violation list.
    """
    from scipy import ndimage as _nd
    if up_to_depth is None:
        up_to_depth = tree.max_depth
    violations = []
    struct = np.ones((3, 3), dtype=bool)
    for n in range(1, up_to_depth + 1):
        for piece in tree.pieces_at(n):
            parent = piece.parent
            pm = tree.full_mask_of(piece.id)
            grown = _nd.binary_dilation(pm, structure=struct, iterations=ring)
            if not (grown & ~tree.full_mask_of(parent)).sum() == 0:
                violations.append({
                    "kind": "nesting_ring",
                    "piece": tuple(piece.id),
                    "parent": tuple(parent),
                })
    return violations


def verify_image_consistency(tree: PuzzleTree, samples: int = 16, rng=None):
    """For every depth >= 1 piece, interior samples must map into its image."""
    violations = []
    for n in range(1, tree.max_depth + 1):
        for piece in tree.pieces_at(n):
            for z in interior_samples(tree, piece.id, samples, rng):
                try:
                    got = piece_containing(tree, tree.setup.map(z), n - 1)
                except AmbiguousCellError:
                    continue
                if got is not None and got != piece.image:
                    violations.append({
                        "kind": "image",
                        "piece": tuple(piece.id),
                        "expected": tuple(piece.image),
                        "got": tuple(got),
                        "sample": [z.real, z.imag],
                    })
    return violations


def tree_to_json(tree: PuzzleTree) -> dict:
    """Geometry-free decorated tree export (masks are exported separately)."""
    setup = tree.setup
    return {
        "schema": "polypuzzle.tree/1",
        "name": setup.name,
        "degree": setup.degree,
        "level_r": setup.level_r,
        "grid": setup.grid.to_json(),
        "max_depth": tree.max_depth,
        "critical_points": [
            {
                "index": i,
                "location": [c.location.real, c.location.imag],
                "local_degree": c.local_degree,
                "escapes": c.escapes,
                "green_level": c.green_level,
            }
            for i, c in enumerate(setup.criticals)
        ],
        "depths": [
            [
                {
                    "index": p.id.index,
                    "parent": None if p.parent is None else p.parent.index,
                    "image": None if p.image is None else p.image.index,
                    "critical_marks": sorted(p.critical_marks),
                    "local_degree": p.local_degree,
                    "cells": p.cell_count,
                }
                for p in layer.pieces
            ]
            for layer in tree.layers
        ],
    }


def masks_to_json(tree: PuzzleTree) -> dict:
    """Run-length-encoded piece masks keyed by (depth, index)."""
    pieces = []
    for layer in tree.layers:
        for p in layer.pieces:
            mask = layer.mask_of(p.id.index)
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            r0, r1 = int(rows[0]), int(rows[-1]) + 1
            c0, c1 = int(cols[0]), int(cols[-1]) + 1
            sub = mask[r0:r1, c0:c1]
            pieces.append({
                "depth": p.id.depth,
                "index": p.id.index,
                "bbox": [r0 + layer.offset[0], c0 + layer.offset[1],
                         r1 + layer.offset[0], c1 + layer.offset[1]],
                "rle": raster.rle_encode(sub),
            })
    return {
        "schema": "polypuzzle.masks/1",
        "resolution": tree.grid.resolution,
        "pieces": pieces,
    }
