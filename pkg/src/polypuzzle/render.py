"""Figure output: per-depth piece maps rendered to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colors

# fixed palette so identical trees render identically
_PALETTE = plt.get_cmap("tab20").colors


def depth_figure(tree, depth: int, out_path, vector: bool = False):
    """One figure for a depth: pieces colored by index, critical pieces
    outlined. Returns the written paths."""
    layer = tree.layers[depth]
    grid = tree.grid
    res = grid.resolution
    full = np.full((res, res), -1, dtype=np.int32)
    r0, c0 = layer.offset
    full[r0:r0 + layer.shape[0], c0:c0 + layer.shape[1]] = layer.labels

    ncolors = max(1, len(layer.pieces))
    cmap_colors = [(1.0, 1.0, 1.0, 1.0)] + [
        _PALETTE[i % len(_PALETTE)] for i in range(ncolors)]
    cmap = colors.ListedColormap(cmap_colors)
    bounds = np.arange(-1.5, ncolors + 0.5)
    norm = colors.BoundaryNorm(bounds, cmap.N)

    extent = [grid.center.real - grid.half_width,
              grid.center.real + grid.half_width,
              grid.center.imag - grid.half_width,
              grid.center.imag + grid.half_width]
    fig, ax = plt.subplots(figsize=(7, 7), dpi=150)
    ax.imshow(full, origin="lower", extent=extent, cmap=cmap, norm=norm,
              interpolation="nearest")
    for piece in layer.pieces:
        mask = tree.full_mask_of(piece.id)
        if piece.critical_marks:
            ax.contour(mask.astype(float), levels=[0.5], colors="black",
                       linewidths=1.2, extent=extent, origin="lower")
        cx, cy = piece.sample.real, piece.sample.imag
        ax.annotate(str(piece.id.index), (cx, cy), fontsize=7, ha="center",
                    color="black")
    ax.set_title(f"{tree.setup.name or 'map'}: depth {depth}, "
                 f"{len(layer.pieces)} piece(s)")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    out_path = Path(out_path)
    written = []
    fig.savefig(out_path, format="png")
    written.append(out_path)
    if vector:
        svg = out_path.with_suffix(".svg")
        fig.savefig(svg, format="svg")
        written.append(svg)
    plt.close(fig)
    return written


def render_depths(tree, depths, out_dir, vector: bool = False):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    skipped = []
    for depth in depths:
        if depth > tree.max_depth:
            skipped.append(depth)
            continue
        name = f"pieces_depth{depth:02d}.png"
        written.extend(depth_figure(tree, depth, out_dir / name, vector=vector))
    return written, skipped
