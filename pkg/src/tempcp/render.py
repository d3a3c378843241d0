"""Renderers: assignment heat maps and permuted adjacency matrices.

Output is a binary PPM image plus a CSV carrying the underlying data, so the
figures are reproducible byte-for-byte and re-plottable elsewhere.  One fixed
color convention is used everywhere: richer patterns get darker colors
(membership = dark).
"""

from __future__ import annotations

import csv

import numpy as np

from .groups import GroupAssignment
from .network import TemporalNetwork

__all__ = [
    "DEFAULT_PALETTE",
    "pattern_sort_key",
    "order_patterns",
    "permutation_for_layer",
    "render_heatmap",
    "render_permuted_adjacency",
    "write_ppm",
]

# Light-to-dark pairs: base group light blue, then dark blue, light purple,
# dark purple for the four k=3 patterns; extra hues cover larger k.
DEFAULT_PALETTE = [
    (173, 216, 230),  # light blue
    (0, 51, 153),     # dark blue
    (200, 162, 235),  # light purple
    (84, 22, 120),    # dark purple
    (255, 204, 153),  # light orange
    (204, 85, 0),     # dark orange
    (170, 221, 170),  # light green
    (0, 102, 51),     # dark green
    (255, 182, 193),  # light pink
    (153, 0, 51),     # dark red
    (210, 210, 210),  # light gray
    (64, 64, 64),     # dark gray
]

GRID_COLOR = (255, 255, 255)
DIVIDER_COLOR = (255, 0, 0)
EDGE_COLOR = (0, 0, 0)
NO_EDGE_COLOR = (245, 245, 245)


def pattern_sort_key(pattern: int):
    """Ordering for adjacency permutation: richer patterns first."""
    return (-int(pattern).bit_count(), -int(pattern))


def order_patterns(patterns) -> list[int]:
    """Distinct patterns sorted richest-first (popcount desc, value desc)."""
    return sorted({int(p) for p in np.asarray(patterns).ravel()}, key=pattern_sort_key)


def palette_for(g: GroupAssignment, palette=None) -> dict[int, tuple[int, int, int]]:
    """Deterministic pattern -> RGB map covering every pattern in ``g``.

    Palette slots are assigned in ascending (popcount, value) order, so the
    all-zero pattern is always the lightest color.  Raises when the palette
    is too small for the number of distinct patterns.
    """
    palette = DEFAULT_PALETTE if palette is None else palette
    present = sorted(
        {int(p) for p in g.patterns.ravel()}, key=lambda p: (p.bit_count(), p)
    )
    if len(present) > len(palette):
        raise ValueError(
            f"{len(present)} distinct patterns exceed the {len(palette)}-color palette; "
            "supply a larger palette"
        )
    return {p: palette[i] for i, p in enumerate(present)}


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary P6 image from an (H, W, 3) uint8 array."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def _paint_cells(cells: np.ndarray, scale: int, gridline: bool) -> np.ndarray:
    """Expand an (H, W, 3) cell grid by ``scale`` with optional 1px separators."""
    img = np.repeat(np.repeat(cells, scale, axis=0), scale, axis=1)
    if gridline and scale >= 3:
        img[::scale, :] = GRID_COLOR
        img[:, ::scale] = GRID_COLOR
    return img


def render_heatmap(g: GroupAssignment, out_prefix, scale: int = 10, palette=None):
    """Node x layer heat map of membership patterns.

    Rows are nodes, columns are layers (time increases to the right).  Writes
    ``<prefix>.ppm`` and ``<prefix>.csv`` (layer, node, pattern rows) and
    returns both paths.
    """
    colors = palette_for(g, palette)
    n, L = g.n, g.L
    cells = np.zeros((n, L, 3), dtype=np.uint8)
    for ell in range(L):
        for i in range(n):
            cells[i, ell] = colors[int(g.patterns[ell, i])]
    ppm_path = f"{out_prefix}.ppm"
    csv_path = f"{out_prefix}.csv"
    write_ppm(ppm_path, _paint_cells(cells, scale, gridline=True))
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "node", "pattern"])
        for ell in range(L):
            for i in range(n):
                writer.writerow([ell, i, int(g.patterns[ell, i])])
    return ppm_path, csv_path


def permutation_for_layer(g: GroupAssignment, layer: int) -> np.ndarray:
    """Node order for a permuted adjacency: pattern blocks richest-first,
    original index order within each block."""
    pats = g.patterns[layer]
    order = order_patterns(pats)
    rank = {p: idx for idx, p in enumerate(order)}
    keys = np.array([rank[int(p)] for p in pats])
    return np.argsort(keys, kind="stable")


def render_permuted_adjacency(
    net: TemporalNetwork,
    g: GroupAssignment,
    out_prefix,
    layers=None,
    scale: int = 6,
):
    """Per-layer adjacency matrices permuted into pattern blocks.

    Nodes are ordered so richer patterns come first; red divider lines mark
    block boundaries.  Writes ``<prefix>_layer<ell>.ppm`` images and one
    ``<prefix>_permutation.csv`` with (layer, position, node, pattern) rows.
    Returns the list of image paths plus the CSV path.
    """
    if g.n != net.n or g.L != net.L:
        raise ValueError("assignment does not match network dimensions")
    if layers is None:
        layers = range(net.L)
    image_paths = []
    rows = []
    for ell in layers:
        perm = permutation_for_layer(g, ell)
        pats = g.patterns[ell][perm]
        sub = net.adj[ell][np.ix_(perm, perm)]
        n = net.n
        cells = np.where(
            sub[:, :, None] == 1,
            np.array(EDGE_COLOR, dtype=np.uint8),
            np.array(NO_EDGE_COLOR, dtype=np.uint8),
        ).astype(np.uint8)
        img = _paint_cells(cells, scale, gridline=False)
        boundaries = [b for b in range(1, n) if pats[b] != pats[b - 1]]
        for b in boundaries:
            img[b * scale, :] = DIVIDER_COLOR
            img[:, b * scale] = DIVIDER_COLOR
        path = f"{out_prefix}_layer{ell}.ppm"
        write_ppm(path, img)
        image_paths.append(path)
        for pos, node in enumerate(perm.tolist()):
            rows.append([ell, pos, node, int(g.patterns[ell, node])])
    csv_path = f"{out_prefix}_permutation.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "position", "node", "pattern"])
        writer.writerows(rows)
    return image_paths, csv_path
