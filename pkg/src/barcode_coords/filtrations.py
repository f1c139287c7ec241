"""Filtered complexes built from images.

Pixels are vertices, 8-adjacent pixels are joined by edges, and every
3-clique (three pixels inside one 2x2 block) is filled with a triangle.  Edge
and triangle values are the maximum of their vertex values.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .persistence import FilteredComplex


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray  # (height, width), values in [0, 1]

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("GrayImage needs a nonempty 2-D pixel array")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class BinaryImage:
    on: np.ndarray  # (height, width) bool

    def __post_init__(self):
        on = np.asarray(self.on, dtype=bool)
        if on.ndim != 2 or on.size == 0:
            raise ValueError("BinaryImage needs a nonempty 2-D array")
        object.__setattr__(self, "on", on)

    @property
    def height(self) -> int:
        return self.on.shape[0]

    @property
    def width(self) -> int:
        return self.on.shape[1]


class SweepDirection(enum.Enum):
    LEFT_TO_RIGHT = "right"
    RIGHT_TO_LEFT = "left"
    TOP_TO_BOTTOM = "bottom"
    BOTTOM_TO_TOP = "top"

    @classmethod
    def parse(cls, name: str) -> "SweepDirection":
        aliases = {
            "right": cls.LEFT_TO_RIGHT, "l2r": cls.LEFT_TO_RIGHT, "lefttoright": cls.LEFT_TO_RIGHT,
            "left": cls.RIGHT_TO_LEFT, "r2l": cls.RIGHT_TO_LEFT, "righttoleft": cls.RIGHT_TO_LEFT,
            "bottom": cls.TOP_TO_BOTTOM, "down": cls.TOP_TO_BOTTOM, "t2b": cls.TOP_TO_BOTTOM,
            "toptobottom": cls.TOP_TO_BOTTOM,
            "top": cls.BOTTOM_TO_TOP, "up": cls.BOTTOM_TO_TOP, "b2t": cls.BOTTOM_TO_TOP,
            "bottomtotop": cls.BOTTOM_TO_TOP,
        }
        key = name.lower().replace("_", "").replace("-", "")
        if key not in aliases:
            raise ValueError(f"unknown sweep direction {name!r}")
        return aliases[key]


#: order used for the 32-entry digit vector
SWEEPS = (
    SweepDirection.LEFT_TO_RIGHT,
    SweepDirection.RIGHT_TO_LEFT,
    SweepDirection.TOP_TO_BOTTOM,
    SweepDirection.BOTTOM_TO_TOP,
)


def binarize(img: GrayImage, thresh: float = 0.5) -> BinaryImage:
    if not 0.0 <= thresh <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return BinaryImage(img.pixels > thresh)


def flag_complex(values: np.ndarray) -> FilteredComplex:
    """Lower-star flag complex of the 8-adjacency graph of a pixel grid.

    ``values`` is a 2-D float array; NaN marks pixels that are left out.
    Vertices are numbered in row-major order.
    """
    values = np.asarray(values, dtype=float)
    h, w = values.shape
    present = ~np.isnan(values)
    vid = np.full((h, w), -1, dtype=np.int64)
    vid[present] = np.arange(int(present.sum()))
    vvals = values[present]

    # edge index grids per offset; -1 where the edge is absent
    offsets = {"r": (0, 1), "d": (1, 0), "dr": (1, 1), "dl": (1, -1)}
    eid = {}
    ends, evals = [], []
    count = 0
    for name, (dr, dc) in offsets.items():
        grid = np.full((h, w), -1, dtype=np.int64)
        r0, r1 = 0, h - dr
        c0, c1 = max(0, -dc), w - max(0, dc)
        a = present[r0:r1, c0:c1] & present[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        k = int(a.sum())
        grid[r0:r1, c0:c1][a] = np.arange(count, count + k)
        u = vid[r0:r1, c0:c1][a]
        v = vid[r0 + dr:r1 + dr, c0 + dc:c1 + dc][a]
        ends.append(np.column_stack([u, v]))
        evals.append(np.maximum(vvals[u], vvals[v]))
        eid[name] = grid
        count += k
    edges = np.concatenate(ends) if ends else np.zeros((0, 2), dtype=np.int64)
    edge_values = np.concatenate(evals) if evals else np.zeros(0)

    # 2x2 block with corners a=(r,c) b=(r,c+1) c=(r+1,c) d=(r+1,c+1)
    if h > 1 and w > 1:
        ab = eid["r"][:-1, :-1]
        cd = eid["r"][1:, :-1]
        ac = eid["d"][:-1, :-1]
        bd = eid["d"][:-1, 1:]
        ad = eid["dr"][:-1, :-1]
        bc = eid["dl"][:-1, 1:]
        tris = []
        for e1, e2, e3 in ((ab, ac, bc), (ab, bd, ad), (ac, cd, ad), (bd, cd, bc)):
            ok = (e1 >= 0) & (e2 >= 0) & (e3 >= 0)
            tris.append(np.column_stack([e1[ok], e2[ok], e3[ok]]))
        triangles = np.concatenate(tris)
    else:
        triangles = np.zeros((0, 3), dtype=np.int64)
    tri_values = edge_values[triangles].max(axis=1) if len(triangles) else np.zeros(0)
    return FilteredComplex(vvals, edges, edge_values, triangles, tri_values)


def sweep_values(shape: tuple[int, int], direction: SweepDirection) -> np.ndarray:
    h, w = shape
    rows, cols = np.indices((h, w), dtype=float)
    if direction is SweepDirection.LEFT_TO_RIGHT:
        return cols
    if direction is SweepDirection.RIGHT_TO_LEFT:
        return (w - 1) - cols
    if direction is SweepDirection.TOP_TO_BOTTOM:
        return rows
    return (h - 1) - rows


def sweep_extent(img: BinaryImage | GrayImage, direction: SweepDirection) -> int:
    """Width for horizontal sweeps, height for vertical ones."""
    horizontal = direction in (SweepDirection.LEFT_TO_RIGHT, SweepDirection.RIGHT_TO_LEFT)
    return img.width if horizontal else img.height


def sweep_filtration(bin_img: BinaryImage, direction: SweepDirection) -> FilteredComplex:
    vals = sweep_values(bin_img.on.shape, direction)
    vals[~bin_img.on] = np.nan
    return flag_complex(vals)


def intensity_filtration(img: GrayImage, mode: str = "sublevel", mask: BinaryImage | None = None) -> FilteredComplex:
    """Sublevel adds dark pixels first; superlevel adds bright pixels first."""
    if mode not in ("sublevel", "superlevel"):
        raise ValueError(f"unknown intensity mode {mode!r}")
    vals = img.pixels.copy() if mode == "sublevel" else 1.0 - img.pixels
    if mask is not None:
        if mask.on.shape != img.pixels.shape:
            raise ValueError(f"mask shape {mask.on.shape} != image shape {img.pixels.shape}")
        vals[~mask.on] = np.nan
    return flag_complex(vals)


def _erode(on: np.ndarray) -> np.ndarray:
    p = np.pad(on, 1, constant_values=False)
    h, w = on.shape
    out = np.ones_like(on)
    for dr in (0, 1, 2):
        for dc in (0, 1, 2):
            out &= p[dr:dr + h, dc:dc + w]
    return out


def border_pixels(mask: BinaryImage) -> np.ndarray:
    """On-pixels 8-adjacent to an off-pixel or to the image edge."""
    return mask.on & ~_erode(mask.on)


def border_distance(mask: BinaryImage) -> np.ndarray:
    """Chessboard distance of each on-pixel to the mask border; -1 off the mask.

    Equals the number of successive 3x3 erosions a pixel survives.
    """
    on = mask.on
    if not on.any():
        raise ValueError("empty mask")
    dist = np.full(on.shape, -1, dtype=np.int64)
    level, k = on, 0
    while level.any():
        nxt = _erode(level)
        dist[level & ~nxt] = k
        level, k = nxt, k + 1
    return dist


@dataclass(frozen=True)
class SliceComplex:
    slice_id: int
    border_direction: str  # "near" or "far"
    intensity_mode: str  # "sublevel" or "superlevel"
    complex: FilteredComplex


def slice_masks(dist: np.ndarray, n_slices: int = 7, cumulative: bool = True) -> list[tuple[int, str, np.ndarray]]:
    """Pixel sets for each slice along the border-distance axis.

    ``[0, max_dist]`` is cut into ``n_slices`` equal bands.  In cumulative mode
    the "near" set of slice ``k`` holds pixels at distance at least the band's
    lower bound and the "far" set those at most its upper bound.  In disjoint
    mode both hold a single band, walked from opposite ends.
    """
    if n_slices < 1:
        raise ValueError("n_slices must be positive")
    on = dist >= 0
    if not on.any():
        raise ValueError("empty mask")
    D = int(dist.max())
    n = n_slices
    out = []
    for k in range(n):
        # band k = [k*D/n, (k+1)*D/n], compared in integers
        if cumulative:
            near = on & (dist * n >= k * D)
            far = on & (dist * n <= (k + 1) * D)
        else:
            def band(j):
                lo = dist * n >= j * D
                hi = dist * n <= (j + 1) * D if j == n - 1 else dist * n < (j + 1) * D
                return on & lo & hi
            near, far = band(k), band(n - 1 - k)
        out.append((k, "near", near))
        out.append((k, "far", far))
    return out


def slice_filtrations(
    img: GrayImage, mask: BinaryImage, n_slices: int = 7, cumulative: bool = True
) -> list[SliceComplex]:
    """``n_slices`` x 2 border directions x 2 intensity modes complexes."""
    if mask.on.shape != img.pixels.shape:
        raise ValueError("mask and image shapes differ")
    dist = border_distance(mask)
    out = []
    for k, direction, sel in slice_masks(dist, n_slices, cumulative):
        sub = BinaryImage(sel)
        for mode in ("sublevel", "superlevel"):
            out.append(SliceComplex(k, direction, mode, intensity_filtration(img, mode, sub)))
    return out
