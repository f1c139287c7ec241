"""Persistent homology of filtered complexes of dimension at most two.

Degree-0 bars come from a union-find sweep over vertices and edges with the
elder rule; degree-1 bars from reducing the triangle boundary matrix over GF(2).
Cells enter the filtration in ``(value, dim, id)`` order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from numba import njit

INF = math.inf


class NonMonotoneError(ValueError):
    """A face enters the filtration after one of its cofaces."""

    def __init__(self, face: int, coface: int, face_value: float, coface_value: float):
        self.face, self.coface = face, coface
        super().__init__(
            f"cell {coface} (value {coface_value}) precedes its face {face} (value {face_value})"
        )


@dataclass(frozen=True)
class Cell:
    id: int
    dim: int
    boundary: tuple[int, ...]
    value: float


@dataclass(frozen=True, order=True)
class Bar:
    dim: int
    birth: float
    death: float = INF

    @property
    def essential(self) -> bool:
        return math.isinf(self.death)

    @property
    def length(self) -> float:
        return self.death - self.birth


@dataclass
class FilteredComplex:
    """Vertices, edges and triangles with filtration values.

    Stored as arrays: ``edges`` holds vertex indices, ``triangles`` holds edge
    indices.  Cell ids are assigned vertices first, then edges, then
    triangles, so the id of edge ``e`` is ``n_vertices + e``.
    """

    vertex_values: np.ndarray
    edges: np.ndarray
    edge_values: np.ndarray
    triangles: np.ndarray
    triangle_values: np.ndarray

    def __post_init__(self):
        self.vertex_values = np.asarray(self.vertex_values, dtype=float).reshape(-1)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.edge_values = np.asarray(self.edge_values, dtype=float).reshape(-1)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.triangle_values = np.asarray(self.triangle_values, dtype=float).reshape(-1)
        if len(self.edges) != len(self.edge_values) or len(self.triangles) != len(self.triangle_values):
            raise ValueError("cell arrays and value arrays differ in length")

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_values)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def __len__(self) -> int:
        return self.n_vertices + self.n_edges + self.n_triangles

    @classmethod
    def empty(cls) -> "FilteredComplex":
        return cls(np.zeros(0), np.zeros((0, 2)), np.zeros(0), np.zeros((0, 3)), np.zeros(0))

    @classmethod
    def from_cells(cls, cells: Iterable[Cell]) -> "FilteredComplex":
        """Build from explicit cells with arbitrary distinct ids.

        Within each dimension cells are stored in increasing id order, which
        keeps the ``(value, dim, id)`` tie-break intact.
        """
        by_dim: dict[int, list[Cell]] = {0: [], 1: [], 2: []}
        for c in cells:
            if c.dim not in by_dim:
                raise ValueError(f"cell {c.id} has unsupported dimension {c.dim}")
            by_dim[c.dim].append(c)
        for lst in by_dim.values():
            lst.sort(key=lambda c: c.id)
        pos = {}
        for d in (0, 1, 2):
            for i, c in enumerate(by_dim[d]):
                if c.id in pos:
                    raise ValueError(f"duplicate cell id {c.id}")
                pos[c.id] = (d, i)

        def local(face: int, dim: int, owner: Cell) -> int:
            d, i = pos.get(face, (None, None))
            if d != dim:
                raise ValueError(f"cell {owner.id}: boundary id {face} is not a {dim}-cell")
            return i

        for c in by_dim[0]:
            if c.boundary:
                raise ValueError(f"vertex {c.id} has a nonempty boundary")
        edges = []
        for c in by_dim[1]:
            if len(c.boundary) != 2:
                raise ValueError(f"edge {c.id} needs 2 boundary vertices")
            edges.append([local(f, 0, c) for f in c.boundary])
        tris = []
        for c in by_dim[2]:
            if len(c.boundary) != 3:
                raise ValueError(f"triangle {c.id} needs 3 boundary edges")
            tris.append([local(f, 1, c) for f in c.boundary])
        cx = cls(
            [c.value for c in by_dim[0]],
            np.array(edges, dtype=np.int64).reshape(-1, 2),
            [c.value for c in by_dim[1]],
            np.array(tris, dtype=np.int64).reshape(-1, 3),
            [c.value for c in by_dim[2]],
        )
        cx._ids = [c.id for d in (0, 1, 2) for c in by_dim[d]]
        return cx

    def cell_id(self, dim: int, index: int) -> int:
        offset = (0, self.n_vertices, self.n_vertices + self.n_edges)[dim]
        ids = getattr(self, "_ids", None)
        return ids[offset + index] if ids is not None else offset + index

    def cells(self) -> Iterator[Cell]:
        for i, v in enumerate(self.vertex_values):
            yield Cell(self.cell_id(0, i), 0, (), float(v))
        for i, (e, v) in enumerate(zip(self.edges, self.edge_values)):
            yield Cell(self.cell_id(1, i), 1, tuple(self.cell_id(0, int(u)) for u in e), float(v))
        for i, (t, v) in enumerate(zip(self.triangles, self.triangle_values)):
            yield Cell(self.cell_id(2, i), 2, tuple(self.cell_id(1, int(u)) for u in t), float(v))

    def check_monotone(self) -> None:
        """Raise :class:`NonMonotoneError` on the first face/coface violation."""
        if self.n_edges:
            fv = self.vertex_values[self.edges]
            bad = np.argwhere(fv > self.edge_values[:, None])
            if len(bad):
                e, k = bad[0]
                u = self.edges[e, k]
                raise NonMonotoneError(
                    self.cell_id(0, int(u)), self.cell_id(1, int(e)),
                    float(self.vertex_values[u]), float(self.edge_values[e]),
                )
        if self.n_triangles:
            fv = self.edge_values[self.triangles]
            bad = np.argwhere(fv > self.triangle_values[:, None])
            if len(bad):
                t, k = bad[0]
                e = self.triangles[t, k]
                raise NonMonotoneError(
                    self.cell_id(1, int(e)), self.cell_id(2, int(t)),
                    float(self.edge_values[e]), float(self.triangle_values[t]),
                )

    def subcomplex_mask(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.vertex_values <= t, self.edge_values <= t, self.triangle_values <= t


def _order(values: np.ndarray) -> np.ndarray:
    # stable sort: ties resolved by local index, i.e. by cell id
    return np.argsort(values, kind="stable")


@njit(cache=True)
def _union_find(n_vertices, edges, edge_order, vertex_values):
    """Elder-rule merges.  Returns (dying vertex, killing edge) per merge and a
    flag per edge marking those that close a cycle."""
    parent = np.arange(n_vertices)
    dying = np.empty(len(edge_order), dtype=np.int64)
    killer = np.empty(len(edge_order), dtype=np.int64)
    positive = np.zeros(len(edge_order), dtype=np.bool_)
    m = 0
    for e in edge_order:
        ru = edges[e, 0]
        while parent[ru] != ru:
            parent[ru] = parent[parent[ru]]
            ru = parent[ru]
        rw = edges[e, 1]
        while parent[rw] != rw:
            parent[rw] = parent[parent[rw]]
            rw = parent[rw]
        if ru == rw:
            positive[e] = True
            continue
        # the root is always the oldest vertex (smallest value, then index)
        if vertex_values[rw] < vertex_values[ru] or (vertex_values[rw] == vertex_values[ru] and rw < ru):
            ru, rw = rw, ru
        parent[rw] = ru
        dying[m] = rw
        killer[m] = e
        m += 1
    roots = np.empty(n_vertices, dtype=np.bool_)
    for v in range(n_vertices):
        roots[v] = parent[v] == v
    return dying[:m], killer[:m], positive, roots


@dataclass
class PersistencePairs:
    """Bars as parallel arrays, sorted by ``(dim, birth, death)``."""

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray

    def __len__(self) -> int:
        return len(self.dims)

    def bars(self) -> list[Bar]:
        return [Bar(d, b, x) for d, b, x in zip(self.dims.tolist(), self.births.tolist(), self.deaths.tolist())]

    def capped(self, dim: int, cap: float) -> np.ndarray:
        """``(k, 2)`` array of ``(birth, death)`` for one dimension, infinity capped."""
        sel = self.dims == dim
        b, d = self.births[sel], self.deaths[sel]
        if len(b) and (cap < b.max() or cap < d[np.isfinite(d)].max(initial=-INF)):
            raise ValueError(f"cap {cap} is below a bar endpoint")
        return np.column_stack([b, np.where(np.isinf(d), cap, d)])


def persistence_pairs(cx: FilteredComplex) -> PersistencePairs:
    """Degree-0 and degree-1 bars as arrays; see :func:`compute_persistence`."""
    cx.check_monotone()
    vv, ev, tv = cx.vertex_values, cx.edge_values, cx.triangle_values
    edge_order = _order(ev)
    dying, killer, positive, roots = _union_find(cx.n_vertices, cx.edges, edge_order, vv)
    dims = [np.zeros(len(dying) + int(roots.sum()), dtype=np.int64)]
    births = [vv[dying], vv[roots]]
    deaths = [ev[killer], np.full(int(roots.sum()), INF)]

    # degree 1: column reduction; columns are int bitmasks over edge positions
    rank = np.empty(cx.n_edges, dtype=np.int64)
    rank[edge_order] = np.arange(cx.n_edges)
    tri_ranks = rank[cx.triangles].tolist() if cx.n_triangles else []
    pivots: dict[int, int] = {}
    pair_edge, pair_tri = [], []
    for t in _order(tv).tolist():
        r0, r1, r2 = tri_ranks[t]
        col = (1 << r0) ^ (1 << r1) ^ (1 << r2)
        while col:
            low = col.bit_length() - 1
            other = pivots.get(low)
            if other is None:
                pivots[low] = col
                pair_edge.append(low)
                pair_tri.append(t)
                break
            col ^= other
    paired_edges = edge_order[np.array(pair_edge, dtype=np.int64)]
    paired = np.zeros(cx.n_edges, dtype=bool)
    paired[paired_edges] = True
    essential = np.flatnonzero(positive & ~paired)
    n1 = len(paired_edges) + len(essential)
    dims.append(np.ones(n1, dtype=np.int64))
    births += [ev[paired_edges], ev[essential]]
    deaths += [tv[np.array(pair_tri, dtype=np.int64)], np.full(len(essential), INF)]

    d, b, x = np.concatenate(dims), np.concatenate(births), np.concatenate(deaths)
    order = np.lexsort((x, b, d))
    return PersistencePairs(d[order], b[order], x[order])


def compute_persistence(cx: FilteredComplex) -> list[Bar]:
    """Degree-0 and degree-1 bars of a filtered complex, sorted.

    Zero-length bars are kept.  Essential classes get ``death = inf``.
    Raises :class:`NonMonotoneError` if a face enters after a coface.
    """
    return persistence_pairs(cx).bars()


def _gf2_rank(columns: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for v in columns:
        while v:
            h = v.bit_length() - 1
            if h not in basis:
                basis[h] = v
                break
            v ^= basis[h]
    return len(basis)


def betti_at(cx: FilteredComplex, t: float) -> tuple[int, int]:
    """Betti numbers ``(b0, b1)`` of the subcomplex of cells with value ``<= t``.

    Computed from GF(2) ranks of the boundary matrices; used as an oracle for
    :func:`compute_persistence`.
    """
    vmask, emask, tmask = cx.subcomplex_mask(t)
    n_v, n_e = int(vmask.sum()), int(emask.sum())
    r1 = _gf2_rank((1 << int(u)) | (1 << int(w)) for u, w in cx.edges[emask])
    r2 = _gf2_rank((1 << int(a)) ^ (1 << int(b)) ^ (1 << int(c)) for a, b, c in cx.triangles[tmask])
    return n_v - r1, n_e - r1 - r2


def cap_barcode(bars: Sequence[Bar], cap: float, dim: int | None = None) -> list[tuple[float, float]]:
    """Replace infinite deaths by ``cap`` and return ``(birth, death)`` pairs.

    With ``dim`` given, only bars of that dimension are kept; otherwise all
    bars must share one dimension.
    """
    if dim is not None:
        bars = [b for b in bars if b.dim == dim]
    elif len({b.dim for b in bars}) > 1:
        raise ValueError("bars of several dimensions; pass dim=")
    out = []
    for b in bars:
        if cap < b.birth or (not b.essential and cap < b.death):
            raise ValueError(f"cap {cap} is below an endpoint of {b}")
        out.append((b.birth, cap if b.essential else b.death))
    return out


# --- serialization ----------------------------------------------------------


def _num(v: float):
    if math.isinf(v):
        return "inf"
    return int(v) if float(v).is_integer() else v


def bars_to_json(bars: Sequence[Bar]) -> list:
    return [[b.dim, _num(b.birth), _num(b.death)] for b in bars]


def bars_from_json(data: Sequence) -> list[Bar]:
    return [Bar(int(d), float(x), float(y)) for d, x, y in data]


def dumps_bars(bars: Sequence[Bar]) -> str:
    return json.dumps(bars_to_json(bars))


def bars_to_text(bars: Sequence[Bar]) -> str:
    """One ``dim birth death`` line per bar."""
    return "".join(f"{b.dim} {_num(b.birth)} {_num(b.death)}\n" for b in bars)


def bars_from_text(text: str) -> list[Bar]:
    out = []
    for line in text.splitlines():
        if line.strip():
            d, x, y = line.split()
            out.append(Bar(int(d), float(x), float(y)))
    return out
