"""Barcode features and feature matrices.

The four base features of a barcode with bars ``(x_i, y_i)`` are

    f1 = sum x_i (y_i - x_i)
    f2 = sum (y_max - y_i)(y_i - x_i)
    f3 = sum x_i**2 (y_i - x_i)**4
    f4 = sum (y_max - y_i)**2 (y_i - x_i)**4

and the lesion variants ``g1..g4`` divide them by the number of bars.  Every
term carries a factor of the bar length, so zero-length bars drop out.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .filtrations import (
    SWEEPS,
    BinaryImage,
    GrayImage,
    binarize,
    slice_filtrations,
    sweep_extent,
    sweep_filtration,
)
from .persistence import persistence_pairs

Barcode = Sequence[tuple[float, float]]

DIGIT_FEATURES = ("f1", "f2", "f3", "f4")
LESION_FEATURES = ("g1", "g2", "g3", "g4")

#: cap for essential bars of intensity filtrations (values live in [0, 1])
INTENSITY_CAP = 1.0


@dataclass(frozen=True)
class BarcodeSummary:
    y_max: float
    n: int


def _as_array(bc) -> np.ndarray:
    return np.asarray(bc, dtype=float).reshape(-1, 2)


def summarize(bc: Barcode) -> BarcodeSummary:
    """``y_max`` and count over positive-length bars only."""
    a = _as_array(bc)
    ys = a[a[:, 1] > a[:, 0], 1]
    return BarcodeSummary(float(ys.max()) if len(ys) else 0.0, len(ys))


def digit_features(bc: Barcode, ymax: float | None = None) -> list[float]:
    """``[f1, f2, f3, f4]``; sums are exactly rounded, so order and zero-length
    bars never change the result."""
    a = _as_array(bc)
    if ymax is None:
        ymax = summarize(a).y_max
    x, y = a[:, 0], a[:, 1]
    eta = y - x
    tail = ymax - y
    eta4 = eta**4
    return [
        math.fsum(x * eta),
        math.fsum(tail * eta),
        math.fsum(x * x * eta4),
        math.fsum(tail * tail * eta4),
    ]


def lesion_features(bc: Barcode, ymax: float | None = None) -> list[float]:
    """Base features averaged over the positive-length bars (0 if there are none)."""
    s = summarize(bc)
    if s.n == 0:
        return [0.0, 0.0, 0.0, 0.0]
    return [v / s.n for v in digit_features(bc, s.y_max if ymax is None else ymax)]


# --- per-sample vectors -------------------------------------------------------


def digit_feature_names() -> list[str]:
    return [f"{s.value}_b{d}_{f}" for s in SWEEPS for d in (0, 1) for f in DIGIT_FEATURES]


def digit_barcodes(img: BinaryImage) -> list[np.ndarray]:
    """Eight capped barcodes: for each sweep, degree 0 then degree 1.

    Essential bars are capped at the sweep extent.
    """
    out = []
    for s in SWEEPS:
        pairs = persistence_pairs(sweep_filtration(img, s))
        cap = sweep_extent(img, s)
        out.append(pairs.capped(0, cap))
        out.append(pairs.capped(1, cap))
    return out


def digit_vector(barcodes: Sequence[Barcode], extent: float | Sequence[float]) -> np.ndarray:
    """32 features from the eight sweep barcodes (order of :data:`SWEEPS` x degree).

    ``extent`` is the ``y_max`` used for every barcode, or one value per sweep.
    """
    if len(barcodes) != 8:
        raise ValueError(f"expected 8 barcodes, got {len(barcodes)}")
    ext = [float(extent)] * 4 if np.isscalar(extent) else [float(e) for e in extent]
    if len(ext) != 4:
        raise ValueError("extent must be a scalar or one value per sweep")
    out = []
    for i, bc in enumerate(barcodes):
        out.extend(digit_features(bc, ext[i // 2]))
    return np.array(out)


def digit_image_vector(img: GrayImage | BinaryImage, thresh: float = 0.5) -> np.ndarray:
    bin_img = binarize(img, thresh) if isinstance(img, GrayImage) else img
    return digit_vector(digit_barcodes(bin_img), [sweep_extent(bin_img, s) for s in SWEEPS])


def lesion_feature_names(n_slices: int = 7) -> list[str]:
    return [
        f"s{k}_{direction}_{mode}_b{d}_{g}"
        for k in range(n_slices)
        for direction in ("near", "far")
        for mode in ("sublevel", "superlevel")
        for d in (0, 1)
        for g in LESION_FEATURES
    ]


def lesion_barcodes(img: GrayImage, mask: BinaryImage, n_slices: int = 7,
                    cumulative: bool = True) -> list[np.ndarray]:
    """``n_slices * 8`` capped barcodes, ordered like :func:`lesion_feature_names`."""
    out = []
    for sc in slice_filtrations(img, mask, n_slices, cumulative):
        pairs = persistence_pairs(sc.complex)
        out.append(pairs.capped(0, INTENSITY_CAP))
        out.append(pairs.capped(1, INTENSITY_CAP))
    return out


def lesion_vector(barcodes: Sequence[Barcode]) -> np.ndarray:
    out = []
    for bc in barcodes:
        out.extend(lesion_features(bc))
    return np.array(out)


# --- feature matrices ---------------------------------------------------------


@dataclass
class Scaling:
    """Per-column min/max recorded on the fitting set."""

    mins: np.ndarray
    maxs: np.ndarray

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}


@dataclass
class FeatureMatrix:
    values: np.ndarray
    names: list[str]
    ids: list[str] = field(default_factory=list)
    labels: list = field(default_factory=list)
    scaling: Scaling | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1, len(self.names))
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.values))]
        if len(self.ids) != len(self.values):
            raise ValueError("one id per row required")
        if self.labels and len(self.labels) != len(self.values):
            raise ValueError("one label per row required")

    def __len__(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "label", *self.names])
        for i, row in enumerate(self.values):
            label = self.labels[i] if self.labels else ""
            w.writerow([self.ids[i], label, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FeatureMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:2] != ["id", "label"]:
            raise ValueError("feature CSV must start with an 'id,label' header")
        names = rows[0][2:]
        body = [r for r in rows[1:] if r]
        for r in body:
            if len(r) != len(names) + 2:
                raise ValueError(f"row {r[0]!r} has {len(r)} columns, expected {len(names) + 2}")
        labels = [_parse_label(r[1]) for r in body]
        if all(lab == "" for lab in labels):
            labels = []
        values = np.array([[float(v) for v in r[2:]] for r in body]).reshape(-1, len(names))
        return cls(values, names, [r[0] for r in body], labels)

    def to_json(self) -> str:
        return json.dumps({
            "names": self.names,
            "ids": self.ids,
            "labels": self.labels,
            "values": self.values.tolist(),
            "scaling": self.scaling.to_dict() if self.scaling else None,
        })

    @classmethod
    def from_json(cls, text: str) -> "FeatureMatrix":
        d = json.loads(text)
        sc = d.get("scaling")
        scaling = Scaling(np.array(sc["mins"]), np.array(sc["maxs"])) if sc else None
        return cls(np.array(d["values"], dtype=float), d["names"], d["ids"], d["labels"], scaling)


def _parse_label(s: str):
    try:
        return int(s)
    except ValueError:
        return s


def fit_scale(m: FeatureMatrix | np.ndarray) -> Scaling:
    X = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("cannot fit scaling on an empty matrix")
    return Scaling(X.min(axis=0), X.max(axis=0))


def apply_scale(scaling: Scaling, m: FeatureMatrix | np.ndarray):
    """Min-max scale into [0, 1], clamping; constant columns map to 0."""
    X = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=float)
    span = scaling.maxs - scaling.mins
    safe = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - scaling.mins) / safe, 0.0)
    Z = np.clip(Z, 0.0, 1.0)
    if isinstance(m, FeatureMatrix):
        return FeatureMatrix(Z, list(m.names), list(m.ids), list(m.labels), scaling)
    return Z
