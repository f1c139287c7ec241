"""Dataset to feature-matrix plumbing shared by the CLI and experiment scripts."""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .features import (
    FeatureMatrix,
    digit_feature_names,
    digit_image_vector,
    lesion_barcodes,
    lesion_feature_names,
    lesion_vector,
)
from .filtrations import GrayImage
from .ingest import LesionSample, load_mnist, synth_digits, synth_lesions
from .learn import SELECTIONS, KernelParams, default_workers

DATASET_KINDS = ("mnist", "synth-digits", "synth-lesions", "features-csv")


class ConfigError(ValueError):
    pass


def _digit_job(args):
    img, thresh = args
    return digit_image_vector(img, thresh)


def _lesion_job(args):
    sample, n_slices, cumulative = args
    return lesion_vector(lesion_barcodes(sample.image, sample.mask, n_slices, cumulative))


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [fn(j) for j in jobs]


def digit_matrix(images: list[GrayImage], labels: list, thresh: float = 0.5,
                 workers: int | None = None) -> FeatureMatrix:
    workers = default_workers() if workers is None else workers
    rows = _map(_digit_job, [(im, thresh) for im in images], workers)
    names = digit_feature_names()
    return FeatureMatrix(np.array(rows).reshape(-1, len(names)), names, labels=list(labels))


def lesion_matrix(samples: list[LesionSample], n_slices: int = 7, cumulative: bool = True,
                  workers: int | None = None) -> FeatureMatrix:
    workers = default_workers() if workers is None else workers
    rows = _map(_lesion_job, [(s, n_slices, cumulative) for s in samples], workers)
    names = lesion_feature_names(n_slices)
    return FeatureMatrix(np.array(rows).reshape(-1, len(names)), names, labels=[s.label for s in samples])


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one classification experiment."""

    dataset: str = "synth-digits"
    images: str | None = None
    labels: str | None = None
    features_csv: str | None = None
    limit: int | None = 1000
    n: int = 100
    kernels: list[dict] = field(default_factory=lambda: [{"kind": "gaussian", "gamma": 8.0}])
    c_grid: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0, 1000.0])
    folds: int = 100
    loocv: bool = False
    n_slices: int = 7
    cumulative_slices: bool = True
    threshold: float = 0.5
    seed: int = 0
    scale: str = "fold"
    selection: str = "mvp"
    tol: float = 1e-3
    output: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.dataset not in DATASET_KINDS:
            raise ConfigError(f"dataset must be one of {DATASET_KINDS}, got {self.dataset!r}")
        if self.dataset == "mnist" and not (self.images and self.labels):
            raise ConfigError("mnist dataset needs 'images' and 'labels' paths")
        if self.dataset == "features-csv" and not self.features_csv:
            raise ConfigError("features-csv dataset needs 'features_csv'")
        if self.dataset.startswith("synth") and self.n < 0:
            raise ConfigError("n must be nonnegative")
        if not self.kernels:
            raise ConfigError("at least one kernel is required")
        try:
            self.kernel_params()
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad kernel: {e}") from None
        if not self.c_grid or any(not c > 0 for c in self.c_grid):
            raise ConfigError("c_grid must be a nonempty list of positive values")
        if self.folds < 1:
            raise ConfigError("folds must be positive")
        if self.n_slices < 1:
            raise ConfigError("n_slices must be positive")
        if not 0 <= self.threshold <= 1:
            raise ConfigError("threshold must lie in [0, 1]")
        if self.scale not in ("fold", "global", "none"):
            raise ConfigError(f"unknown scale mode {self.scale!r}")
        if self.selection not in SELECTIONS:
            raise ConfigError(f"selection must be one of {SELECTIONS}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        return self

    def kernel_params(self) -> list[KernelParams]:
        return [KernelParams(**k) for k in self.kernels]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d).validate()
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        base = Path(path).parent
        for key in ("images", "labels", "features_csv", "output"):
            if d.get(key) and not Path(d[key]).is_absolute() and not Path(d[key]).exists():
                candidate = base / d[key]
                if candidate.exists() or key == "output":
                    d[key] = str(candidate)
        return cls.from_dict(d)


def build_matrix(cfg: ExperimentConfig, workers: int | None = None) -> FeatureMatrix:
    if cfg.dataset == "features-csv":
        return FeatureMatrix.from_csv(Path(cfg.features_csv).read_text())
    if cfg.dataset == "mnist":
        images, labels = load_mnist(cfg.images, cfg.labels, cfg.limit, cfg.seed)
        return digit_matrix(images, labels, cfg.threshold, workers)
    if cfg.dataset == "synth-digits":
        images, labels = synth_digits(cfg.n, cfg.seed)
        return digit_matrix(images, labels, cfg.threshold, workers)
    samples = synth_lesions(cfg.n, cfg.seed) if cfg.n > 0 else []
    return lesion_matrix(samples, cfg.n_slices, cfg.cumulative_slices, workers)
