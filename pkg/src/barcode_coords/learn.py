"""Soft-margin SVM classification (SMO), one-vs-one multiclass and cross-validation."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .features import apply_scale, fit_scale

THREADS_ENV = "BARCODE_COORDS_THREADS"


SELECTIONS = ("mvp", "second-order")


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelParams:
    kind: str = "gaussian"  # "gaussian" or "polynomial"
    gamma: float = 8.0
    coef_a: float = 0.0
    degree_d: int = 3

    def __post_init__(self):
        kind = {"rbf": "gaussian", "poly": "polynomial"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in ("gaussian", "polynomial"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if int(self.degree_d) != self.degree_d or self.degree_d < 1:
            raise ValueError("degree must be a positive integer")

    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(gamma={self.gamma:g})"
        return f"polynomial(gamma={self.gamma:g}, a={self.coef_a:g}, d={self.degree_d})"


def kernel_eval(k: KernelParams, u, v) -> float:
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if k.kind == "gaussian":
        d = u - v
        return math.exp(-k.gamma * float(d @ d))
    return (k.gamma * float(u @ v) + k.coef_a) ** k.degree_d


def kernel_matrix(k: KernelParams, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if k.kind == "gaussian":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * A @ B.T
        return np.exp(-k.gamma * np.maximum(sq, 0.0))
    return (k.gamma * (A @ B.T) + k.coef_a) ** k.degree_d


# --- binary SMO ---------------------------------------------------------------


@njit(cache=True)
def _smo(K, y, C, tol, max_iter, second_order):
    """SMO on the dual ``min 1/2 a'Qa - e'a``.

    ``i`` is always the maximal violator; ``j`` is the matching maximal
    violator, or with ``second_order`` the index of largest guaranteed
    objective decrease.  Returns ``(alpha, grad, iterations, gap)``; ``gap``
    is the final KKT violation ``max_up(-y G) - min_low(-y G)``.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while it < max_iter:
        i = -1
        j = -1
        vmax = -np.inf
        vmin = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > vmax:
                    vmax = v
                    i = t
            if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                if v < vmin:
                    vmin = v
                    j = t
        gap = vmax - vmin
        if i < 0 or j < 0 or gap <= tol:
            break
        if second_order:
            best = np.inf
            for t in range(n):
                if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                    b = vmax + y[t] * G[t]
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 1e-12:
                            a = 1e-12
                        if -b * b / a < best:
                            best = -b * b / a
                            j = t
            gap_ij = vmax + y[j] * G[j]
        else:
            gap_ij = gap
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            eta = 1e-12
        step = gap_ij / eta
        # alpha_i += y_i*step and alpha_j -= y_j*step keep sum(y*alpha) fixed
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        if lim_i < step:
            step = lim_i
        if lim_j < step:
            step = lim_j
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        # snap to the box to avoid drift
        if alpha[i] < 1e-12 * C:
            alpha[i] = 0.0
        elif alpha[i] > C * (1 - 1e-12):
            alpha[i] = C
        if alpha[j] < 1e-12 * C:
            alpha[j] = 0.0
        elif alpha[j] > C * (1 - 1e-12):
            alpha[j] = C
        for t in range(n):
            G[t] += y[t] * step * (K[t, i] - K[t, j])
        it += 1
    return alpha, G, it, gap


def _rho(alpha: np.ndarray, G: np.ndarray, y: np.ndarray, C: float) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_upper = alpha >= C
    ub_set = (at_upper & (y < 0)) | (~at_upper & (y > 0))
    lb_set = ~ub_set
    ub = yG[ub_set].min() if ub_set.any() else np.inf
    lb = yG[lb_set].max() if lb_set.any() else -np.inf
    if math.isinf(ub) or math.isinf(lb):
        return float(ub if math.isfinite(ub) else lb)
    return float((ub + lb) / 2)


@dataclass
class BinarySvm:
    """One decision function ``f(x) = sum coef_i K(sv_i, x) - rho``.

    ``f >= 0`` votes for ``positive``.
    """

    positive: object
    negative: object
    sv_index: np.ndarray  # rows of the training matrix
    alpha: np.ndarray  # nonzero duals of the support vectors
    sv_y: np.ndarray
    rho: float
    objective: float
    iterations: int
    kkt_gap: float

    @property
    def coef(self) -> np.ndarray:
        return self.alpha * self.sv_y


def solve_binary(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
                 max_iter: int | None = None, selection: str = "mvp") -> tuple[np.ndarray, float, float, int, float]:
    """SMO on a precomputed kernel matrix with labels in {-1, +1}.

    ``selection`` is ``"mvp"`` (maximal violating pair) or ``"second-order"``.
    Returns ``(alpha, rho, objective, iterations, kkt_gap)`` where objective is
    the minimized dual ``1/2 a'Qa - sum a``.
    """
    y = np.asarray(y, dtype=float)
    K = np.ascontiguousarray(K, dtype=float)
    if selection not in SELECTIONS:
        raise ValueError(f"unknown working-set selection {selection!r}")
    if max_iter is None:
        max_iter = max(10_000_000, 100 * len(y))
    alpha, G, it, gap = _smo(K, y, float(C), float(tol), int(max_iter), selection == "second-order")
    if gap > tol:
        raise ConvergenceError(f"SMO stopped after {it} iterations with KKT gap {gap:.3g} > {tol:g}")
    # Q alpha = G + 1
    obj = float(0.5 * alpha @ (G + 1.0) - alpha.sum())
    return alpha, _rho(alpha, G, y, C), obj, int(it), float(gap)


@dataclass
class SvmModel:
    kernel: KernelParams
    C: float
    classes: list
    machines: list[BinarySvm]
    X: np.ndarray  # training rows referenced by the machines
    tol: float = 1e-3

    def decision_values(self, Xq: np.ndarray) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if Xq.shape[1] != self.X.shape[1]:
            raise ValueError(f"dimension mismatch: model has {self.X.shape[1]} features, got {Xq.shape[1]}")
        used = np.unique(np.concatenate([m.sv_index for m in self.machines])) if self.machines else np.zeros(0, int)
        Kq = kernel_matrix(self.kernel, Xq, self.X[used]) if len(used) else np.zeros((len(Xq), 0))
        col = {int(u): c for c, u in enumerate(used)}
        out = np.empty((len(Xq), len(self.machines)))
        for p, m in enumerate(self.machines):
            cols = [col[int(s)] for s in m.sv_index]
            out[:, p] = Kq[:, cols] @ m.coef - m.rho
        return out

    def predict(self, Xq: np.ndarray) -> list:
        Xq = np.asarray(Xq, dtype=float)
        single = Xq.ndim == 1
        dv = self.decision_values(Xq)
        rank = {c: i for i, c in enumerate(self.classes)}
        out = []
        for row in dv:
            votes = np.zeros(len(self.classes), dtype=int)
            for p, m in enumerate(self.machines):
                votes[rank[m.positive] if row[p] >= 0 else rank[m.negative]] += 1
            out.append(self.classes[int(np.argmax(votes))])  # argmax: first = smallest label
        return out[0] if single else out


def _train_pairs(K: np.ndarray, y: Sequence, C: float, tol: float, max_iter: int | None,
                 selection: str = "mvp") -> tuple[list, list[BinarySvm]]:
    y = np.asarray(y)
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise ValueError("need at least two classes to train a classifier")
    machines = []
    for a_i in range(len(classes)):
        for b_i in range(a_i + 1, len(classes)):
            a, b = classes[a_i], classes[b_i]
            idx = np.flatnonzero((y == a) | (y == b))
            yy = np.where(y[idx] == a, 1.0, -1.0)
            alpha, rho, obj, it, gap = solve_binary(K[np.ix_(idx, idx)], yy, C, tol, max_iter, selection)
            nz = alpha > 0
            machines.append(BinarySvm(a, b, idx[nz], alpha[nz], yy[nz], rho, obj, it, gap))
    return classes, machines


def train_svc(X: np.ndarray, y: Sequence, k: KernelParams, C: float = 1000.0, tol: float = 1e-3,
              max_iter: int | None = None, selection: str = "mvp") -> SvmModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) != len(y):
        raise ValueError("X and y differ in length")
    if C <= 0:
        raise ValueError("C must be positive")
    classes, machines = _train_pairs(kernel_matrix(k, X), y, C, tol, max_iter, selection)
    return SvmModel(k, float(C), classes, machines, X, tol)


def predict(m: SvmModel, x) -> object:
    return m.predict(x)


# --- cross-validation -----------------------------------------------------------


@dataclass
class CvReport:
    folds: int
    fold_accuracy: list[float]
    mean_accuracy: float
    pooled_accuracy: float
    classes: list
    confusion: list[list[int]]  # rows: true class, cols: predicted
    kernel: KernelParams | None = None
    C: float | None = None
    predictions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kernel": None if self.kernel is None else asdict(self.kernel),
            "C": self.C,
            "folds": self.folds,
            "mean_accuracy": self.mean_accuracy,
            "pooled_accuracy": self.pooled_accuracy,
            "fold_accuracy": self.fold_accuracy,
            "classes": self.classes,
            "confusion": self.confusion,
        }


def stratified_folds(y: Sequence, folds: int, seed: int | None = 0) -> np.ndarray:
    """Fold index per sample; classes are dealt round-robin after a seeded shuffle."""
    n = len(y)
    if folds < 1:
        raise ValueError("folds must be positive")
    if folds > n:
        raise ValueError(f"folds ({folds}) > samples ({n})")
    y = np.asarray(y)
    perm = np.random.default_rng(seed).permutation(n)
    assign = np.empty(n, dtype=np.int64)
    counter = 0
    for c in sorted(set(y.tolist())):
        for i in perm[y[perm] == c]:
            assign[i] = counter % folds
            counter += 1
    return assign


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _fold_job(args):
    X, y, train, test, k, Cs, tol, scale, max_iter, selection = args
    if scale == "fold":
        sc = fit_scale(X[train])
        Xtr, Xte = apply_scale(sc, X[train]), apply_scale(sc, X[test])
    else:
        Xtr, Xte = X[train], X[test]
    ytr = y[train]
    seen = set(ytr.tolist())
    if len(seen) == 1:
        # a one-class training fold can only predict that class
        only = seen.pop()
        return {C: [only] * len(test) for C in Cs}
    K = kernel_matrix(k, Xtr)
    out = {}
    for C in Cs:
        classes, machines = _train_pairs(K, ytr, C, tol, max_iter, selection)
        model = SvmModel(k, float(C), classes, machines, Xtr, tol)
        out[C] = model.predict(Xte)
    return out


def cross_validate_grid(X, y, folds: int, k: KernelParams, Cs: Sequence[float], seed: int | None = 0,
                        scale: str = "fold", tol: float = 1e-3, workers: int | None = None,
                        max_iter: int | None = None, selection: str = "mvp") -> dict[float, CvReport]:
    """Cross-validate once per ``C`` on a shared fold partition.

    ``scale="fold"`` fits min-max scaling on each training fold and applies it
    to the held-out fold; ``"global"`` scales the whole matrix up front;
    ``"none"`` leaves features as given.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    if len(X) != len(y):
        raise ValueError("X and y differ in length")
    if scale not in ("fold", "global", "none"):
        raise ValueError(f"unknown scale mode {scale!r}")
    assign = stratified_folds(y, folds, seed)
    if scale == "global":
        X = apply_scale(fit_scale(X), X)
    jobs = []
    for f in range(folds):
        test = np.flatnonzero(assign == f)
        train = np.flatnonzero(assign != f)
        jobs.append((X, y, train, test, k, list(Cs), tol, scale, max_iter, selection))
    workers = default_workers() if workers is None else workers
    if workers > 1 and folds > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_fold_job, jobs))
    else:
        results = [_fold_job(j) for j in jobs]

    classes = sorted(set(y.tolist()))
    rank = {c: i for i, c in enumerate(classes)}
    reports = {}
    for C in Cs:
        conf = np.zeros((len(classes), len(classes)), dtype=int)
        accs = []
        preds = [None] * len(y)
        for f, res in enumerate(results):
            test = np.flatnonzero(assign == f)
            p = res[C]
            hits = 0
            for i, pi in zip(test, p):
                conf[rank[y[i].item()], rank[pi]] += 1
                hits += pi == y[i]
                preds[i] = pi
            accs.append(hits / len(test))
        reports[C] = CvReport(
            folds, accs, float(np.mean(accs)), float(np.trace(conf) / len(y)),
            classes, conf.tolist(), k, float(C), preds,
        )
    return reports


def cross_validate(X, y, folds: int, k: KernelParams, C: float = 1000.0, seed: int | None = 0,
                   scale: str = "fold", tol: float = 1e-3, workers: int | None = None,
                   selection: str = "mvp") -> CvReport:
    return cross_validate_grid(X, y, folds, k, [C], seed, scale, tol, workers, selection=selection)[C]


def loocv(X, y, k: KernelParams, C: float = 1000.0, scale: str = "fold", tol: float = 1e-3,
          workers: int | None = None, selection: str = "mvp") -> CvReport:
    return cross_validate(X, y, len(y), k, C, 0, scale, tol, workers, selection)


# --- sparse training files ------------------------------------------------------


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def export_sparse(X, y, path: str | Path) -> None:
    """Write ``<label> <idx>:<value> ...`` lines, 1-based indices, zeros omitted."""
    X = np.asarray(X, dtype=float)
    lines = []
    for row, label in zip(X.reshape(len(y), -1) if len(y) else [], y):
        parts = [_fmt(label) if isinstance(label, (int, float, np.number)) else str(label)]
        parts += [f"{j + 1}:{_fmt(v)}" for j, v in enumerate(row) if v != 0]
        lines.append(" ".join(parts) + "\n")
    Path(path).write_text("".join(lines), encoding="ascii")


def import_sparse(path: str | Path, n_features: int | None = None) -> tuple[np.ndarray, list]:
    rows, labels, width = [], [], 0
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.strip():
            continue
        head, *items = line.split()
        labels.append(int(head) if head.lstrip("-").isdigit() else float(head))
        entries = {}
        for it in items:
            j, v = it.split(":")
            entries[int(j) - 1] = float(v)
            width = max(width, int(j))
        rows.append(entries)
    n_features = width if n_features is None else n_features
    X = np.zeros((len(rows), n_features))
    for i, e in enumerate(rows):
        for j, v in e.items():
            X[i, j] = v
    return X, labels
