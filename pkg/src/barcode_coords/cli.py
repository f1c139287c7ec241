"""Command-line interface.

    barcode-coords barcode [--filtration sweep|intensity|border-slices] IMAGE
    barcode-coords features --dataset synth-digits --n 10 --out feats.csv
    barcode-coords classify CONFIG.json
    barcode-coords verify-algebra --max-degree 8

Exit codes: 0 success, 1 failed verification, 2 bad input or config,
3 solver did not converge.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import algebra
from .filtrations import (
    SWEEPS,
    BinaryImage,
    SweepDirection,
    binarize,
    intensity_filtration,
    slice_filtrations,
    sweep_filtration,
)
from .ingest import IdxError, PgmError, load_image, read_pgm
from .learn import ConvergenceError, cross_validate_grid, export_sparse
from .persistence import bars_to_json, bars_to_text, compute_persistence
from .pipeline import DATASET_KINDS, ConfigError, ExperimentConfig, build_matrix


class UsageError(Exception):
    pass


def _read_image(path: str):
    try:
        if path == "-":
            return read_pgm(sys.stdin.buffer.read())
        return load_image(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from None
    except (PgmError, IdxError, IndexError) as e:
        raise UsageError(f"{path}: {e}") from None


# --- barcode ------------------------------------------------------------------


def cmd_barcode(args) -> int:
    img = _read_image(args.image)
    entries = []  # (tags, bars)
    if args.filtration == "sweep":
        names = ["all"] if args.all_sweeps else args.sweep
        dirs = list(SWEEPS) if "all" in names else [SweepDirection.parse(s) for s in names]
        bimg = binarize(img, args.threshold)
        for d in dirs:
            entries.append(({"filtration": "sweep", "sweep": d.value}, compute_persistence(sweep_filtration(bimg, d))))
    elif args.filtration == "intensity":
        modes = ["sublevel", "superlevel"] if args.mode == "both" else [args.mode]
        mask = _mask(args, img)
        for m in modes:
            entries.append(({"filtration": "intensity", "mode": m}, compute_persistence(intensity_filtration(img, m, mask))))
    else:
        mask = _mask(args, img) or BinaryImage(np.ones(img.pixels.shape, dtype=bool))
        for sc in slice_filtrations(img, mask, args.slices, not args.disjoint):
            tags = {"filtration": "border-slices", "slice": sc.slice_id,
                    "border": sc.border_direction, "mode": sc.intensity_mode}
            entries.append((tags, compute_persistence(sc.complex)))

    records = []
    for tags, bars in entries:
        for dim in (0, 1):
            records.append(dict(tags, dim=dim, bars=[b for b in bars if b.dim == dim]))
    if args.format == "json":
        text = json.dumps({"barcodes": [dict(r, bars=bars_to_json(r["bars"])) for r in records]}, indent=1) + "\n"
    else:
        chunks = []
        for r in records:
            head = " ".join(f"{k}={v}" for k, v in r.items() if k != "bars")
            chunks.append(f"# {head}\n" + bars_to_text(r["bars"]))
        text = "".join(chunks)
    _emit(text, args.out)
    return 0


def _mask(args, img):
    if not getattr(args, "mask", None):
        return None
    m = _read_image(args.mask)
    if m.pixels.shape != img.pixels.shape:
        raise UsageError("mask and image sizes differ")
    return BinaryImage(m.pixels > 0.5)


def _emit(text: str, out: str | None):
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- features -----------------------------------------------------------------


def cmd_features(args) -> int:
    cfg = ExperimentConfig(
        dataset=args.dataset, images=args.images, labels=args.labels, features_csv=None,
        limit=args.limit, n=args.n, n_slices=args.slices, cumulative_slices=not args.disjoint,
        threshold=args.threshold, seed=args.seed,
    )
    if args.dataset == "features-csv":
        raise UsageError("features needs an image dataset, not features-csv")
    try:
        cfg.validate()
        fm = build_matrix(cfg, args.workers)
    except ConfigError as e:
        raise UsageError(str(e)) from None
    except (OSError, IdxError) as e:
        raise UsageError(f"cannot load dataset: {e}") from None
    _emit(fm.to_csv(), args.out)
    if args.sparse_out:
        export_sparse(fm.values, fm.labels, args.sparse_out)
    print(f"{len(fm)} samples x {len(fm.names)} features", file=sys.stderr)
    return 0


# --- classify -----------------------------------------------------------------


def _overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    d = cfg.to_dict()
    if args.kernel:
        k = {"kind": args.kernel}
        if args.gamma is not None:
            k["gamma"] = args.gamma
        if args.coef_a is not None:
            k["coef_a"] = args.coef_a
        if args.degree is not None:
            k["degree_d"] = args.degree
        d["kernels"] = [k]
    if args.c_grid:
        d["c_grid"] = [float(c) for c in args.c_grid.split(",")]
    for key in ("folds", "seed", "scale", "selection"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    if args.loocv:
        d["loocv"] = True
    if args.out:
        d["output"] = args.out
    return ExperimentConfig.from_dict(d)


def cmd_classify(args) -> int:
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        cfg = _overrides(cfg, args)
        fm = build_matrix(cfg, args.workers)
    except ConfigError as e:
        raise UsageError(f"config error: {e}") from None
    except (OSError, IdxError) as e:
        raise UsageError(f"cannot load dataset: {e}") from None
    n = len(fm)
    folds = n if cfg.loocv else cfg.folds
    if folds > n:
        raise UsageError(f"config error: folds ({folds}) > samples ({n})")
    if len(set(fm.labels)) < 2:
        raise UsageError("config error: dataset needs at least two classes")

    report = {"config": cfg.to_dict(), "samples": n, "features": len(fm.names), "results": []}
    for k in cfg.kernel_params():
        reps = cross_validate_grid(fm.values, fm.labels, folds, k, cfg.c_grid, cfg.seed, cfg.scale,
                                   cfg.tol, args.workers, selection=cfg.selection)
        best = max(cfg.c_grid, key=lambda c: (reps[c].mean_accuracy, -c))
        for C in cfg.c_grid:
            print(f"{k.label():45s} C={C:<8g} mean accuracy {reps[C].mean_accuracy:.4f}")
        print(f"{k.label():45s} best C={best:g}: {reps[best].mean_accuracy:.4f}")
        report["results"].append({
            "kernel": k.__dict__.copy(),
            "best_C": best,
            "best_mean_accuracy": reps[best].mean_accuracy,
            "by_C": [reps[C].to_dict() for C in cfg.c_grid],
        })
    text = json.dumps(report, indent=1) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    return 0


# --- verify-algebra -------------------------------------------------------------


def _flipped_generator(bc, g):
    # test hook: p_{a+1,b} + p_{a,b+1}, which is not zero-bar insensitive
    return algebra.eval_power_sum(bc, (g.a + 1, g.b)) + algebra.eval_power_sum(bc, (g.a, g.b + 1))


def cmd_verify_algebra(args) -> int:
    rng = np.random.default_rng(args.seed)
    evaluate = _flipped_generator if args.inject_bug else algebra.eval_generator
    failures = []

    coeffs = algebra.hilbert_coefficients(args.max_degree)
    counts = [len(algebra.basis_monomials(k)) for k in range(args.max_degree + 1)]
    print("degree  hilbert  basis")
    for k, (c, b) in enumerate(zip(coeffs, counts)):
        print(f"{k:6d}  {c:7d}  {b:5d}")
    if coeffs != counts:
        failures.append("Hilbert coefficients disagree with basis counts")

    gens = algebra.generators_up_to(min(args.max_degree, 5))
    for _ in range(args.trials):
        n = int(rng.integers(0, 11))
        bc = [tuple(sorted(rng.uniform(-5, 5, size=2))) for _ in range(n)]
        c = float(rng.uniform(-5, 5))
        pos = int(rng.integers(0, n + 1))
        padded = bc[:pos] + [(c, c)] + bc[pos:]
        bad = [g for g in gens if evaluate(padded, g) != evaluate(bc, g)]
        if bad:
            failures.append(f"zero-bar invariance fails for generator {bad[0]} at c={c}")
            break
    print(f"zero-bar invariance: {args.trials} random barcodes, {len(gens)} generators")

    for g in algebra.generators_up_to(min(args.max_degree, 4)):
        res = algebra.check_derivation_condition(lambda bc, g=g: evaluate(bc, g), n=2,
                                                 trials=max(1, args.trials // 10), rng=rng)
        if not res:
            failures.append(f"derivation condition fails for {g}: residual {res.failure[2]:.3g}")
            break
    if algebra.check_derivation_condition(lambda bc: algebra.eval_power_sum(bc, (1, 0)), n=1, trials=5):
        failures.append("bare power sum p_{1,0} passes the derivation check")
    print("derivation condition: generators of degree <= 4")

    md = min(args.max_degree, 3)
    N = md * (md + 1) // 2
    rep = algebra.check_free_generation(md, (N + 1) // 2 + 1, rng=rng)
    print(f"jacobian rank: {rep.rank} of {rep.n_generators} generators")
    if not rep.full_rank:
        failures.append(f"generator Jacobian has rank {rep.rank} < {rep.n_generators}")

    if args.json:
        Path(args.json).write_text(json.dumps(algebra.hilbert_report(args.max_degree)) + "\n")
    if failures:
        print(f"FAIL: {failures[0]}", file=sys.stderr)
        return 1
    print("all algebra checks passed")
    return 0


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="barcode-coords", description="Barcode coordinates for image classification")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $BARCODE_COORDS_THREADS or CPU count)")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("barcode", help="persistence barcodes of one image (PGM or IDX)")
    b.add_argument("image", help="image path, or - for PGM on stdin")
    b.add_argument("--filtration", choices=["sweep", "intensity", "border-slices"], default="sweep")
    b.add_argument("--sweep", action="append", default=None,
                   choices=["left", "right", "top", "bottom", "all"],
                   help="sweep direction (the side the sweep moves toward); repeatable")
    b.add_argument("--all-sweeps", action="store_true", help="same as --sweep all")
    b.add_argument("--threshold", type=float, default=0.5)
    b.add_argument("--mode", choices=["sublevel", "superlevel", "both"], default="both")
    b.add_argument("--mask", help="mask image for intensity/border-slices filtrations")
    b.add_argument("--slices", type=int, default=7)
    b.add_argument("--disjoint", action="store_true", help="disjoint distance bands instead of cumulative")
    b.add_argument("--format", choices=["json", "text"], default="json")
    b.add_argument("--out")
    b.set_defaults(func=cmd_barcode)

    f = sub.add_parser("features", help="feature matrix as CSV")
    f.add_argument("--dataset", choices=[k for k in DATASET_KINDS if k != "features-csv"], default="synth-digits")
    f.add_argument("--n", type=int, default=10, help="samples (synth-digits) or samples per class (synth-lesions)")
    f.add_argument("--images")
    f.add_argument("--labels")
    f.add_argument("--limit", type=int, default=None)
    f.add_argument("--slices", type=int, default=7)
    f.add_argument("--disjoint", action="store_true")
    f.add_argument("--threshold", type=float, default=0.5)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--sparse-out", help="also write a sparse training file")
    f.add_argument("--out")
    f.set_defaults(func=cmd_features)

    c = sub.add_parser("classify", help="cross-validated SVM accuracy")
    c.add_argument("config", nargs="?", help="experiment config (JSON)")
    c.add_argument("--kernel", choices=["gaussian", "poly", "polynomial"])
    c.add_argument("--gamma", type=float)
    c.add_argument("--coef-a", type=float)
    c.add_argument("--degree", type=int)
    c.add_argument("--c-grid", help="comma-separated C values")
    c.add_argument("--folds", type=int)
    c.add_argument("--loocv", action="store_true")
    c.add_argument("--seed", type=int)
    c.add_argument("--scale", choices=["fold", "global", "none"])
    c.add_argument("--selection", choices=["mvp", "second-order"])
    c.add_argument("--out", help="JSON report path")
    c.set_defaults(func=cmd_classify)

    v = sub.add_parser("verify-algebra", help="numerical checks of the invariant ring")
    v.add_argument("--max-degree", type=int, default=8)
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--json", help="write Hilbert coefficients and basis to this file")
    v.add_argument("--inject-bug", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify_algebra)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "sweep", None) is None and args.command == "barcode":
        args.sweep = ["right"]
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        print(f"solver did not converge: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
