"""Sweep-filtration digit classification on MNIST.

Default run: the 1,000-digit subset with 100-fold cross validation for the
gaussian and polynomial kernels over the C grid in ``configs/mnist1000.json``.
``--extended`` repeats the gaussian run on every digit in the IDX files (5,000
for the bundled subset) with fewer folds; it reports numbers but has no
pass/fail threshold.

    python scripts/run_mnist.py [--config configs/mnist1000.json] [--extended --folds 10]
"""
import argparse
import json
import time
from dataclasses import replace
from pathlib import Path

from barcode_coords.learn import cross_validate_grid
from barcode_coords.pipeline import ExperimentConfig, build_matrix

ROOT = Path(__file__).resolve().parents[1]


def run(cfg: ExperimentConfig, workers=None) -> dict:
    t0 = time.perf_counter()
    fm = build_matrix(cfg, workers)
    t_feat = time.perf_counter() - t0
    print(f"{len(fm)} digits, {len(fm.names)} features ({t_feat:.1f}s)")
    out = {"config": cfg.to_dict(), "feature_seconds": t_feat, "results": []}
    for k in cfg.kernel_params():
        t1 = time.perf_counter()
        reps = cross_validate_grid(fm.values, fm.labels, cfg.folds, k, cfg.c_grid, cfg.seed, cfg.scale,
                                   cfg.tol, workers, selection=cfg.selection)
        dt = time.perf_counter() - t1
        for C in cfg.c_grid:
            r = reps[C]
            print(f"  {k.label():42s} C={C:<6g} mean {r.mean_accuracy:.4f}  pooled {r.pooled_accuracy:.4f}")
        best = max(cfg.c_grid, key=lambda c: (reps[c].mean_accuracy, -c))
        print(f"  -> best C={best:g}: {reps[best].mean_accuracy:.4f} ({dt:.1f}s)")
        out["results"].append({"kernel": k.__dict__.copy(), "seconds": dt, "best_C": best,
                               "by_C": {str(C): reps[C].mean_accuracy for C in cfg.c_grid}})
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs/mnist1000.json"))
    ap.add_argument("--extended", action="store_true")
    ap.add_argument("--folds", type=int, default=10, help="folds for --extended")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = ExperimentConfig.load(args.config)
    if args.extended:
        cfg = replace(cfg, limit=None, folds=args.folds, kernels=cfg.kernels[:1], output=None)
    res = run(cfg, args.workers)
    out = args.out or cfg.output or str(ROOT / "results/mnist_extended.json")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(json.dumps(res, indent=1) + "\n")
    print(f"wrote {Path(out).resolve()}")


if __name__ == "__main__":
    main()
