"""Write the 5,000-digit MNIST training subset bundled with mlxtend as IDX files.

The sandbox has no route to the MNIST mirrors, but the mlxtend wheel ships
5,000 training digits (500 per class) as a gzipped CSV.  This converts them to
the standard IDX layout so the regular loaders can read them.

    python scripts/make_mnist_subset.py [--out data/mnist] [--wheel path/to/mlxtend.whl]
"""
import argparse
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from barcode_coords.ingest import IdxTensor, serialize_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def load_csv(wheel: str | None) -> bytes:
    if wheel:
        with zipfile.ZipFile(wheel) as z:
            return z.read(MEMBER)
    import mlxtend.data

    return (Path(mlxtend.data.__file__).parent / "data" / "mnist_5k.csv.gz").read_bytes()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--wheel", default=None, help="read from an mlxtend wheel instead of the installed package")
    args = ap.parse_args()

    table = np.loadtxt(io.BytesIO(gzip.decompress(load_csv(args.wheel))), delimiter=",", dtype=np.int64)
    images = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)
    if images.shape[1] != 784:
        raise SystemExit(f"unexpected row width {images.shape[1]}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t_img = IdxTensor((len(images), 28, 28), images.ravel())
    t_lab = IdxTensor((len(labels),), labels)
    (out / "train-images-idx3-ubyte.gz").write_bytes(gzip.compress(serialize_idx(t_img), mtime=0))
    (out / "train-labels-idx1-ubyte.gz").write_bytes(gzip.compress(serialize_idx(t_lab), mtime=0))
    print(f"wrote {len(images)} digits to {out} (label counts {np.bincount(labels).tolist()})")


if __name__ == "__main__":
    main()
