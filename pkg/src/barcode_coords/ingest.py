"""Dataset ingestion: MNIST IDX files, PGM images and synthetic datasets."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filtrations import BinaryImage, GrayImage, border_distance

LESION_CLASSES = ("cyst", "metastasis", "hemangioma")


class IdxError(ValueError):
    pass


class IdxMagicError(IdxError):
    pass


class IdxTypeError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class PgmError(ValueError):
    pass


@dataclass
class IdxTensor:
    dims: tuple[int, ...]
    data: np.ndarray  # flat uint8

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.data = np.asarray(self.data, dtype=np.uint8).reshape(-1)
        if len(self.data) != int(np.prod(self.dims, dtype=np.int64)):
            raise IdxError(f"data length {len(self.data)} does not match dims {self.dims}")

    def array(self) -> np.ndarray:
        return self.data.reshape(self.dims)

    def __eq__(self, other) -> bool:
        return (isinstance(other, IdxTensor) and self.dims == other.dims
                and np.array_equal(self.data, other.data))


def parse_idx(raw: bytes) -> IdxTensor:
    """Parse an IDX container holding unsigned bytes (gzip input accepted)."""
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    if len(raw) < 4:
        raise IdxTruncatedError("file shorter than the 4-byte magic")
    if raw[0] != 0 or raw[1] != 0:
        raise IdxMagicError(f"bad magic {raw[:4].hex()}: first two bytes must be zero")
    if raw[2] != 0x08:
        raise IdxTypeError(f"unsupported element type 0x{raw[2]:02x}; only unsigned byte (0x08)")
    rank = raw[3]
    if rank == 0:
        raise IdxMagicError("rank 0 tensors are not supported")
    header = 4 + 4 * rank
    if len(raw) < header:
        raise IdxTruncatedError(f"header declares {rank} dims but file ends at byte {len(raw)}")
    dims = struct.unpack(f">{rank}I", raw[4:header])
    size = int(np.prod(dims, dtype=np.int64))
    payload = raw[header:]
    if len(payload) < size:
        raise IdxTruncatedError(f"payload has {len(payload)} bytes, dims {dims} need {size}")
    return IdxTensor(dims, np.frombuffer(payload, dtype=np.uint8, count=size))


def serialize_idx(t: IdxTensor) -> bytes:
    return bytes([0, 0, 0x08, len(t.dims)]) + struct.pack(f">{len(t.dims)}I", *t.dims) + t.data.tobytes()


def read_idx(path: str | Path) -> IdxTensor:
    return parse_idx(Path(path).read_bytes())


def idx_to_gray(t: IdxTensor, index: int) -> GrayImage:
    if len(t.dims) != 3:
        raise IdxError(f"expected a rank-3 image tensor, got dims {t.dims}")
    if not 0 <= index < t.dims[0]:
        raise IndexError(f"image index {index} out of range 0..{t.dims[0] - 1}")
    return GrayImage(t.array()[index] / 255.0)


def read_pgm(raw: bytes) -> GrayImage:
    """Read an ASCII (P2) or binary (P5) PGM with maxval <= 255."""
    magic = raw[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported image format {magic!r}; expected P2 or P5")
    pos, fields = 2, []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise PgmError("truncated PGM header")
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        try:
            fields.append(int(raw[start:pos]))
        except ValueError:
            raise PgmError(f"malformed header field {raw[start:pos]!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmError("image dimensions must be positive")
    if not 0 < maxval <= 255:
        raise PgmError(f"maxval {maxval} unsupported (must be 1..255)")
    n = width * height
    if magic == b"P5":
        body = raw[pos + 1:pos + 1 + n]
        if len(body) < n:
            raise PgmError(f"P5 payload has {len(body)} bytes, expected {n}")
        vals = np.frombuffer(body, dtype=np.uint8).astype(float)
    else:
        try:
            vals = np.array([int(tok) for tok in raw[pos:].split()[:n]], dtype=float)
        except ValueError:
            raise PgmError("non-integer pixel value in P2 body") from None
        if len(vals) < n:
            raise PgmError(f"P2 body has {len(vals)} values, expected {n}")
    if vals.max(initial=0) > maxval:
        raise PgmError("pixel value exceeds maxval")
    return GrayImage(vals.reshape(height, width) / maxval)


def write_pgm(img: GrayImage, binary: bool = True) -> bytes:
    px = np.clip(np.rint(img.pixels * 255), 0, 255).astype(np.uint8)
    if binary:
        return f"P5\n{img.width} {img.height}\n255\n".encode() + px.tobytes()
    rows = "\n".join(" ".join(str(v) for v in r) for r in px)
    return f"P2\n{img.width} {img.height}\n255\n{rows}\n".encode()


def load_image(path: str | Path) -> GrayImage:
    """PGM file, or a rank-2 / single-image rank-3 IDX file."""
    raw = Path(path).read_bytes()
    if raw[:2] in (b"P2", b"P5"):
        return read_pgm(raw)
    t = parse_idx(raw)
    if len(t.dims) == 2:
        return GrayImage(t.array() / 255.0)
    return idx_to_gray(t, 0)


def load_mnist(images: str | Path, labels: str | Path, limit: int | None = None,
               seed: int | None = None) -> tuple[list[GrayImage], list[int]]:
    """Load MNIST images and labels; optionally a seeded random subset of ``limit``."""
    ti, tl = read_idx(images), read_idx(labels)
    if len(ti.dims) != 3 or len(tl.dims) != 1 or ti.dims[0] != tl.dims[0]:
        raise IdxError(f"inconsistent MNIST files: images {ti.dims}, labels {tl.dims}")
    idx = np.arange(ti.dims[0])
    if limit is not None and limit < len(idx):
        idx = np.sort(np.random.default_rng(seed).choice(len(idx), size=limit, replace=False))
    arr, lab = ti.array(), tl.array()
    return [GrayImage(arr[i] / 255.0) for i in idx], [int(lab[i]) for i in idx]


# --- synthetic lesions ------------------------------------------------------


@dataclass
class LesionSample:
    image: GrayImage
    mask: BinaryImage
    label: str
    seed: int


def _lesion(label: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    radius = int(rng.integers(16, 37))  # 33..73 px across
    size = 2 * radius + 9
    c = (size - 1) / 2 + rng.uniform(-1.5, 1.5, size=2)
    rr, cc = np.indices((size, size), dtype=float)
    # mildly elliptical, randomly oriented outline
    theta = rng.uniform(0, np.pi)
    stretch = rng.uniform(0.85, 1.0)
    u = (rr - c[0]) * np.cos(theta) + (cc - c[1]) * np.sin(theta)
    v = -(rr - c[0]) * np.sin(theta) + (cc - c[1]) * np.cos(theta)
    rho = np.sqrt(u**2 + (v / stretch) ** 2) / radius
    mask = rho <= 1.0

    img = np.full((size, size), 0.55)
    if label == "cyst":
        img[:] = rng.uniform(0.15, 0.25)
        noise = 0.03
    elif label == "metastasis":
        img[:] = rng.uniform(0.35, 0.45)
        for _ in range(int(rng.integers(6, 14))):
            br, bc = c + rng.uniform(-0.7, 0.7, size=2) * radius
            s = rng.uniform(0.06, 0.16) * radius
            amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 0.35)
            img += amp * np.exp(-((rr - br) ** 2 + (cc - bc) ** 2) / (2 * s * s))
        noise = 0.06
    elif label == "hemangioma":
        center = rng.uniform(0.3, 0.4)
        rim = rng.uniform(0.75, 0.85)
        inner = rng.uniform(0.45, 0.6)
        img[:] = center + (rim - center) / (1 + np.exp(-(rho - inner) / 0.05))
        noise = 0.04
    else:
        raise ValueError(f"unknown lesion class {label!r}")
    img += rng.normal(0.0, noise, size=img.shape)
    img[~mask] = 0.55
    return np.clip(img, 0.0, 1.0), mask


def synth_lesions(n_per_class: int, seed: int = 0) -> list[LesionSample]:
    """Seeded stand-in lesion dataset, classes interleaved."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    out = []
    for i in range(n_per_class):
        for k, label in enumerate(LESION_CLASSES):
            s = seed * 1_000_003 + 3 * i + k
            img, mask = _lesion(label, np.random.default_rng([seed, i, k]))
            out.append(LesionSample(GrayImage(img), BinaryImage(mask), label, s))
    for smp in out:
        border_distance(smp.mask)  # precondition check
    return out


# --- synthetic block digits -------------------------------------------------

# seven-segment encoding: a top, b upper right, c lower right, d bottom,
# e lower left, f upper left, g middle
_SEGMENTS = {
    0: "abcdef", 1: "bc", 2: "abged", 3: "abgcd", 4: "fgbc",
    5: "afgcd", 6: "afgedc", 7: "abc", 8: "abcdefg", 9: "abfgcd",
}


def block_digit(digit: int, size: int = 28, thickness: int = 3, shift: tuple[int, int] = (0, 0),
                height: int = 20, width: int = 12) -> GrayImage:
    """A seven-segment rendering of ``digit``; 0 has one hole, 8 two, 1 none."""
    if digit not in _SEGMENTS:
        raise ValueError(f"no block rendering for {digit!r}")
    img = np.zeros((size, size))
    top = (size - height) // 2 + shift[0]
    left = (size - width) // 2 + shift[1]
    bottom, right = top + height, left + width
    mid = top + (height - thickness) // 2
    t = thickness
    boxes = {
        "a": (top, top + t, left, right),
        "d": (bottom - t, bottom, left, right),
        "g": (mid, mid + t, left, right),
        "f": (top, mid + t, left, left + t),
        "e": (mid, bottom, left, left + t),
        "b": (top, mid + t, right - t, right),
        "c": (mid, bottom, right - t, right),
    }
    for s in _SEGMENTS[digit]:
        r0, r1, c0, c1 = boxes[s]
        img[max(r0, 0):max(r1, 0), max(c0, 0):max(c1, 0)] = 1.0
    return GrayImage(img)


def synth_digits(n: int, seed: int = 0) -> tuple[list[GrayImage], list[int]]:
    """``n`` jittered block digits with labels cycling through 0..9."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for i in range(n):
        d = i % 10
        img = block_digit(
            d,
            thickness=int(rng.integers(2, 4)),
            shift=(int(rng.integers(-2, 3)), int(rng.integers(-3, 4))),
            height=int(rng.integers(18, 23)),
            width=int(rng.integers(10, 15)),
        )
        px = np.clip(img.pixels * rng.uniform(0.8, 1.0) + rng.normal(0, 0.05, img.pixels.shape), 0, 1)
        images.append(GrayImage(px))
        labels.append(d)
    return images, labels
