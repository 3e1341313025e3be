"""Grayscale PGM I/O, Outex-style manifests and a synthetic texture generator."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import ValidationError

DEFAULT_SEED = 1


class DatasetError(ValueError):
    """Base class for decoding and ingestion failures."""


class PgmHeaderError(DatasetError):
    pass


class PgmPayloadError(DatasetError):
    pass


class UnsupportedDepthError(DatasetError):
    pass


class ManifestError(DatasetError):
    pass


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValidationError(f"GrayImage needs a 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValidationError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    classes: int
    train: list
    test: list

    def all_samples(self) -> list:
        return list(self.train) + list(self.test)


# -- PGM ----------------------------------------------------------------

def _header_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PgmHeaderError("header ended early")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    if pos >= n or not data[pos : pos + 1].isspace():
        raise PgmHeaderError("missing whitespace after header")
    return tokens, pos + 1


def decode_pgm(data: bytes) -> GrayImage:
    if data[:2] not in (b"P5", b"P2"):
        raise PgmHeaderError(f"not a grayscale PGM (magic {data[:2]!r})")
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PgmHeaderError(f"non-numeric header fields {tokens[1:]!r}") from None
    if width <= 0 or height <= 0:
        raise PgmHeaderError(f"invalid dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise UnsupportedDepthError(f"only 8-bit PGM is supported (maxval {maxval})")

    count = width * height
    if magic == b"P5":
        payload = data[offset:]
        if len(payload) < count:
            raise PgmPayloadError(f"malformed payload: expected {count} bytes, found {len(payload)}")
        pixels = np.frombuffer(payload[:count], dtype=np.uint8)
    else:
        body = b"\n".join(line.split(b"#", 1)[0] for line in data[offset:].splitlines())
        fields = body.split()
        if len(fields) < count:
            raise PgmPayloadError(f"malformed payload: expected {count} samples, found {len(fields)}")
        try:
            values = np.array([int(v) for v in fields[:count]], dtype=np.int64)
        except ValueError:
            raise PgmPayloadError("malformed payload: non-numeric sample") from None
        pixels = values
    if pixels.max(initial=0) > maxval or pixels.min(initial=0) < 0:
        raise PgmPayloadError("malformed payload: sample exceeds maxval")
    return GrayImage(np.asarray(pixels, dtype=np.uint8).reshape(height, width))


def encode_pgm(image: GrayImage, ascii: bool = False) -> bytes:
    h, w = image.height, image.width
    if ascii:
        rows = [" ".join(str(int(v)) for v in row) for row in image.pixels]
        return f"P2\n{w} {h}\n255\n".encode() + ("\n".join(rows) + "\n").encode()
    return f"P5\n{w} {h}\n255\n".encode() + image.tobytes()


def load_image(path) -> GrayImage:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    try:
        return decode_pgm(path.read_bytes())
    except DatasetError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def save_image(image: GrayImage, path, ascii: bool = False) -> None:
    Path(path).write_bytes(encode_pgm(image, ascii=ascii))


# -- manifests ----------------------------------------------------------

def _read_manifest(path: Path) -> list:
    if not path.is_file():
        raise ManifestError(f"missing manifest {path}")
    entries = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise ManifestError(f"{path.name}:{lineno}: expected 'path label', got {raw!r}")
        rel, label = parts
        try:
            label = int(label)
        except ValueError:
            raise ManifestError(f"{path.name}:{lineno}: label {label!r} is not an integer") from None
        if label < 0:
            raise ManifestError(f"{path.name}:{lineno}: negative label {label}")
        try:
            image = load_image(path.parent / rel)
        except (OSError, DatasetError) as exc:
            raise ManifestError(f"{path.name}:{lineno}: cannot read image {rel!r}: {exc}") from None
        entries.append((image, label))
    if not entries:
        raise ManifestError(f"{path.name} lists no images")
    return entries


def load_split(manifest_dir) -> DatasetSplit:
    """Read ``train.txt`` and ``test.txt`` (``relative/path label`` per line)."""
    root = Path(manifest_dir)
    train = _read_manifest(root / "train.txt")
    test = _read_manifest(root / "test.txt")
    labels = {label for _, label in train + test}
    classes = 1 + max(labels)
    missing = sorted(set(range(classes)) - labels)
    if missing:
        raise ManifestError(f"labels {missing} never appear (classes must be numbered 0..{classes - 1})")
    return DatasetSplit(name=root.name, classes=classes, train=train, test=test)


def write_split(split: DatasetSplit, directory) -> Path:
    """Write images as binary PGM plus ``train.txt``/``test.txt`` manifests."""
    root = Path(directory)
    (root / "images").mkdir(parents=True, exist_ok=True)
    for part in ("train", "test"):
        lines = [f"# {split.name} {part}"]
        for i, (image, label) in enumerate(getattr(split, part)):
            rel = f"images/{part}_{i:05d}.pgm"
            save_image(image, root / rel)
            lines.append(f"{rel} {label}")
        (root / f"{part}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


# -- synthetic textures -------------------------------------------------

def _value_noise(rng, size: int, cell: int) -> np.ndarray:
    """Bilinearly interpolated random lattice, one lattice point per ``cell`` pixels."""
    n = size // cell + 2
    lattice = rng.random((n, n))
    coords = (np.arange(size) + rng.random() * cell) / cell
    i0 = np.floor(coords).astype(int)
    f = coords - i0
    rows = lattice[i0] * (1 - f)[:, None] + lattice[i0 + 1] * f[:, None]
    return rows[:, i0] * (1 - f)[None, :] + rows[:, i0 + 1] * f[None, :]


def _grating(rng, size: int, angle: float, period_range) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    period = rng.uniform(*period_range)
    theta = angle + rng.normal(0.0, 0.05)
    u = x * math.cos(theta) + y * math.sin(theta)
    return 128 + 70 * np.sin(2 * math.pi * u / period + rng.uniform(0, 2 * math.pi))


def _checker(rng, size: int, angle: float, cells) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    cell = rng.integers(cells[0], cells[1] + 1)
    u = x * math.cos(angle) + y * math.sin(angle) + rng.uniform(0, 2 * cell)
    v = -x * math.sin(angle) + y * math.cos(angle) + rng.uniform(0, 2 * cell)
    parity = (np.floor(u / cell) + np.floor(v / cell)) % 2
    return np.where(parity == 0, 70.0, 186.0)


def _blobs(rng, size: int, cell: int) -> np.ndarray:
    field_ = _value_noise(rng, size, cell)
    return np.where(field_ > np.median(field_), 196.0, 60.0)


_FAMILIES = (
    lambda rng, s: _grating(rng, s, math.pi / 2, (6, 10)),  # horizontal stripes
    lambda rng, s: _grating(rng, s, 0.0, (6, 10)),  # vertical stripes
    lambda rng, s: _checker(rng, s, 0.0, (2, 4)),
    lambda rng, s: _blobs(rng, s, 8),
    lambda rng, s: _grating(rng, s, math.pi / 4, (5, 9)),
    lambda rng, s: 0.5 * (_grating(rng, s, math.pi / 4, (6, 9)) + _grating(rng, s, -math.pi / 4, (6, 9))),  # plaid
    lambda rng, s: _grating(rng, s, math.pi / 2, (3, 4)),  # fine horizontal stripes
    lambda rng, s: _grating(rng, s, -math.pi / 4, (10, 16)),
)


def synthetic_texture(label: int, size: int, rng) -> GrayImage:
    img = _FAMILIES[label](rng, size) + rng.normal(0.0, 8.0, (size, size))
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def generate_synthetic(classes: int = 4, per_class: int = 20, size: int = 64, seed: int = DEFAULT_SEED) -> DatasetSplit:
    """Texture families with per-image jitter; the first half of each class trains."""
    if not 2 <= classes <= len(_FAMILIES):
        raise ValidationError(f"classes must lie in [2, {len(_FAMILIES)}], got {classes}")
    if per_class < 2:
        raise ValidationError(f"per_class must be >= 2, got {per_class}")
    if size < 16:
        raise ValidationError(f"size must be >= 16, got {size}")
    rng = np.random.default_rng(seed)
    n_train = math.ceil(per_class / 2)
    train, test = [], []
    for label in range(classes):
        for i in range(per_class):
            sample = (synthetic_texture(label, size, rng), label)
            (train if i < n_train else test).append(sample)
    return DatasetSplit(name=f"synthetic:{classes}:{per_class}:{seed}", classes=classes, train=train, test=test)


def resolve_dataset(source: str) -> DatasetSplit:
    """``synthetic:<classes>:<per_class>:<seed>[:<size>]`` or a manifest directory."""
    if source.startswith("synthetic"):
        parts = source.split(":")[1:]
        try:
            values = [int(p) for p in parts]
        except ValueError:
            raise ValidationError(f"bad synthetic dataset spec {source!r}") from None
        defaults = [4, 20, DEFAULT_SEED, 64]
        if len(values) > len(defaults):
            raise ValidationError(f"bad synthetic dataset spec {source!r}")
        classes, per_class, seed, size = values + defaults[len(values):]
        return generate_synthetic(classes, per_class, size, seed)
    if not os.path.isdir(source):
        raise ManifestError(f"dataset directory not found: {source}")
    return load_split(source)
