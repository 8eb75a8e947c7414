"""Datasets: PGM image directories, TT3D tensors and synthetic clusters.

A dataset stores ``n`` images of size ``m x k`` as the lateral slices of an
``(m, n, k)`` tensor, so image width runs along the tubes.
"""

import os
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import MissingData, MixedDimensions, UnreadableImage
from .dictionary import init_dictionary
from .tensor import load_tt3d, save_tt3d, tprod

__all__ = [
    "Dataset",
    "read_pgm",
    "write_pgm",
    "load_image_dir",
    "load_dataset",
    "save_dataset",
    "synth_clusters",
]


@dataclass
class Dataset:
    images: np.ndarray
    labels: np.ndarray = None
    name: str = ""

    @property
    def n_images(self):
        return self.images.shape[1]

    @property
    def n_classes(self):
        return 0 if self.labels is None else int(self.labels.max()) + 1

    def as_samples(self):
        """Images as an ``(n, m, k)`` stack, the layout the estimators take."""
        return np.ascontiguousarray(self.images.transpose(1, 0, 2))


_PGM_TOKEN = re.compile(rb"(?:#[^\n]*\n|\s)*(\S+)")


def read_pgm(path):
    """Parse a binary (P5) PGM file; returns an ``(height, width)`` array in [0, 1]."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        pos = 0
        tokens = []
        for _ in range(4):
            mt = _PGM_TOKEN.match(raw, pos)
            if mt is None:
                raise ValueError("truncated header")
            tokens.append(mt.group(1))
            pos = mt.end()
        if tokens[0] != b"P5":
            raise ValueError(f"unsupported magic {tokens[0]!r}")
        width, height, maxval = (int(t) for t in tokens[1:])
        if not 0 < maxval < 65536:
            raise ValueError(f"bad maxval {maxval}")
        pos += 1  # single whitespace after maxval
        dtype = ">u1" if maxval < 256 else ">u2"
        count = width * height
        pix = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    except (OSError, ValueError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from exc
    return pix.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, img, maxval=255):
    """Write an array with values in [0, 1] as an 8-bit P5 PGM."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    pix = np.rint(img * maxval).astype(">u1" if maxval < 256 else ">u2")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(pix.tobytes())


def _natural_key(name):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def _contiguous_labels(raw):
    if all(re.fullmatch(r"\d+", s) for s in raw):
        classes = sorted(set(raw), key=int)
    else:
        classes = sorted(set(raw))
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[s] for s in raw], dtype=np.int64)


def load_image_dir(path, extension=".pgm"):
    """Load every ``*.pgm`` image in ``path``.

    Files named ``<class>_<id>.pgm`` are labeled by class (mapped to 0..C-1);
    if any file lacks the prefix the dataset is unlabeled.
    """
    if not os.path.isdir(path):
        raise MissingData(f"{path}: not a directory")
    names = sorted((f for f in os.listdir(path) if f.lower().endswith(extension)), key=_natural_key)
    if not names:
        raise MissingData(f"{path}: no {extension} files")
    imgs = []
    for f in names:
        img = read_pgm(os.path.join(path, f))
        if imgs and img.shape != imgs[0].shape:
            raise MixedDimensions(f"{f} is {img.shape}, expected {imgs[0].shape}")
        imgs.append(img)
    prefixes = [re.match(r"([^_]+)_", f) for f in names]
    labels = None
    if all(prefixes):
        labels = _contiguous_labels([mt.group(1) for mt in prefixes])
    images = np.stack(imgs, axis=1)  # (height, n, width)
    return Dataset(images=images, labels=labels, name=os.path.basename(os.path.normpath(path)))


def _labels_path(tt3d_path):
    return os.path.splitext(tt3d_path)[0] + ".labels"


def save_dataset(path, ds, pgm_dir=None):
    """Write ``ds`` as ``path`` (TT3D) plus a ``.labels`` file, and optionally PGMs."""
    save_tt3d(path, ds.images)
    if ds.labels is not None:
        with open(_labels_path(path), "w") as fh:
            fh.writelines(f"{int(v)}\n" for v in ds.labels)
    if pgm_dir is not None:
        os.makedirs(pgm_dir, exist_ok=True)
        labels = ds.labels if ds.labels is not None else np.zeros(ds.n_images, dtype=int)
        for j in range(ds.n_images):
            write_pgm(os.path.join(pgm_dir, f"{labels[j]}_{j}.pgm"), ds.images[:, j, :])


def load_dataset(path):
    """Load a PGM directory, a TT3D file, or a directory holding ``data.tt3d``."""
    if not os.path.exists(path):
        raise MissingData(f"{path}: no such file or directory")
    if os.path.isdir(path):
        if any(f.lower().endswith(".pgm") for f in os.listdir(path)):
            return load_image_dir(path)
        path = os.path.join(path, "data.tt3d")
        if not os.path.exists(path):
            raise MissingData(f"{os.path.dirname(path)}: no .pgm files or data.tt3d")
    images = load_tt3d(path)
    labels = None
    lp = _labels_path(path)
    if os.path.exists(lp):
        with open(lp) as fh:
            labels = np.array([int(t) for t in fh.read().split()], dtype=np.int64)
        if labels.shape[0] != images.shape[1]:
            raise MissingData(f"{lp}: {labels.shape[0]} labels for {images.shape[1]} images")
    return Dataset(images=images, labels=labels, name=os.path.splitext(os.path.basename(path))[0])


def synth_clusters(n_classes=3, per_class=30, m=8, k=8, atoms_per_class=3, noise_sigma=0.01,
                   active=None, max_shift=1, coef_range=(0.5, 1.5), seed=0):
    """Images built as sparse tensor-linear combinations of per-class atoms.

    Each class owns ``atoms_per_class`` nonnegative unit-norm atoms (m x k).
    An image of class c mixes ``active`` of them (all by default) with tube
    coefficients that share one nonzero position, so the image is a scaled
    mixture circularly shifted along its width by up to ``max_shift``
    pixels. Gaussian noise is added, values are clipped at 0 and, if the
    maximum exceeds 1, the whole set is divided by it.
    """
    rng = np.random.default_rng(seed)
    active = atoms_per_class if active is None else min(active, atoms_per_class)
    n = n_classes * per_class
    images = np.zeros((m, n, k))
    labels = np.repeat(np.arange(n_classes), per_class)
    for c in range(n_classes):
        atoms = np.abs(init_dictionary(m, atoms_per_class, k, rng))
        atoms /= np.sqrt(np.sum(atoms * atoms, axis=(0, 2), keepdims=True))
        for j in np.flatnonzero(labels == c):
            tubes = np.zeros((atoms_per_class, 1, k))
            chosen = rng.choice(atoms_per_class, size=active, replace=False)
            shift = rng.integers(-max_shift, max_shift + 1) % k
            tubes[chosen, 0, shift] = rng.uniform(*coef_range, size=active)
            images[:, j:j + 1, :] = tprod(atoms, tubes)
    if noise_sigma > 0:
        images = images + noise_sigma * rng.standard_normal(images.shape)
    images = np.clip(images, 0.0, None)
    top = images.max()
    if top > 1:
        images /= top
    return Dataset(images=images, labels=labels, name="synth")
