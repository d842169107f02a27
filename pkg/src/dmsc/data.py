"""Dataset ingest, preprocessing, and the synthetic benchmark generator.

A `ModalityBundle` is the canonical training input: M named float64 image
stacks, each N x H x W x 1 with the same N and index-aligned samples, plus
integer labels. Preprocessing resizes to 32 x 32 with corner-aligned
bilinear interpolation, rescales each image to [0, 255] (min-max; constant
images become zeros), optionally subsamples a fixed count per class, and can
pair two independently labeled sources class-by-class (for corpora that
share classes but not samples).

The synthetic generator draws a union of linear subspaces once and renders
each view through an independent random orthonormal projection, so all views
share the cluster structure but none shares a representation. Views are
scaled globally (not per image): a per-image affine would destroy the exact
subspace structure the oracles assert.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fileio import read_idx, read_pgm  # re-exported ingest primitives

__all__ = [
    "ModalityBundle",
    "SynthSpec",
    "SynthResult",
    "bilinear_resize",
    "rescale_255",
    "preprocess_bundle",
    "generate_union_of_subspaces",
    "load_image_directory",
    "read_idx",
    "read_pgm",
]


@dataclass
class ModalityBundle:
    """M index-aligned image stacks plus labels.

    modalities maps name -> N x H x W x 1 float64; every stack has the same
    N (and, after preprocessing, the same H = W = 32). labels is length-N
    integer classes, or None for unlabeled data.
    """

    name: str
    modalities: dict
    labels: np.ndarray = None

    def __post_init__(self):
        if not self.modalities:
            raise ValueError("bundle needs at least one modality")
        n = None
        for mod, arr in self.modalities.items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.ndim == 3:
                arr = arr[..., None]
            if arr.ndim != 4 or arr.shape[3] != 1:
                raise ValueError(
                    f"modality {mod!r} must be N x H x W x 1, got {arr.shape}"
                )
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise ValueError(
                    f"modality {mod!r} has {arr.shape[0]} samples, others have {n}"
                )
            self.modalities[mod] = arr
        if self.labels is not None:
            labels = np.asarray(self.labels).astype(np.int64)
            if labels.shape != (n,):
                raise ValueError(
                    f"labels have shape {labels.shape}, expected ({n},)"
                )
            self.labels = labels

    @property
    def n(self):
        return next(iter(self.modalities.values())).shape[0]

    def names(self):
        return list(self.modalities)

    def views(self):
        return list(self.modalities.values())

    def num_clusters(self):
        if self.labels is None:
            raise ValueError(f"bundle {self.name!r} has no labels")
        return int(np.unique(self.labels).size)


# -- elementary image ops ------------------------------------------------------


def bilinear_resize(image, out_hw):
    """Bilinear resample with corners mapped to corners.

    Output pixel (i, j) samples source coordinate (i*(H-1)/(Ho-1),
    j*(W-1)/(Wo-1)); a 1-pixel source or target axis collapses to
    coordinate 0. Resizing to the same shape is exact.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"resize expects H x W, got shape {img.shape}")
    h, w = img.shape
    ho, wo = out_hw
    ii = _corner_coords(h, ho)
    jj = _corner_coords(w, wo)
    i0 = np.floor(ii).astype(np.int64)
    j0 = np.floor(jj).astype(np.int64)
    i1 = np.minimum(i0 + 1, h - 1)
    j1 = np.minimum(j0 + 1, w - 1)
    di = (ii - i0)[:, None]
    dj = (jj - j0)[None, :]
    top = img[np.ix_(i0, j0)] * (1 - dj) + img[np.ix_(i0, j1)] * dj
    bot = img[np.ix_(i1, j0)] * (1 - dj) + img[np.ix_(i1, j1)] * dj
    return top * (1 - di) + bot * di


def _corner_coords(src, dst):
    if dst < 1:
        raise ValueError(f"target size must be >= 1, got {dst}")
    if dst == 1 or src == 1:
        return np.zeros(dst)
    return np.arange(dst) * ((src - 1) / (dst - 1))


def rescale_255(image):
    """Min-max rescale one image to [0, 255]; constant images become zeros."""
    img = np.asarray(image, dtype=np.float64)
    lo, hi = float(img.min()), float(img.max())
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo) * 255.0


# -- preprocessing ----------------------------------------------------------------


def preprocess_bundle(
    modalities, labels, size=(32, 32), samples_per_class=None, seed=0, name="bundle"
):
    """Resize + rescale + (optionally) subsample or pair into a bundle.

    Parameters
    ----------
    modalities : dict of name -> images
        Images as an N x H x W(-x 1) array or a list of H x W arrays
        (ragged sizes fine, each is resized independently).
    labels : array or dict of name -> array
        One shared label vector for index-aligned modalities, or one vector
        per modality for unaligned sources; the latter triggers class-wise
        pairing: every class is subsampled to a common count per modality
        (seeded, without replacement) and matched up in draw order.
    samples_per_class : int, optional
        Cap per class; a class with fewer samples is an error naming it.

    Returns a ModalityBundle with N x 32 x 32 x 1 float64 views in class-
    sorted order and pixel values in [0, 255].
    """
    rng = np.random.default_rng(seed)
    mods = {m: _as_image_list(v, m) for m, v in modalities.items()}
    if isinstance(labels, dict):
        picked, out_labels = _pair_by_class(mods, labels, samples_per_class, rng)
    else:
        picked, out_labels = _subsample_aligned(
            mods, np.asarray(labels), samples_per_class, rng
        )
    out = {}
    for mod, images in mods.items():
        idx = picked[mod]
        stack = np.empty((len(idx), size[0], size[1], 1))
        for row, i in enumerate(idx):
            stack[row, :, :, 0] = rescale_255(bilinear_resize(images[i], size))
        out[mod] = stack
    return ModalityBundle(name=name, modalities=out, labels=out_labels)


def _as_image_list(value, mod):
    if isinstance(value, (list, tuple)):
        images = [np.asarray(v, dtype=np.float64) for v in value]
    else:
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim == 4 and arr.shape[3] == 1:
            arr = arr[..., 0]
        if arr.ndim != 3:
            raise ValueError(
                f"modality {mod!r} must be N x H x W(-x 1) or a list of H x W, "
                f"got shape {arr.shape}"
            )
        images = list(arr)
    for img in images:
        if img.ndim != 2:
            raise ValueError(f"modality {mod!r} contains a non-2-D image {img.shape}")
    return images


def _subsample_aligned(mods, labels, samples_per_class, rng):
    counts = {m: len(v) for m, v in mods.items()}
    n = len(labels)
    for m, c in counts.items():
        if c != n:
            raise ValueError(f"modality {m!r} has {c} samples but labels have {n}")
    chosen = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if samples_per_class is not None:
            if len(idx) < samples_per_class:
                raise ValueError(
                    f"class {cls} has {len(idx)} samples, need {samples_per_class}"
                )
            idx = np.sort(rng.choice(idx, size=samples_per_class, replace=False))
        chosen.append(idx)
    chosen = np.concatenate(chosen)
    picked = {m: chosen for m in mods}
    return picked, labels[chosen]


def _pair_by_class(mods, label_map, samples_per_class, rng):
    if set(label_map) != set(mods):
        raise ValueError(
            f"label dict keys {sorted(label_map)} do not match modalities "
            f"{sorted(mods)}"
        )
    labels = {m: np.asarray(v) for m, v in label_map.items()}
    for m in mods:
        if len(labels[m]) != len(mods[m]):
            raise ValueError(
                f"modality {m!r} has {len(mods[m])} samples but "
                f"{len(labels[m])} labels"
            )
    class_sets = {m: set(np.unique(v).tolist()) for m, v in labels.items()}
    common = set.intersection(*class_sets.values())
    for m, classes in class_sets.items():
        extra = classes - common
        if extra:
            raise ValueError(
                f"class {sorted(extra)[0]} appears in modality {m!r} but not "
                "in every modality"
            )
    picked = {m: [] for m in mods}
    out_labels = []
    for cls in sorted(common):
        per_mod = {m: np.flatnonzero(labels[m] == cls) for m in mods}
        n_c = min(len(v) for v in per_mod.values())
        if samples_per_class is not None:
            if n_c < samples_per_class:
                short = min(per_mod, key=lambda m: len(per_mod[m]))
                raise ValueError(
                    f"class {cls} has {len(per_mod[short])} samples in modality "
                    f"{short!r}, need {samples_per_class}"
                )
            n_c = samples_per_class
        for m in mods:  # insertion order keeps the draw sequence stable
            picked[m].append(rng.choice(per_mod[m], size=n_c, replace=False))
        out_labels.append(np.full(n_c, cls, dtype=np.int64))
    return (
        {m: np.concatenate(v) for m, v in picked.items()},
        np.concatenate(out_labels),
    )


# -- synthetic benchmark -------------------------------------------------------------


@dataclass
class SynthSpec:
    """Union-of-subspaces draw: `num_subspaces` subspaces of dimension
    `subspace_dim` (int or per-subspace sequence) in R^ambient_dim, with
    `points_per_subspace` unit-norm points each plus N(0, sigma^2) noise,
    rendered into `num_views` orthonormal random projections of dimension
    `view_dim` (a perfect square, so views reshape into images)."""

    ambient_dim: int
    num_subspaces: int
    subspace_dim: object = 3
    points_per_subspace: object = 50
    noise_sigma: float = 0.0
    num_views: int = 2
    seed: int = 0
    view_dim: int = 1024
    view_scale: float = 255.0

    def dims(self):
        return _per_subspace(self.subspace_dim, self.num_subspaces, "subspace_dim")

    def counts(self):
        return _per_subspace(
            self.points_per_subspace, self.num_subspaces, "points_per_subspace"
        )


@dataclass
class SynthResult:
    points: np.ndarray  # ambient D x N, noiseless structure + noise
    views: list  # per view, view_dim x N after global scaling
    labels: np.ndarray
    bundle: ModalityBundle


def _per_subspace(value, count, what):
    if np.isscalar(value):
        values = [int(value)] * count
    else:
        values = [int(v) for v in value]
        if len(values) != count:
            raise ValueError(f"{what} needs {count} entries, got {len(values)}")
    if any(v < 1 for v in values):
        raise ValueError(f"{what} entries must be >= 1")
    return values


def generate_union_of_subspaces(spec):
    """Draw the shared points and all views; fully seeded and deterministic."""
    dims = spec.dims()
    counts = spec.counts()
    if any(d > spec.ambient_dim for d in dims):
        raise ValueError("subspace dimension exceeds ambient dimension")
    if spec.num_views < 1:
        raise ValueError("need at least one view")
    if spec.view_dim < spec.ambient_dim:
        raise ValueError("view_dim must be >= ambient_dim for an orthonormal map")
    side = int(round(np.sqrt(spec.view_dim)))
    if side * side != spec.view_dim:
        raise ValueError(f"view_dim {spec.view_dim} is not a perfect square")
    rng = np.random.default_rng(spec.seed)
    blocks, labels = [], []
    for cls, (d, n_c) in enumerate(zip(dims, counts)):
        basis, _ = np.linalg.qr(rng.standard_normal((spec.ambient_dim, d)))
        coeffs = rng.standard_normal((d, n_c))
        coeffs /= np.linalg.norm(coeffs, axis=0, keepdims=True)
        blocks.append(basis @ coeffs)
        labels.append(np.full(n_c, cls, dtype=np.int64))
    points = np.concatenate(blocks, axis=1)
    labels = np.concatenate(labels)
    if spec.noise_sigma > 0:
        points = points + spec.noise_sigma * rng.standard_normal(points.shape)

    views, images = [], {}
    n = points.shape[1]
    for v in range(spec.num_views):
        proj, _ = np.linalg.qr(rng.standard_normal((spec.view_dim, spec.ambient_dim)))
        view = proj @ points
        peak = np.abs(view).max()
        if spec.view_scale and peak > 0:
            view = view * (spec.view_scale / peak)
        views.append(view)
        images[f"image{v + 1}"] = view.T.reshape(n, side, side, 1)
    bundle = ModalityBundle(name="synthetic", modalities=images, labels=labels)
    return SynthResult(points=points, views=views, labels=labels, bundle=bundle)


# -- directory-of-PGMs ingest ----------------------------------------------------------


def load_image_directory(root, modalities=None):
    """Load root/<modality>/<class>/<file>.pgm trees.

    Returns (modalities dict of name -> list of H x W float arrays, labels
    dict of name -> int vector). Class directories are sorted and mapped to
    0..K-1; files within a class are sorted, so index-aligned corpora line
    up as long as the per-class file counts agree (preprocess_bundle's
    pairing path handles the rest).
    """
    import os

    if modalities is None:
        modalities = sorted(
            d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d))
        )
        if not modalities:
            raise ValueError(f"{root}: no modality subdirectories")
    class_names = None
    for mod in modalities:
        mdir = os.path.join(root, mod)
        if not os.path.isdir(mdir):
            raise ValueError(f"{root}: missing modality directory {mod!r}")
        classes = sorted(
            d for d in os.listdir(mdir) if os.path.isdir(os.path.join(mdir, d))
        )
        if class_names is None:
            class_names = classes
        elif classes != class_names:
            raise ValueError(
                f"modality {mod!r} has class directories {classes}, "
                f"expected {class_names}"
            )
    if not class_names:
        raise ValueError(f"{root}: no class directories")
    images = {m: [] for m in modalities}
    labels = {m: [] for m in modalities}
    for mod in modalities:
        for cls_id, cls in enumerate(class_names):
            cdir = os.path.join(root, mod, cls)
            files = sorted(f for f in os.listdir(cdir) if f.endswith(".pgm"))
            if not files:
                raise ValueError(f"{cdir}: no .pgm files for class {cls!r}")
            for f in files:
                images[mod].append(
                    np.asarray(read_pgm(os.path.join(cdir, f)), dtype=np.float64)
                )
                labels[mod].append(cls_id)
    labels = {m: np.asarray(v, dtype=np.int64) for m, v in labels.items()}
    return images, labels
