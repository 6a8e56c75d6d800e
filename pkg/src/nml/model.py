"""Domain types for all six kernels plus bit-exact binary serialization.

Two container formats, both little-endian throughout, binary32 payloads
stored as raw IEEE bit patterns (see docs/formats.md for the full layout):

* ``NML1`` (model files): magic | version u8 | kernel_id u8 | kernel
  header (u32 counts) | payload arrays in declared order.
* ``NDS1`` (dataset files): magic | version u8 | has_labels u8 |
  n_samples u32 | d u32 | n_class u32 | features f32 | labels u16.

Loads validate every invariant and fail with a typed error; round-trips
are bit-identical (NaN payloads included).  All loaded arrays are marked
read-only: models are shared freely across workers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, InvariantViolation, LengthMismatch, MalformedTree, UnsupportedVersion

MODEL_MAGIC = b"NML1"
DATASET_MAGIC = b"NDS1"
VERSION = 1

KERNEL_LR = 0
KERNEL_SVM = 1
KERNEL_GNB = 2
KERNEL_KNN = 3
KERNEL_KMEANS = 4
KERNEL_RF = 5

_U32 = struct.Struct("<I")


def f32(values, shape=None) -> np.ndarray:
    """Read-only float32 array from any array-like (values rounded once)."""
    a = np.asarray(values, dtype="<f4")
    if shape is not None:
        a = a.reshape(shape)
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _require(cond: bool, name: str, detail: str = ""):
    if not cond:
        raise InvariantViolation(name, detail)


@dataclass
class Dataset:
    """n_samples x d binary32 feature matrix with optional class labels."""

    n_samples: int
    d: int
    n_class: int
    features: np.ndarray  # (n_samples, d) float32
    labels: np.ndarray | None = None  # (n_samples,) uint16

    def validate(self) -> "Dataset":
        _require(self.n_samples >= 1, "n_samples", "must be >= 1")
        _require(self.d >= 1, "d", "must be >= 1")
        _require(self.features.shape == (self.n_samples, self.d), "features",
                 f"shape {self.features.shape} != ({self.n_samples}, {self.d})")
        if self.labels is not None:
            _require(self.labels.shape == (self.n_samples,), "labels", "length != n_samples")
            _require(bool(np.all(self.labels < max(self.n_class, 0))), "labels",
                     "label >= n_class")
        return self

    def row(self, i: int) -> list[float]:
        return self.features[i].tolist()


@dataclass
class LinearModel:
    """One-vs-all linear classifier: per-class weight rows plus biases."""

    kind: str  # "lr" | "svm"
    n_class: int
    d: int
    W: np.ndarray  # (n_class, d) float32
    b: np.ndarray  # (n_class,) float32

    def validate(self) -> "LinearModel":
        _require(self.kind in ("lr", "svm"), "kind", self.kind)
        _require(self.n_class >= 2, "n_class", "must be >= 2")
        _require(self.d >= 1, "d", "must be >= 1")
        _require(self.W.shape == (self.n_class, self.d), "W", f"shape {self.W.shape}")
        _require(self.b.shape == (self.n_class,), "b", f"shape {self.b.shape}")
        return self


@dataclass
class GnbModel:
    """Gaussian naive Bayes parameters, log-domain ready: variances plus
    precomputed log priors and -0.5*log(2*pi*sigma^2) normalization terms."""

    n_class: int
    d: int
    mu: np.ndarray        # (n_class, d) float32
    sigma2: np.ndarray    # (n_class, d) float32, all > 0
    log_prior: np.ndarray  # (n_class,) float32
    log_norm: np.ndarray   # (n_class, d) float32

    def validate(self) -> "GnbModel":
        _require(self.n_class >= 1, "n_class", "must be >= 1")
        _require(self.d >= 1, "d", "must be >= 1")
        shape = (self.n_class, self.d)
        for name in ("mu", "sigma2", "log_norm"):
            _require(getattr(self, name).shape == shape, name, "bad shape")
        _require(self.log_prior.shape == (self.n_class,), "log_prior", "bad shape")
        _require(bool(np.all(self.sigma2 > 0)), "sigma2", "entries must be > 0")
        return self


@dataclass
class KnnModel:
    """Stored training set plus the neighbor count k."""

    train: Dataset
    k: int
    n_class: int

    def validate(self) -> "KnnModel":
        self.train.validate()
        _require(self.train.labels is not None, "labels", "kNN training set needs labels")
        _require(1 <= self.k <= self.train.n_samples, "k",
                 f"k={self.k} outside [1, {self.train.n_samples}]")
        return self


@dataclass
class KMeansState:
    """Clustering hyperparameters plus centroid/assignment storage.

    A run always re-initializes centroids from the first k data samples;
    the stored arrays carry the outcome of a previous run (or zeros).
    """

    k: int
    d: int
    centroids: np.ndarray  # (k, d) float32
    assignments: np.ndarray  # (n,) uint32, possibly empty
    epsilon: float  # binary32 value, > 0; threshold on squared centroid shift
    max_iters: int

    def validate(self) -> "KMeansState":
        _require(self.k >= 1, "k", "must be >= 1")
        _require(self.d >= 1, "d", "must be >= 1")
        _require(self.centroids.shape == (self.k, self.d), "centroids", "bad shape")
        _require(self.epsilon > 0, "epsilon", "must be > 0")
        _require(self.max_iters >= 1, "max_iters", "must be >= 1")
        if self.assignments.size:
            _require(bool(np.all(self.assignments < self.k)), "assignments", "entry >= k")
        return self


@dataclass
class Tree:
    """One decision tree as flat node arrays; node 0 is the root.

    feature[i] >= 0 names the tested feature; negative marks a leaf and
    encodes the class as -(class+1), so class 0 is representable.
    """

    feature: np.ndarray    # (n_nodes,) int32
    threshold: np.ndarray  # (n_nodes,) float32
    left: np.ndarray       # (n_nodes,) uint32
    right: np.ndarray      # (n_nodes,) uint32

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass
class RfModel:
    n_trees: int
    n_class: int
    d: int
    trees: list[Tree] = field(default_factory=list)

    def validate(self) -> "RfModel":
        _require(self.n_trees >= 1, "n_trees", "must be >= 1")
        _require(self.n_class >= 2, "n_class", "must be >= 2")
        _require(self.d >= 1, "d", "must be >= 1")
        _require(len(self.trees) == self.n_trees, "n_trees", "tree count mismatch")
        for t, tree in enumerate(self.trees):
            _validate_tree(tree, t, self.d, self.n_class)
        return self


def _validate_tree(tree: Tree, idx: int, d: int, n_class: int) -> None:
    n = tree.n_nodes
    if n < 1:
        raise MalformedTree(f"tree {idx}", "empty tree")
    feature = tree.feature.tolist()
    left = tree.left.tolist()
    right = tree.right.tolist()
    for i in range(n):
        f = feature[i]
        if f >= 0:
            if f >= d:
                raise MalformedTree(f"tree {idx}", f"node {i} feature {f} >= d={d}")
            if left[i] >= n or right[i] >= n:
                raise MalformedTree(f"tree {idx}", f"node {i} child out of range")
        else:
            cls = -f - 1
            if cls >= n_class:
                raise MalformedTree(f"tree {idx}", f"leaf {i} class {cls} >= n_class")
    # Acyclicity from the root: grey = on current path, black = done.
    color = [0] * n
    stack = [(0, False)]
    while stack:
        node, done = stack.pop()
        if done:
            color[node] = 2
            continue
        if color[node] == 1:
            raise MalformedTree(f"tree {idx}", f"cycle through node {node}")
        if color[node] == 2:
            continue
        color[node] = 1
        stack.append((node, True))
        if feature[node] >= 0:
            stack.append((right[node], False))
            stack.append((left[node], False))


# ---------------------------------------------------------------------------
# Binary reading/writing


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise LengthMismatch(
                f"need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def f32_array(self, count: int, shape=None) -> np.ndarray:
        a = np.frombuffer(self.take(4 * count), dtype="<f4").copy()
        if shape is not None:
            a = a.reshape(shape)
        return _readonly(a)

    def i32_array(self, count: int) -> np.ndarray:
        return _readonly(np.frombuffer(self.take(4 * count), dtype="<i4").copy())

    def u32_array(self, count: int) -> np.ndarray:
        return _readonly(np.frombuffer(self.take(4 * count), dtype="<u4").copy())

    def u16_array(self, count: int) -> np.ndarray:
        return _readonly(np.frombuffer(self.take(2 * count), dtype="<u2").copy())

    def expect_end(self):
        if self.pos != len(self.data):
            raise LengthMismatch(f"{len(self.data) - self.pos} trailing bytes")


def _check_header(r: _Reader, magic: bytes):
    got = r.take(4)
    if got != magic:
        raise BadMagic(f"expected {magic!r}, got {got!r}")
    version = r.u8()
    if version != VERSION:
        raise UnsupportedVersion(f"version {version}")


def load_dataset(data: bytes) -> Dataset:
    r = _Reader(data)
    _check_header(r, DATASET_MAGIC)
    has_labels = r.u8()
    n_samples = r.u32()
    d = r.u32()
    n_class = r.u32()
    features = r.f32_array(n_samples * d, (n_samples, d))
    labels = r.u16_array(n_samples) if has_labels else None
    r.expect_end()
    return Dataset(n_samples, d, n_class, features, labels).validate()


def save_dataset(ds: Dataset) -> bytes:
    ds.validate()
    out = [DATASET_MAGIC, bytes([VERSION, 1 if ds.labels is not None else 0])]
    out.append(_U32.pack(ds.n_samples) + _U32.pack(ds.d) + _U32.pack(ds.n_class))
    out.append(ds.features.astype("<f4", copy=False).tobytes())
    if ds.labels is not None:
        out.append(ds.labels.astype("<u2", copy=False).tobytes())
    return b"".join(out)


def load_model(data: bytes):
    """Parse an NML1 file into the matching validated model type."""
    r = _Reader(data)
    _check_header(r, MODEL_MAGIC)
    kid = r.u8()
    if kid in (KERNEL_LR, KERNEL_SVM):
        n_class = r.u32()
        d = r.u32()
        W = r.f32_array(n_class * d, (n_class, d))
        b = r.f32_array(n_class)
        r.expect_end()
        kind = "lr" if kid == KERNEL_LR else "svm"
        return LinearModel(kind, n_class, d, W, b).validate()
    if kid == KERNEL_GNB:
        n_class = r.u32()
        d = r.u32()
        shape = (n_class, d)
        mu = r.f32_array(n_class * d, shape)
        sigma2 = r.f32_array(n_class * d, shape)
        log_prior = r.f32_array(n_class)
        log_norm = r.f32_array(n_class * d, shape)
        r.expect_end()
        return GnbModel(n_class, d, mu, sigma2, log_prior, log_norm).validate()
    if kid == KERNEL_KNN:
        n_class = r.u32()
        k = r.u32()
        n_samples = r.u32()
        d = r.u32()
        features = r.f32_array(n_samples * d, (n_samples, d))
        labels = r.u16_array(n_samples)
        r.expect_end()
        train = Dataset(n_samples, d, n_class, features, labels).validate()
        return KnnModel(train, k, n_class).validate()
    if kid == KERNEL_KMEANS:
        k = r.u32()
        d = r.u32()
        max_iters = r.u32()
        n_assign = r.u32()
        epsilon = float(np.frombuffer(r.take(4), dtype="<f4")[0])
        centroids = r.f32_array(k * d, (k, d))
        assignments = r.u32_array(n_assign)
        r.expect_end()
        return KMeansState(k, d, centroids, assignments, epsilon, max_iters).validate()
    if kid == KERNEL_RF:
        n_trees = r.u32()
        n_class = r.u32()
        d = r.u32()
        trees = []
        for _ in range(n_trees):
            n = r.u32()
            feature = r.i32_array(n)
            threshold = r.f32_array(n)
            left = r.u32_array(n)
            right = r.u32_array(n)
            trees.append(Tree(feature, threshold, left, right))
        r.expect_end()
        return RfModel(n_trees, n_class, d, trees).validate()
    raise InvariantViolation("kernel_id", f"unknown kernel id {kid}")


def save_model(model) -> bytes:
    if isinstance(model, LinearModel):
        model.validate()
        kid = KERNEL_LR if model.kind == "lr" else KERNEL_SVM
        return b"".join([
            MODEL_MAGIC, bytes([VERSION, kid]),
            _U32.pack(model.n_class), _U32.pack(model.d),
            model.W.astype("<f4", copy=False).tobytes(),
            model.b.astype("<f4", copy=False).tobytes(),
        ])
    if isinstance(model, GnbModel):
        model.validate()
        return b"".join([
            MODEL_MAGIC, bytes([VERSION, KERNEL_GNB]),
            _U32.pack(model.n_class), _U32.pack(model.d),
            model.mu.astype("<f4", copy=False).tobytes(),
            model.sigma2.astype("<f4", copy=False).tobytes(),
            model.log_prior.astype("<f4", copy=False).tobytes(),
            model.log_norm.astype("<f4", copy=False).tobytes(),
        ])
    if isinstance(model, KnnModel):
        model.validate()
        t = model.train
        return b"".join([
            MODEL_MAGIC, bytes([VERSION, KERNEL_KNN]),
            _U32.pack(model.n_class), _U32.pack(model.k),
            _U32.pack(t.n_samples), _U32.pack(t.d),
            t.features.astype("<f4", copy=False).tobytes(),
            t.labels.astype("<u2", copy=False).tobytes(),
        ])
    if isinstance(model, KMeansState):
        model.validate()
        return b"".join([
            MODEL_MAGIC, bytes([VERSION, KERNEL_KMEANS]),
            _U32.pack(model.k), _U32.pack(model.d),
            _U32.pack(model.max_iters), _U32.pack(len(model.assignments)),
            np.float32(model.epsilon).tobytes(),
            model.centroids.astype("<f4", copy=False).tobytes(),
            model.assignments.astype("<u4", copy=False).tobytes(),
        ])
    if isinstance(model, RfModel):
        model.validate()
        out = [MODEL_MAGIC, bytes([VERSION, KERNEL_RF]),
               _U32.pack(model.n_trees), _U32.pack(model.n_class), _U32.pack(model.d)]
        for tree in model.trees:
            out.append(_U32.pack(tree.n_nodes))
            out.append(tree.feature.astype("<i4", copy=False).tobytes())
            out.append(tree.threshold.astype("<f4", copy=False).tobytes())
            out.append(tree.left.astype("<u4", copy=False).tobytes())
            out.append(tree.right.astype("<u4", copy=False).tobytes())
        return b"".join(out)
    raise InvariantViolation("model", f"unknown model type {type(model).__name__}")
