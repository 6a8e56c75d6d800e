"""NML1/NDS1 binary writers.

Independent implementation of the formats documented in the main repo's
docs/formats.md: everything little-endian, binary32 payloads as raw IEEE
bit patterns, one rounding to float32 at write time.
"""

from __future__ import annotations

import struct

import numpy as np

_U32 = struct.Struct("<I")

KERNEL_LR = 0
KERNEL_SVM = 1
KERNEL_GNB = 2
KERNEL_KNN = 3
KERNEL_KMEANS = 4
KERNEL_RF = 5


def _f32_bytes(a) -> bytes:
    return np.asarray(a, dtype="<f4").tobytes()


def write_dataset(features: np.ndarray, labels: np.ndarray | None, n_class: int) -> bytes:
    n_samples, d = features.shape
    out = [b"NDS1", bytes([1, 1 if labels is not None else 0]),
           _U32.pack(n_samples), _U32.pack(d), _U32.pack(n_class),
           _f32_bytes(features)]
    if labels is not None:
        out.append(np.asarray(labels, dtype="<u2").tobytes())
    return b"".join(out)


def write_linear(kind: str, W: np.ndarray, b: np.ndarray) -> bytes:
    n_class, d = W.shape
    kid = KERNEL_LR if kind == "lr" else KERNEL_SVM
    return b"".join([b"NML1", bytes([1, kid]),
                     _U32.pack(n_class), _U32.pack(d),
                     _f32_bytes(W), _f32_bytes(b)])


def write_gnb(mu: np.ndarray, sigma2: np.ndarray, log_prior: np.ndarray,
              log_norm: np.ndarray) -> bytes:
    n_class, d = mu.shape
    return b"".join([b"NML1", bytes([1, KERNEL_GNB]),
                     _U32.pack(n_class), _U32.pack(d),
                     _f32_bytes(mu), _f32_bytes(sigma2),
                     _f32_bytes(log_prior), _f32_bytes(log_norm)])


def write_knn(features: np.ndarray, labels: np.ndarray, k: int, n_class: int) -> bytes:
    n_samples, d = features.shape
    return b"".join([b"NML1", bytes([1, KERNEL_KNN]),
                     _U32.pack(n_class), _U32.pack(k),
                     _U32.pack(n_samples), _U32.pack(d),
                     _f32_bytes(features),
                     np.asarray(labels, dtype="<u2").tobytes()])


def write_kmeans(k: int, d: int, epsilon: float, max_iters: int,
                 centroids: np.ndarray | None = None) -> bytes:
    cents = centroids if centroids is not None else np.zeros((k, d))
    return b"".join([b"NML1", bytes([1, KERNEL_KMEANS]),
                     _U32.pack(k), _U32.pack(d), _U32.pack(max_iters), _U32.pack(0),
                     np.float32(epsilon).tobytes(),
                     _f32_bytes(cents)])


def write_rf(trees: list[dict], n_class: int, d: int) -> bytes:
    """trees: dicts with int32 'feature', float 'threshold', uint32 'left'/'right'."""
    out = [b"NML1", bytes([1, KERNEL_RF]),
           _U32.pack(len(trees)), _U32.pack(n_class), _U32.pack(d)]
    for t in trees:
        n = len(t["feature"])
        out.append(_U32.pack(n))
        out.append(np.asarray(t["feature"], dtype="<i4").tobytes())
        out.append(_f32_bytes(t["threshold"]))
        out.append(np.asarray(t["left"], dtype="<u4").tobytes())
        out.append(np.asarray(t["right"], dtype="<u4").tobytes())
    return b"".join(out)


def write_labels(labels) -> bytes:
    return "".join(f"{int(v)}\n" for v in labels).encode()
