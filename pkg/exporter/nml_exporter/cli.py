"""export_all entry point: train every reference model and write the
fixture set (datasets, models, golden label files) to a directory.

Deterministic: a fixed seed gives byte-identical files across runs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import formats, train

KNN_K = 4
KMEANS_K = 2
KMEANS_EPSILON = 1e-9
KMEANS_MAX_ITERS = 100


def export_all(out_dir: str | Path, seed: int = 0) -> dict[str, bytes]:
    """Build every fixture; returns {filename: bytes} after writing."""
    files: dict[str, bytes] = {}

    # 8x8 digits: LR / SVM / GNB / RF plus the labeled test split.
    Xtr, Xte, ytr, yte = train.digits_split(seed)
    files["digits_test.nds"] = formats.write_dataset(Xte, yte, 10)
    W, b, golden = train.train_lr(Xtr, ytr, Xte, seed)
    files["lr_digits.nml"] = formats.write_linear("lr", W, b)
    files["golden_lr_digits.txt"] = formats.write_labels(golden)
    W, b, golden = train.train_svm(Xtr, ytr, Xte, seed)
    files["svm_digits.nml"] = formats.write_linear("svm", W, b)
    files["golden_svm_digits.txt"] = formats.write_labels(golden)
    mu, sigma2, log_prior, log_norm, golden = train.train_gnb(Xtr, ytr, Xte)
    files["gnb_digits.nml"] = formats.write_gnb(mu, sigma2, log_prior, log_norm)
    files["golden_gnb_digits.txt"] = formats.write_labels(golden)
    trees, golden = train.train_rf(Xtr, ytr, Xte, seed)
    files["rf_digits.nml"] = formats.write_rf(trees, 10, Xtr.shape[1])
    files["golden_rf_digits.txt"] = formats.write_labels(golden)

    # 784-dim 10-class synthetic blobs (MNIST-scale stand-in).
    Xtr, Xte, ytr, yte = train.blobs_split(seed)
    files["mnist_test.nds"] = formats.write_dataset(Xte, yte, 10)
    W, b, golden = train.train_lr(Xtr, ytr, Xte, seed)
    files["lr_mnist.nml"] = formats.write_linear("lr", W, b)
    files["golden_lr_mnist.txt"] = formats.write_labels(golden)
    W, b, golden = train.train_svm(Xtr, ytr, Xte, seed)
    files["svm_mnist.nml"] = formats.write_linear("svm", W, b)
    files["golden_svm_mnist.txt"] = formats.write_labels(golden)
    mu, sigma2, log_prior, log_norm, golden = train.train_gnb(Xtr, ytr, Xte)
    files["gnb_mnist.nml"] = formats.write_gnb(mu, sigma2, log_prior, log_norm)
    files["golden_gnb_mnist.txt"] = formats.write_labels(golden)

    # 21-dim binary synthetic (instance-based kernels: no training, the
    # exporter just emits the stored set and hyperparameters).
    Xtr, Xq, ytr, yq = train.binary21_split(seed)
    files["asd_train.nds"] = formats.write_dataset(Xtr, ytr, 2)
    files["asd_queries.nds"] = formats.write_dataset(Xq, yq, 2)
    files["knn_asd.nml"] = formats.write_knn(Xtr, ytr, KNN_K, 2)
    files["kmeans_asd.nml"] = formats.write_kmeans(
        KMEANS_K, Xtr.shape[1], KMEANS_EPSILON, KMEANS_MAX_ITERS)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (out / name).write_bytes(files[name])
    return files


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="export_all.py")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    files = export_all(args.out, args.seed)
    total = sum(len(v) for v in files.values())
    print(f"wrote {len(files)} files ({total} bytes) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
