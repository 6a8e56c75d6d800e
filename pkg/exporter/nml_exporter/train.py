"""Train reference models (double precision throughout) and flatten their
parameters for the binary writers.  Rounding to binary32 happens exactly
once, inside the writers."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.datasets import load_digits, make_blobs, make_classification
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import train_test_split
from sklearn.multiclass import OneVsRestClassifier
from sklearn.naive_bayes import GaussianNB
from sklearn.svm import LinearSVC

SIGMA2_FLOOR = 1e-9


def digits_split(seed: int, test_size: int = 100):
    X, y = load_digits(return_X_y=True)
    return train_test_split(X, y, test_size=test_size, random_state=seed, stratify=y)


def blobs_split(seed: int, n_train: int = 1000, n_test: int = 100, d: int = 784,
                n_class: int = 10):
    X, y = make_blobs(n_samples=n_train + n_test, centers=n_class, n_features=d,
                      cluster_std=6.0, center_box=(-10.0, 10.0), random_state=seed)
    return train_test_split(X, y, test_size=n_test, random_state=seed, stratify=y)


def binary21_split(seed: int, n_train: int = 1000, n_test: int = 50):
    X, y = make_classification(n_samples=n_train + n_test, n_features=21,
                               n_informative=12, n_redundant=4, n_classes=2,
                               class_sep=1.5, random_state=seed)
    return train_test_split(X, y, test_size=n_test, random_state=seed, stratify=y)


def train_lr(Xtr, ytr, Xte, seed: int):
    """One-vs-all logistic regression; golden labels from the framework's
    own predict (argmax over per-class decision scores)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clf = OneVsRestClassifier(LogisticRegression(max_iter=4000)).fit(Xtr, ytr)
    W = np.vstack([est.coef_[0] for est in clf.estimators_])
    b = np.array([est.intercept_[0] for est in clf.estimators_])
    return W, b, clf.predict(Xte)


def train_svm(Xtr, ytr, Xte, seed: int):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clf = LinearSVC(max_iter=20000, random_state=seed).fit(Xtr, ytr)
    return clf.coef_, clf.intercept_, clf.predict(Xte)


def train_gnb(Xtr, ytr, Xte):
    """Gaussian naive Bayes with the log-domain terms precomputed in double
    precision: log priors and -0.5*log(2*pi*sigma^2)."""
    clf = GaussianNB().fit(Xtr, ytr)
    sigma2 = np.maximum(clf.var_, SIGMA2_FLOOR)
    log_prior = np.log(clf.class_prior_)
    log_norm = -0.5 * np.log(2.0 * np.pi * sigma2)
    return clf.theta_, sigma2, log_prior, log_norm, clf.predict(Xte)


def flatten_tree(tree) -> dict:
    """sklearn tree_ arrays -> flat node arrays with leaves marked by
    feature = -(class+1) and child indices zeroed."""
    n = tree.node_count
    feature = np.zeros(n, dtype=np.int64)
    left = np.zeros(n, dtype=np.uint64)
    right = np.zeros(n, dtype=np.uint64)
    threshold = np.zeros(n, dtype=np.float64)
    is_leaf = tree.children_left == -1
    for i in range(n):
        if is_leaf[i]:
            cls = int(np.argmax(tree.value[i, 0]))
            feature[i] = -(cls + 1)
        else:
            feature[i] = tree.feature[i]
            threshold[i] = tree.threshold[i]
            left[i] = tree.children_left[i]
            right[i] = tree.children_right[i]
    return {"feature": feature, "threshold": threshold, "left": left, "right": right}


def train_rf(Xtr, ytr, Xte, seed: int, n_trees: int = 64):
    """Forest grown to purity so probability-averaged predict equals
    per-tree majority vote exactly (pure leaves are one-hot)."""
    clf = RandomForestClassifier(n_estimators=n_trees, random_state=seed).fit(Xtr, ytr)
    trees = [flatten_tree(est.tree_) for est in clf.estimators_]
    return trees, clf.predict(Xte)
