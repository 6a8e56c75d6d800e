"""Sequential reference implementations of the six inference kernels.

Every floating-point operation goes through the backend, and accumulation
order is fixed left-to-right: these functions define the bit-exact
sequential reference that the parallel schemes must reproduce at
n_cores=1.  Partial sums start at +0.0 and per-class reductions add the
bias/prior term last, mirroring the parallel combine step.

Op-counting conventions (kept identical between sequential and parallel
paths so speedup math is an apples-to-apples comparison):

* every backend call tallies itself (FP ops, from_i32 as other);
* integer bookkeeping that the algorithm cannot avoid is tallied as
  ``other_ops`` via ``backend.count_other``: selection-sort swaps,
  tree-node hops, vote increments, integer-compare argmax steps,
  cluster-count updates;
* loop counters and Python-level plumbing are not counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .backend import Backend
from .errors import DimensionMismatch, KTooLarge
from .model import Dataset, GnbModel, KMeansState, KnnModel, LinearModel, RfModel, Tree


class Neighbor(NamedTuple):
    dist: float
    index: int
    label: int


@dataclass
class NeighborList:
    """Up to k (distance, sample index, label) triples, ascending by
    distance with ties broken by the lower sample index."""

    entries: list[Neighbor] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


def gemv_bias(W: Sequence[Sequence[float]], x: Sequence[float], b: Sequence[float],
              be: Backend) -> list[float]:
    """scores[i] = sum_j W[i][j]*x[j] + b[i], accumulated left-to-right."""
    scores = []
    for i, row in enumerate(W):
        if len(row) != len(x):
            raise DimensionMismatch(f"row {i} has {len(row)} columns, x has {len(x)}")
        acc = 0.0
        for j in range(len(x)):
            acc = be.add(acc, be.mul(row[j], x[j]))
        scores.append(be.add(acc, b[i]))
    if len(b) != len(scores):
        raise DimensionMismatch("bias length != row count")
    return scores


def sigmoid(s: float, be: Backend) -> float:
    """1 / (1 + exp(-s))."""
    e = be.exp(be.sub(0.0, s))
    return be.div(1.0, be.add(1.0, e))


def softmax(v: Sequence[float], be: Backend) -> list[float]:
    """Max-shifted softmax; outputs in [0, 1], summing to 1 within a few ulp."""
    m = v[0]
    for i in range(1, len(v)):
        if be.lt(m, v[i]):
            m = v[i]
    exps = [be.exp(be.sub(s, m)) for s in v]
    total = 0.0
    for e in exps:
        total = be.add(total, e)
    return [be.div(e, total) for e in exps]


def argmax(v: Sequence[float], be: Backend) -> int:
    """Index of the largest score; ties go to the lowest index."""
    best = 0
    for i in range(1, len(v)):
        if be.lt(v[best], v[i]):
            best = i
    return best


def _argmax_int(counts: Sequence[int], be: Backend) -> int:
    best = 0
    for i in range(1, len(counts)):
        be.count_other(1)
        if counts[i] > counts[best]:
            best = i
    return best


def linear_scores(m: LinearModel, x: Sequence[float], be: Backend) -> list[float]:
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    return gemv_bias(m.W.tolist(), x, m.b.tolist(), be)


def lr_infer(m: LinearModel, x: Sequence[float], be: Backend) -> int:
    if m.kind != "lr":
        raise DimensionMismatch(f"model kind {m.kind!r}, expected 'lr'")
    return argmax(softmax(linear_scores(m, x, be), be), be)


def svm_infer(m: LinearModel, x: Sequence[float], be: Backend) -> int:
    # sign/softmax are monotone: argmax of the raw one-vs-all scores is
    # the decision.  The binary sign() rule is the 2-row special case.
    if m.kind != "svm":
        raise DimensionMismatch(f"model kind {m.kind!r}, expected 'svm'")
    return argmax(linear_scores(m, x, be), be)


def gnb_scores(m: GnbModel, x: Sequence[float], be: Backend) -> list[float]:
    """Log-domain class scores: per-feature terms left-to-right, prior last.

    score[i] = sum_k [ log_norm[i,k] - (x_k - mu[i,k])^2 / (2 sigma2[i,k]) ]
               + log_prior[i]
    """
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    mu = m.mu.tolist()
    sigma2 = m.sigma2.tolist()
    log_norm = m.log_norm.tolist()
    log_prior = m.log_prior.tolist()
    scores = []
    for i in range(m.n_class):
        acc = 0.0
        mu_i, s2_i, ln_i = mu[i], sigma2[i], log_norm[i]
        for k in range(m.d):
            diff = be.sub(x[k], mu_i[k])
            q = be.div(be.mul(diff, diff), be.mul(2.0, s2_i[k]))
            acc = be.add(acc, be.sub(ln_i[k], q))
        scores.append(be.add(acc, log_prior[i]))
    return scores


def gnb_scores_product(m: GnbModel, x: Sequence[float], be: Backend) -> list[float]:
    """Product-domain scores: prior times the product of per-feature
    Gaussian pdfs.  Underflows beyond small d; the log domain is the
    canonical path, this one backs the equivalence check."""
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    mu = m.mu.tolist()
    sigma2 = m.sigma2.tolist()
    log_norm = m.log_norm.tolist()
    log_prior = m.log_prior.tolist()
    scores = []
    for i in range(m.n_class):
        acc = be.exp(log_prior[i])
        for k in range(m.d):
            diff = be.sub(x[k], mu[i][k])
            q = be.div(be.mul(diff, diff), be.mul(2.0, sigma2[i][k]))
            pdf = be.mul(be.exp(log_norm[i][k]), be.exp(be.sub(0.0, q)))
            acc = be.mul(acc, pdf)
        scores.append(acc)
    return scores


def gnb_infer(m: GnbModel, x: Sequence[float], be: Backend) -> int:
    return argmax(gnb_scores(m, x, be), be)


def sq_euclidean(p: Sequence[float], q: Sequence[float], be: Backend) -> float:
    """Sum of squared differences, left-to-right (no square root: ordering
    and argmin are invariant under it)."""
    if len(p) != len(q):
        raise DimensionMismatch(f"{len(p)} vs {len(q)} dims")
    acc = 0.0
    for i in range(len(p)):
        diff = be.sub(p[i], q[i])
        acc = be.add(acc, be.mul(diff, diff))
    return acc


def partial_select_k(dists: Sequence[float], ids: Sequence[int], k: int, be: Backend,
                     labels: Sequence[int] | None = None) -> NeighborList:
    """Selection sort truncated after the k smallest (distance, id) pairs.

    Ascending output, ties by lower id; at most n*k distance comparisons;
    the remaining n-k elements are left unordered.
    """
    n = len(dists)
    if k > n:
        raise KTooLarge(f"k={k} > n={n}")
    if len(ids) != n:
        raise DimensionMismatch("ids length != dists length")
    ds = list(dists)
    idv = list(ids)
    lab = list(labels) if labels is not None else None
    out = []
    for i in range(k):
        best = i
        for j in range(i + 1, n):
            if be.lt(ds[j], ds[best]):
                best = j
            elif ds[j] == ds[best] and idv[j] < idv[best]:
                best = j
        if best != i:
            ds[i], ds[best] = ds[best], ds[i]
            idv[i], idv[best] = idv[best], idv[i]
            if lab is not None:
                lab[i], lab[best] = lab[best], lab[i]
            be.count_other(1)
        out.append(Neighbor(ds[i], idv[i], lab[i] if lab is not None else -1))
    return NeighborList(out)


def majority_vote(neighbors: NeighborList, n_class: int, be: Backend) -> int:
    """Most frequent label among the neighbors; ties to the lowest class."""
    counts = [0] * n_class
    for nb in neighbors.entries:
        counts[nb.label] += 1
        be.count_other(1)
    return _argmax_int(counts, be)


def knn_infer(m: KnnModel, x: Sequence[float], be: Backend) -> int:
    if len(x) != m.train.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.train.d}")
    rows = m.train.features.tolist()
    labels = m.train.labels.tolist()
    dists = [sq_euclidean(row, x, be) for row in rows]
    nearest = partial_select_k(dists, range(len(rows)), m.k, be, labels)
    return majority_vote(nearest, m.n_class, be)


def _assign_one(xi: list[float], centroids: list[list[float]], be: Backend) -> int:
    dists = [sq_euclidean(xi, c, be) for c in centroids]
    best = 0
    for j in range(1, len(dists)):
        if be.lt(dists[j], dists[best]):
            best = j
    return best


def kmeans_assign(state: KMeansState, data: Dataset, be: Backend,
                  centroids: list[list[float]] | None = None) -> list[int]:
    """Nearest-centroid id per sample (squared distance, ties to lower id)."""
    if data.d != state.d:
        raise DimensionMismatch(f"data d={data.d}, state d={state.d}")
    cents = centroids if centroids is not None else state.centroids.tolist()
    out = []
    for i in range(data.n_samples):
        out.append(_assign_one(data.row(i), cents, be))
        be.count_other(1)  # assignment store
    return out


def kmeans_update(state: KMeansState, data: Dataset, be: Backend,
                  assignments: Sequence[int] | None = None,
                  centroids: list[list[float]] | None = None) -> list[list[float]]:
    """Mean of the samples assigned to each cluster; an empty cluster
    keeps its previous centroid."""
    if data.d != state.d:
        raise DimensionMismatch(f"data d={data.d}, state d={state.d}")
    assign = assignments if assignments is not None else state.assignments.tolist()
    if len(assign) != data.n_samples:
        raise DimensionMismatch("assignments length != n_samples")
    old = centroids if centroids is not None else state.centroids.tolist()
    k, d = state.k, state.d
    sums = [[0.0] * d for _ in range(k)]
    counts = [0] * k
    rows = data.features.tolist()
    for i in range(data.n_samples):
        j = assign[i]
        row = rows[i]
        sj = sums[j]
        for dim in range(d):
            sj[dim] = be.add(sj[dim], row[dim])
        counts[j] += 1
        be.count_other(1)
    new = []
    for j in range(k):
        be.count_other(1)  # emptiness check
        if counts[j] == 0:
            new.append(list(old[j]))
        else:
            cf = be.from_i32(counts[j])
            new.append([be.div(sums[j][dim], cf) for dim in range(d)])
    return new


def max_centroid_shift(old: list[list[float]], new: list[list[float]], be: Backend) -> float:
    shift = 0.0
    for j in range(len(old)):
        delta = sq_euclidean(new[j], old[j], be)
        if be.lt(shift, delta):
            shift = delta
    return shift


def kmeans_run(state: KMeansState, data: Dataset, be: Backend,
               history: list | None = None) -> tuple[list[list[float]], list[int], int]:
    """Iterate assign+update from first-k-samples initialization until the
    largest squared centroid shift drops below epsilon or max_iters hits.

    The input state is not mutated.  When ``history`` is a list, a
    (centroids, assignments) snapshot is appended per iteration.
    """
    if data.d != state.d:
        raise DimensionMismatch(f"data d={data.d}, state d={state.d}")
    if state.k > data.n_samples:
        raise KTooLarge(f"k={state.k} > n_samples={data.n_samples}")
    centroids = [data.row(i) for i in range(state.k)]
    assignments: list[int] = []
    iterations = 0
    for _ in range(state.max_iters):
        assignments = kmeans_assign(state, data, be, centroids)
        new = kmeans_update(state, data, be, assignments, centroids)
        shift = max_centroid_shift(centroids, new, be)
        centroids = new
        iterations += 1
        if history is not None:
            history.append(([list(c) for c in centroids], list(assignments)))
        if be.lt(shift, state.epsilon):
            break
    return centroids, assignments, iterations


def dt_infer(tree: Tree, x: Sequence[float], be: Backend) -> int:
    """Walk the flat arrays from the root; the boundary x == threshold
    goes left (the node test is <=)."""
    feature = tree.feature.tolist()
    threshold = tree.threshold.tolist()
    left = tree.left.tolist()
    right = tree.right.tolist()
    node = 0
    steps = 0
    n = tree.n_nodes
    while feature[node] >= 0:
        f = feature[node]
        if f >= len(x):
            raise DimensionMismatch(f"node feature {f} >= {len(x)} input dims")
        node = left[node] if be.le(x[f], threshold[node]) else right[node]
        be.count_other(1)  # node hop
        steps += 1
        if steps > n:  # defensive: load validation already rejects cycles
            from .errors import MalformedTree
            raise MalformedTree("tree", "walk exceeded node count")
    return -feature[node] - 1


def rf_votes(m: RfModel, x: Sequence[float], be: Backend) -> list[int]:
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    votes = [0] * m.n_class
    for tree in m.trees:
        votes[dt_infer(tree, x, be)] += 1
        be.count_other(1)  # vote update
    return votes


def rf_infer(m: RfModel, x: Sequence[float], be: Backend) -> int:
    return _argmax_int(rf_votes(m, x, be), be)
