"""Sequential kernel tests: hand oracles, brute-force/extended-precision
oracles, and the algebraic properties of each operation."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nml import kernels as K
from nml.backend import Backend
from nml.errors import DimensionMismatch, KTooLarge
from nml.model import Dataset, GnbModel, KMeansState, KnnModel, LinearModel, RfModel, Tree, f32
from nml.perf import OpCounters


def be():
    return Backend.native()


def ulp_distance(a: float, b: float) -> int:
    ia = int(np.float32(a).view(np.uint32))
    ib = int(np.float32(b).view(np.uint32))

    def key(u):
        m = u & 0x7FFFFFFF
        return -m if u & 0x80000000 else m

    return abs(key(ia) - key(ib))


finite_scores = st.lists(st.floats(-50, 50, width=32), min_size=1, max_size=8)


class TestGemv:
    def test_hand_case(self):
        assert K.gemv_bias([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0], [0.5, -0.5], be()) \
            == [3.5, 6.5]

    def test_zero_x_gives_bias(self):
        W = [[1.5, -2.0, 3.0], [0.25, 7.0, -1.0]]
        assert K.gemv_bias(W, [0.0, 0.0, 0.0], [4.0, -8.0], be()) == [4.0, -8.0]

    def test_identity_gives_x(self):
        W = [[1.0, 0.0], [0.0, 1.0]]
        assert K.gemv_bias(W, [3.25, -7.5], [0.0, 0.0], be()) == [3.25, -7.5]

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            K.gemv_bias([[1.0, 2.0]], [1.0], [0.0], be())


class TestSigmoid:
    def test_zero(self):
        assert K.sigmoid(0.0, be()) == 0.5

    def test_saturation(self):
        assert K.sigmoid(200.0, be()) == 1.0
        assert K.sigmoid(-200.0, be()) == 0.0

    def test_one_within_4ulp(self):
        want = 1.0 / (1.0 + math.exp(-1.0))
        assert ulp_distance(K.sigmoid(1.0, be()), float(np.float32(want))) <= 4


class TestSoftmax:
    def test_symmetry(self):
        assert K.softmax([0.0, 0.0], be()) == [0.5, 0.5]

    def test_shift_invariance(self):
        for c in (-17.0, 0.0, 3.5, 40.0):
            out = K.softmax([c, c, c], be())
            assert all(ulp_distance(v, 1.0 / 3.0) <= 2 for v in out)

    def test_oracle_123(self):
        want = [0.09003057, 0.24472847, 0.66524096]
        got = K.softmax([1.0, 2.0, 3.0], be())
        for g, w in zip(got, want):
            assert ulp_distance(g, float(np.float32(w))) <= 8

    @settings(max_examples=300)
    @given(finite_scores)
    def test_sums_to_one_within_8ulp(self, v):
        out = K.softmax(v, be())
        assert all(0.0 <= o <= 1.0 for o in out)
        assert abs(math.fsum(out) - 1.0) <= 8 * 2.0 ** -23

    @settings(max_examples=300)
    @given(finite_scores)
    def test_softmax_preserves_order(self, v):
        # weak monotonicity: rounding may merge neighbors, never reorder
        out = K.softmax(v, be())
        for i in range(len(v)):
            for j in range(len(v)):
                if v[i] < v[j]:
                    assert out[i] <= out[j]

    @settings(max_examples=300)
    @given(finite_scores)
    def test_argmax_invariant_under_softmax(self, v):
        # strict argmax preservation needs a margin binary32 exp can
        # resolve; below ~1e-7 exp collapses near-ties onto equal outputs
        top = sorted(v, reverse=True)
        if len(v) > 1 and top[0] - top[1] <= 1e-6:
            return
        assert K.argmax(K.softmax(v, be()), be()) == K.argmax(v, be())


class TestArgmax:
    def test_basic(self):
        assert K.argmax([0.1, 0.9, 0.5], be()) == 1

    def test_tie_lowest(self):
        assert K.argmax([1.0, 1.0], be()) == 0

    def test_singleton(self):
        assert K.argmax([42.0], be()) == 0


class TestLinearInfer:
    def test_hand_case(self):
        m = LinearModel("svm", 2, 2, f32([[1.0, 0.0], [0.0, 1.0]]), f32([0.0, 0.0]))
        assert K.svm_infer(m, [2.0, 1.0], be()) == 0

    def test_lr_equals_raw_argmax(self):
        rng = np.random.default_rng(5)
        m = LinearModel("lr", 4, 6, f32(rng.normal(size=(4, 6))), f32(rng.normal(size=4)))
        for _ in range(25):
            x = f32(rng.normal(size=6)).tolist()
            scores = K.linear_scores(m, x, be())
            assert K.lr_infer(m, x, be()) == K.argmax(scores, be())

    def test_kind_enforced(self):
        m = LinearModel("svm", 2, 2, f32(np.eye(2)), f32([0.0, 0.0]))
        with pytest.raises(DimensionMismatch):
            K.lr_infer(m, [1.0, 2.0], be())


def tiny_gnb(n_class=1, d=1, sigma2=1.0, prior_log=0.0):
    s2 = np.full((n_class, d), sigma2)
    return GnbModel(n_class, d,
                    f32(np.zeros((n_class, d))), f32(s2),
                    f32(np.full(n_class, prior_log)),
                    f32(-0.5 * np.log(2 * np.pi * s2)))


class TestGnb:
    def test_score_at_mean_is_log_norm(self):
        # x = mu, sigma2 = 1, prior 0, d = 1: score = -0.5*log(2*pi)
        m = tiny_gnb()
        got = K.gnb_scores(m, [0.0], be())[0]
        assert ulp_distance(got, float(np.float32(-0.9189385))) <= 2

    def test_identical_rows_tie_to_zero(self):
        m = tiny_gnb(n_class=2, d=3)
        scores = K.gnb_scores(m, [0.5, -1.0, 2.0], be())
        assert scores[0] == scores[1]
        assert K.gnb_infer(m, [0.5, -1.0, 2.0], be()) == 0

    def test_hand_two_class_one_dim(self):
        # class 0 at mu=0, class 1 at mu=4, equal priors/vars: midpoint decides
        m = GnbModel(2, 1, f32([[0.0], [4.0]]), f32([[1.0], [1.0]]),
                     f32([math.log(0.5)] * 2), f32([[-0.918938533] * 1] * 2))
        assert K.gnb_infer(m, [1.0], be()) == 0
        assert K.gnb_infer(m, [3.0], be()) == 1

    def test_log_vs_product_domain(self):
        rng = np.random.default_rng(9)
        for d in (1, 2, 4, 8):
            mu = rng.normal(size=(3, d))
            s2 = rng.uniform(0.3, 3.0, size=(3, d))
            m = GnbModel(3, d, f32(mu), f32(s2), f32(np.log([0.2, 0.3, 0.5])),
                         f32(-0.5 * np.log(2 * np.pi * s2)))
            x = f32(rng.normal(size=d)).tolist()
            logs = K.gnb_scores(m, x, be())
            prods = K.gnb_scores_product(m, x, be())
            for ls, ps in zip(logs, prods):
                assert math.exp(ls) == pytest.approx(ps, rel=1e-5)


class TestSqEuclidean:
    def test_zero_for_equal(self):
        assert K.sq_euclidean([1.5, -2.0], [1.5, -2.0], be()) == 0.0

    def test_three_four_five(self):
        assert K.sq_euclidean([0.0, 0.0], [3.0, 4.0], be()) == 25.0

    def test_random_vs_extended_precision(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            d = int(rng.integers(1, 12))
            p = f32(rng.normal(size=d)).tolist()
            q = f32(rng.normal(size=d)).tolist()
            got = K.sq_euclidean(p, q, be())
            want = math.fsum((a - b) * (a - b) for a, b in zip(p, q))
            assert ulp_distance(got, float(np.float32(want))) <= 4


class TestPartialSelectK:
    def test_smallest_of_three(self):
        out = K.partial_select_k([3.0, 1.0, 2.0], [0, 1, 2], 1, be())
        assert [(n.dist, n.index) for n in out.entries] == [(1.0, 1)]

    def test_k_equals_n_full_sort(self):
        out = K.partial_select_k([3.0, 1.0, 2.0], [0, 1, 2], 3, be())
        assert [(n.dist, n.index) for n in out.entries] == [(1.0, 1), (2.0, 2), (3.0, 0)]

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            K.partial_select_k([1.0], [0], 2, be())

    def test_random_matches_stable_sort_prefix(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            n = int(rng.integers(1, 100))
            k = int(rng.integers(1, n + 1))
            # quantized values force duplicate distances
            dists = f32(rng.integers(0, 12, n) * 0.25).tolist()
            ids = list(range(n))
            got = [(e.dist, e.index) for e in K.partial_select_k(dists, ids, k, be()).entries]
            want = sorted(zip(dists, ids))[:k]
            assert got == want

    def test_comparison_budget(self):
        c = OpCounters()
        counted = Backend.native(c)
        n, k = 100, 5
        rng = np.random.default_rng(4)
        K.partial_select_k(f32(rng.normal(size=n)).tolist(), list(range(n)), k, counted)
        assert c.fp_cmp <= n * k


def tiny_knn(points, labels, k, n_class=3):
    feats = f32(points)
    ds = Dataset(len(points), feats.shape[1], n_class, feats,
                 np.asarray(labels, dtype="<u2"))
    return KnnModel(ds, k, n_class).validate()


class TestKnn:
    def test_k1_returns_closest_label(self):
        m = tiny_knn([[0.0, 0.0], [10.0, 10.0]], [2, 1], 1)
        assert K.knn_infer(m, [1.0, 1.0], be()) == 2

    def test_query_on_training_point(self):
        m = tiny_knn([[0.0, 0.0], [5.0, 5.0], [9.0, 1.0]], [0, 1, 2], 1)
        assert K.knn_infer(m, [5.0, 5.0], be()) == 1

    def test_ten_point_vote_vs_bruteforce(self):
        rng = np.random.default_rng(8)
        pts = rng.normal(size=(10, 2))
        labels = rng.integers(0, 3, 10)
        m = tiny_knn(pts, labels, 3)
        for _ in range(20):
            x = f32(rng.normal(size=2)).tolist()
            # brute-force oracle in double precision over all distances
            d = [(float(np.float32(math.fsum((np.float32(a) - v) ** 2
                                             for a, v in zip(row, x)))), i)
                 for i, row in enumerate(pts.astype(np.float32).tolist())]
            top = sorted(d)[:3]
            counts = [0, 0, 0]
            for _, i in top:
                counts[labels[i]] += 1
            want = counts.index(max(counts))
            assert K.knn_infer(m, x, be()) == want


def kmeans_state(k, d, epsilon=1e-20, max_iters=200):
    return KMeansState(k, d, f32(np.zeros((k, d))), np.zeros(0, dtype="<u4"),
                       epsilon, max_iters)


def exact_distortion(rows, cents, assign) -> Fraction:
    total = Fraction(0)
    for i, row in enumerate(rows):
        c = cents[assign[i]]
        for a, b in zip(row, c):
            diff = Fraction(a) - Fraction(b)
            total += diff * diff
    return total


class TestKmeans:
    def test_k_distinct_points_fixed_point(self):
        pts = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]]
        ds = Dataset(3, 2, 0, f32(pts), None)
        cents, assign, iters = K.kmeans_run(kmeans_state(3, 2), ds, be())
        assert cents == pts
        assert assign == [0, 1, 2]
        assert iters <= 2

    def test_two_cluster_line(self):
        ds = Dataset(4, 1, 0, f32([[0.0], [1.0], [9.0], [10.0]]), None)
        cents, assign, _ = K.kmeans_run(kmeans_state(2, 1, epsilon=1e-12, max_iters=50),
                                        ds, be())
        assert cents == [[0.5], [9.5]]
        assert assign == [0, 0, 1, 1]

    def test_assignments_fixed_point_after_convergence(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            n = int(rng.integers(6, 40))
            d = int(rng.integers(1, 4))
            k = int(rng.integers(1, 5))
            ds = Dataset(n, d, 0, f32(rng.normal(size=(n, d))), None)
            state = kmeans_state(min(k, n), d)
            cents, assign, iters = K.kmeans_run(state, ds, be())
            if iters < state.max_iters:  # converged: movement was exactly zero
                assert K.kmeans_assign(state, ds, be(), cents) == assign

    def test_distortion_nonincreasing_exact_oracle(self):
        rng = np.random.default_rng(18)
        for trial in range(25):
            n = int(rng.integers(8, 64))
            d = int(rng.integers(1, 5))
            k = int(rng.integers(1, 5))
            ds = Dataset(n, d, 0, f32(rng.uniform(-5, 5, size=(n, d))), None)
            history = []
            K.kmeans_run(kmeans_state(min(k, n), d), ds, be(), history=history)
            rows = ds.features.tolist()
            dists = [exact_distortion(rows, cents, assign) for cents, assign in history]
            for prev, cur in zip(dists, dists[1:]):
                assert cur <= prev

    def test_empty_cluster_keeps_centroid(self):
        # both far points closest to the first seed: second cluster goes empty
        ds = Dataset(3, 1, 0, f32([[0.0], [100.0], [100.0]]), None)
        state = kmeans_state(2, 1, epsilon=1e-12, max_iters=1)
        cents = [[0.0], [-50.0]]
        assign = K.kmeans_assign(state, ds, be(), cents)
        assert assign == [0, 0, 0]
        new = K.kmeans_update(state, ds, be(), assign, cents)
        assert new[1] == [-50.0]


def leaf(cls: int) -> int:
    return -(cls + 1)


def make_tree(feature, threshold, left, right) -> Tree:
    import numpy as _np
    from nml.model import _readonly
    return Tree(_readonly(_np.asarray(feature, dtype="<i4")),
                f32(threshold),
                _readonly(_np.asarray(left, dtype="<u4")),
                _readonly(_np.asarray(right, dtype="<u4")))


class TestTrees:
    def test_single_leaf(self):
        t = make_tree([leaf(2)], [0.0], [0], [0])
        assert K.dt_infer(t, [123.0], be()) == 2

    def test_stump_boundary_goes_left(self):
        t = make_tree([0, leaf(0), leaf(1)], [0.5, 0.0, 0.0], [1, 0, 0], [2, 0, 0])
        assert K.dt_infer(t, [0.4], be()) == 0
        assert K.dt_infer(t, [0.5], be()) == 0  # boundary: test is <=
        assert K.dt_infer(t, [0.6], be()) == 1

    def test_three_tree_majority(self):
        ta = make_tree([leaf(0)], [0.0], [0], [0])
        tb = make_tree([leaf(0)], [0.0], [0], [0])
        tc = make_tree([leaf(1)], [0.0], [0], [0])
        m = RfModel(3, 2, 1, [ta, tb, tc]).validate()
        assert K.rf_infer(m, [0.0], be()) == 0
        assert K.rf_votes(m, [0.0], be()) == [2, 1]

    def test_vote_histogram_invariant_under_tree_order(self):
        rng = np.random.default_rng(40)
        trees = []
        for _ in range(7):
            cls = int(rng.integers(0, 3))
            thr = float(rng.normal())
            trees.append(make_tree([0, leaf(cls), leaf((cls + 1) % 3)],
                                   [thr, 0.0, 0.0], [1, 0, 0], [2, 0, 0]))
        m = RfModel(7, 3, 1, trees).validate()
        x = [0.3]
        base = K.rf_votes(m, x, be())
        perm = list(range(7))
        rng.shuffle(perm)
        m2 = RfModel(7, 3, 1, [trees[i] for i in perm]).validate()
        assert K.rf_votes(m2, x, be()) == base
