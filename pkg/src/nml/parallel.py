"""Fork-join cluster engine and the five parallel kernel schemes.

Execution model: a run spawns n_cores workers, each executing the same
generator body parameterized by core_id (SPMD).  A ``yield`` is a
barrier; shared buffers are preallocated before the fork, every worker
writes only its own region, and all cross-worker reads happen after a
barrier.  The random-forest vote array is the one structure guarded by
mutual exclusion instead.  Two engine modes produce identical results:

* ``threads``: real threads with a threading.Barrier, and
* ``virtual``: a single-threaded round-robin that advances every worker
  one phase at a time (deterministic debugging mode).

Parallel reductions combine per-worker partials in fixed core order at
barriers, so results are deterministic for every n_cores and
bit-identical to the sequential kernels at n_cores=1.  For more cores
the association order of score sums differs in the last ulps; the
contract is label-level agreement (integer-vote kernels are exact).

Counting: pass a PhaseCounters in ClusterConfig.counters to tally each
worker's parallel-phase ops separately from the master-only serial
phases.  Without it, parallel runs do not count (a counter sink on the
backend itself would be shared mutable state across workers).
"""

from __future__ import annotations

import threading
from contextlib import nullcontext
from dataclasses import dataclass
from typing import Callable, Sequence

from .backend import Backend
from .errors import BadArgs, BadCoreId, DimensionMismatch, KTooLarge, KTooLargeForChunk
from .kernels import (
    NeighborList,
    _argmax_int,
    argmax,
    dt_infer,
    majority_vote,
    max_centroid_shift,
    partial_select_k,
    softmax,
    sq_euclidean,
)
from .model import Dataset, GnbModel, KMeansState, KnnModel, LinearModel, RfModel
from .perf import PhaseCounters

_tls = threading.local()


def current_core() -> int | None:
    """core_id of the worker currently executing on this thread, if any.

    Exposed for instrumentation (the write-logging test harness)."""
    return getattr(_tls, "core", None)


@dataclass
class Partition:
    """One worker's chunk: [lb, ub) of a 0..total index space."""

    chunk: int
    lb: int
    ub: int


def partition(total: int, n_cores: int, core_id: int, axis: str = "rows") -> Partition:
    """Even split with the last core absorbing total mod n_cores.

    chunk = floor(total/n_cores), lb = core_id*chunk; partitions of all
    cores are disjoint and cover [0, total).  ``axis`` documents whether
    the split runs over rows or columns of the operand; the arithmetic is
    the same.
    """
    if total < 1:
        raise BadArgs(f"cannot partition total={total}")
    if not 0 <= core_id < n_cores:
        raise BadCoreId(f"core_id {core_id} outside [0, {n_cores})")
    chunk = total // n_cores
    lb = core_id * chunk
    ub = total if core_id == n_cores - 1 else lb + chunk
    return Partition(chunk, lb, ub)


@dataclass
class ClusterConfig:
    """Worker count plus engine mode and optional counter routing.

    ``buffer_hook(name, leaf_list)`` may wrap every shared leaf buffer the
    workers write; the write-logging test harness uses it to assert that
    write regions are disjoint outside the critical section.
    """

    n_cores: int = 8
    mode: str = "threads"  # "threads" | "virtual"
    counters: PhaseCounters | None = None
    buffer_hook: Callable | None = None

    def __post_init__(self):
        if not 1 <= self.n_cores <= 64:
            raise BadArgs(f"n_cores {self.n_cores} outside [1, 64]")
        if self.mode not in ("threads", "virtual"):
            raise BadArgs(f"unknown engine mode {self.mode!r}")


class _Ctx:
    __slots__ = ("core_id", "n_cores", "_lock")

    def __init__(self, core_id: int, n_cores: int, lock):
        self.core_id = core_id
        self.n_cores = n_cores
        self._lock = lock

    @property
    def is_master(self) -> bool:
        return self.core_id == 0

    def partition(self, total: int, axis: str = "rows") -> Partition:
        return partition(total, self.n_cores, self.core_id, axis)

    def critical(self):
        """Mutual-exclusion guard for the one shared-write structure."""
        return self._lock


class Cluster:
    """Runs an SPMD generator body on n_cores workers; yields are barriers."""

    def __init__(self, cfg: ClusterConfig):
        self.cfg = cfg

    def run(self, body: Callable) -> None:
        n = self.cfg.n_cores
        if self.cfg.mode == "virtual":
            ctxs = [_Ctx(i, n, nullcontext()) for i in range(n)]
            gens = [body(c) for c in ctxs]
            while True:
                alive = []
                for cid, g in enumerate(gens):
                    _tls.core = cid
                    try:
                        next(g)
                        alive.append(True)
                    except StopIteration:
                        alive.append(False)
                    finally:
                        _tls.core = None
                if not any(alive):
                    return
                if not all(alive):
                    raise RuntimeError("SPMD bodies reached different barrier counts")
        lock = threading.Lock()
        barrier = threading.Barrier(n)
        ctxs = [_Ctx(i, n, lock) for i in range(n)]
        errors: list[BaseException | None] = [None] * n

        def runner(cid: int):
            _tls.core = cid
            try:
                g = body(ctxs[cid])
                while True:
                    try:
                        next(g)
                    except StopIteration:
                        break
                    barrier.wait()
            except BaseException as exc:
                errors[cid] = exc
                barrier.abort()
            finally:
                _tls.core = None

        threads = [threading.Thread(target=runner, args=(i,), name=f"worker-{i}")
                   for i in range(n)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for exc in errors:
            if exc is not None and not isinstance(exc, threading.BrokenBarrierError):
                raise exc


def _wrap(cfg: ClusterConfig, name: str, leaf: list) -> list:
    return cfg.buffer_hook(name, leaf) if cfg.buffer_hook is not None else leaf


def _phase_backends(cfg: ClusterConfig, base: Backend) -> tuple[list[Backend], Backend]:
    """Per-worker backends plus the serial-phase backend."""
    pc = cfg.counters
    if pc is None:
        quiet = base.with_counters(None)
        return [quiet] * cfg.n_cores, quiet
    if len(pc.workers) != cfg.n_cores:
        raise BadArgs("PhaseCounters sized for a different core count")
    return [base.with_counters(c) for c in pc.workers], base.with_counters(pc.serial)


def par_linear_infer(m: LinearModel, x: Sequence[float], cfg: ClusterConfig,
                     backend: Backend) -> int:
    """Column-split partial dot products into R, row-split combine with the
    bias, then master activation (softmax for LR, identity for SVM) + argmax."""
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    n_cores = cfg.n_cores
    W = m.W.tolist()
    bias = m.b.tolist()
    wb, sb = _phase_backends(cfg, backend)
    R = [_wrap(cfg, "R", [0.0] * n_cores) for _ in range(m.n_class)]
    y = _wrap(cfg, "y", [0.0] * m.n_class)
    result = {}

    def body(ctx):
        be = wb[ctx.core_id]
        p0 = ctx.partition(m.d, "columns")
        for i in range(m.n_class):
            row = W[i]
            acc = 0.0
            for j in range(p0.lb, p0.ub):
                acc = be.add(acc, be.mul(row[j], x[j]))
            R[i][ctx.core_id] = acc
        yield
        p1 = ctx.partition(m.n_class, "rows")
        for i in range(p1.lb, p1.ub):
            ri = R[i]
            acc = ri[0]
            for c in range(1, n_cores):
                acc = be.add(acc, ri[c])
            y[i] = be.add(acc, bias[i])
        yield
        if ctx.is_master:
            scores = softmax(list(y), sb) if m.kind == "lr" else list(y)
            result["label"] = argmax(scores, sb)

    Cluster(cfg).run(body)
    return result["label"]


def par_gnb_infer(m: GnbModel, x: Sequence[float], cfg: ClusterConfig,
                  backend: Backend) -> int:
    """Feature-split partial log-likelihood sums into R, row-split combine
    with the log prior, master argmax."""
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    n_cores = cfg.n_cores
    mu = m.mu.tolist()
    sigma2 = m.sigma2.tolist()
    log_norm = m.log_norm.tolist()
    log_prior = m.log_prior.tolist()
    wb, sb = _phase_backends(cfg, backend)
    R = [_wrap(cfg, "R", [0.0] * n_cores) for _ in range(m.n_class)]
    y = _wrap(cfg, "y", [0.0] * m.n_class)
    result = {}

    def body(ctx):
        be = wb[ctx.core_id]
        p0 = ctx.partition(m.d, "columns")
        for i in range(m.n_class):
            mu_i, s2_i, ln_i = mu[i], sigma2[i], log_norm[i]
            acc = 0.0
            for k in range(p0.lb, p0.ub):
                diff = be.sub(x[k], mu_i[k])
                q = be.div(be.mul(diff, diff), be.mul(2.0, s2_i[k]))
                acc = be.add(acc, be.sub(ln_i[k], q))
            R[i][ctx.core_id] = acc
        yield
        p1 = ctx.partition(m.n_class, "rows")
        for i in range(p1.lb, p1.ub):
            ri = R[i]
            acc = ri[0]
            for c in range(1, n_cores):
                acc = be.add(acc, ri[c])
            y[i] = be.add(acc, log_prior[i])
        yield
        if ctx.is_master:
            result["label"] = argmax(list(y), sb)

    Cluster(cfg).run(body)
    return result["label"]


def _merge_sorted_lists(lists: list[NeighborList], k: int, be: Backend) -> NeighborList:
    """Global k smallest from per-worker sorted k-lists by repeated head
    selection: at most (n_lists - 1) * k distance comparisons."""
    pos = [0] * len(lists)
    out = []
    while len(out) < k:
        best = -1
        for c in range(len(lists)):
            if pos[c] >= len(lists[c].entries):
                continue
            cand = lists[c].entries[pos[c]]
            if best < 0:
                best = c
                continue
            cur = lists[best].entries[pos[best]]
            if be.lt(cand.dist, cur.dist):
                best = c
            elif cand.dist == cur.dist and cand.index < cur.index:
                best = c
        if best < 0:
            break
        out.append(lists[best].entries[pos[best]])
        pos[best] += 1
    return NeighborList(out)


def par_knn_infer(m: KnnModel, x: Sequence[float], cfg: ClusterConfig,
                  backend: Backend) -> int:
    """Row-split distances into e, per-worker partial selection sort into
    per-worker lists, master merge of the n_cores*k candidates + vote."""
    if len(x) != m.train.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.train.d}")
    n = m.train.n_samples
    n_cores = cfg.n_cores
    chunk = n // n_cores
    if m.k > chunk:
        raise KTooLargeForChunk(f"k={m.k} > chunk={chunk} (n={n}, cores={n_cores})")
    rows = m.train.features.tolist()
    labels = m.train.labels.tolist()
    wb, sb = _phase_backends(cfg, backend)
    e = _wrap(cfg, "e", [0.0] * n)
    local = _wrap(cfg, "l", [None] * n_cores)
    result = {}

    def body(ctx):
        be = wb[ctx.core_id]
        p = ctx.partition(n, "rows")
        for i in range(p.lb, p.ub):
            e[i] = sq_euclidean(rows[i], x, be)
        local[ctx.core_id] = partial_select_k(
            e[p.lb:p.ub], range(p.lb, p.ub), m.k, be, labels[p.lb:p.ub])
        yield
        if ctx.is_master:
            merged = _merge_sorted_lists(list(local), m.k, sb)
            result["label"] = majority_vote(merged, m.n_class, sb)

    Cluster(cfg).run(body)
    return result["label"]


def par_kmeans_run(state: KMeansState, data: Dataset, cfg: ClusterConfig,
                   backend: Backend) -> tuple[list[list[float]], list[int], int]:
    """Per iteration: row-split distances + cluster assignment + local
    centroid accumulation; barrier; strided global centroid reduction;
    barrier; master convergence test.  Matches kernels.kmeans_run
    bit-for-bit at n_cores=1."""
    if data.d != state.d:
        raise DimensionMismatch(f"data d={data.d}, state d={state.d}")
    n = data.n_samples
    k = state.k
    d = state.d
    if k > n:
        raise KTooLarge(f"k={k} > n_samples={n}")
    n_cores = cfg.n_cores
    rows = data.features.tolist()
    wb, sb = _phase_backends(cfg, backend)
    e = [_wrap(cfg, "e", [0.0] * k) for _ in range(n)]
    assignments = _wrap(cfg, "assignments", [0] * n)
    u_local = [[_wrap(cfg, "U_local", [0.0] * d) for _ in range(k)] for _ in range(n_cores)]
    counts_local = [_wrap(cfg, "counts", [0] * k) for _ in range(n_cores)]
    new_cent = [_wrap(cfg, "new_cent", [0.0] * d) for _ in range(k)]
    ctrl = {"cent": [rows[i][:] for i in range(k)], "iters": 0, "stop": False}

    def body(ctx):
        cid = ctx.core_id
        be = wb[cid]
        p = ctx.partition(n, "rows")
        while True:
            cent = ctrl["cent"]
            for i in range(p.lb, p.ub):
                row = rows[i]
                ei = e[i]
                for j in range(k):
                    ei[j] = sq_euclidean(row, cent[j], be)
                best = 0
                for j in range(1, k):
                    if be.lt(ei[j], ei[best]):
                        best = j
                assignments[i] = best
                be.count_other(1)
            uc = u_local[cid]
            cc = counts_local[cid]
            for j in range(k):
                uj = uc[j]
                for dim in range(d):
                    uj[dim] = 0.0
                cc[j] = 0
            for i in range(p.lb, p.ub):
                j = assignments[i]
                row = rows[i]
                uj = uc[j]
                for dim in range(d):
                    uj[dim] = be.add(uj[dim], row[dim])
                cc[j] += 1
                be.count_other(1)
            yield
            for j in range(cid, k, n_cores):
                total = counts_local[0][j]
                for c in range(1, n_cores):
                    total += counts_local[c][j]
                    be.count_other(1)
                nj = new_cent[j]
                for dim in range(d):
                    acc = u_local[0][j][dim]
                    for c in range(1, n_cores):
                        acc = be.add(acc, u_local[c][j][dim])
                    nj[dim] = acc
                be.count_other(1)  # emptiness check
                if total == 0:
                    for dim in range(d):
                        nj[dim] = cent[j][dim]
                else:
                    cf = be.from_i32(total)
                    for dim in range(d):
                        nj[dim] = be.div(nj[dim], cf)
            yield
            if ctx.is_master:
                fresh = [list(row) for row in new_cent]
                shift = max_centroid_shift(cent, fresh, sb)
                ctrl["cent"] = fresh
                ctrl["iters"] += 1
                ctrl["stop"] = sb.lt(shift, state.epsilon) or ctrl["iters"] >= state.max_iters
            yield
            if ctrl["stop"]:
                return

    Cluster(cfg).run(body)
    return ctrl["cent"], list(assignments), ctrl["iters"]


def par_rf_votes(m: RfModel, x: Sequence[float], cfg: ClusterConfig,
                 backend: Backend) -> tuple[int, list[int]]:
    """Static tree assignment; workers bump the shared vote array under the
    critical section; master argmax.  Returns (label, vote histogram)."""
    if len(x) != m.d:
        raise DimensionMismatch(f"x has {len(x)} features, model wants {m.d}")
    wb, sb = _phase_backends(cfg, backend)
    votes = _wrap(cfg, "votes", [0] * m.n_class)
    result = {}

    def body(ctx):
        be = wb[ctx.core_id]
        p = ctx.partition(m.n_trees, "rows")
        for t in range(p.lb, p.ub):
            cls = dt_infer(m.trees[t], x, be)
            with ctx.critical():
                votes[cls] += 1
            be.count_other(1)
        yield
        if ctx.is_master:
            result["label"] = _argmax_int(list(votes), sb)

    Cluster(cfg).run(body)
    return result["label"], list(votes)


def par_rf_infer(m: RfModel, x: Sequence[float], cfg: ClusterConfig,
                 backend: Backend) -> int:
    return par_rf_votes(m, x, cfg, backend)[0]
