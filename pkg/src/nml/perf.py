"""Operation counting, Amdahl analysis, speedup measurement, and the
partial-sort strategy advisor.

Cycle counts are out of scope; every performance quantity here is an
operation count.  A sequential run is counted with a single sink; a
parallel run is counted with one sink per worker plus a serial sink that
receives the master-only phases (final activation/argmax/merge loops).
Speedups derive from those tallies:

    parallel_fraction = (seq_ops - serial_phase_ops) / seq_ops
    theoretical       = 1 / ((1 - p) + p / n_cores)         (Amdahl)
    achieved          = seq_ops / (max worker ops + serial_phase_ops)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .backend import Backend
from .errors import BadArgs, BadFraction, EmptyCounters

_FIELDS = ("fp_add", "fp_sub", "fp_mul", "fp_div", "fp_cmp", "fp_exp", "other_ops")


@dataclass
class OpCounters:
    """Per-worker tallies of FP and counted non-FP operations."""

    fp_add: int = 0
    fp_sub: int = 0
    fp_mul: int = 0
    fp_div: int = 0
    fp_cmp: int = 0
    fp_exp: int = 0
    other_ops: int = 0

    def fp_total(self) -> int:
        return self.fp_add + self.fp_sub + self.fp_mul + self.fp_div + self.fp_cmp + self.fp_exp

    def total(self) -> int:
        return self.fp_total() + self.other_ops

    def __add__(self, other: "OpCounters") -> "OpCounters":
        return OpCounters(*[getattr(self, f) + getattr(other, f) for f in _FIELDS])

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in _FIELDS}


@dataclass
class PhaseCounters:
    """Counter sinks for one parallel run: one per worker plus the serial
    (master-only) phases."""

    workers: list[OpCounters]
    serial: OpCounters = field(default_factory=OpCounters)

    @classmethod
    def for_cores(cls, n_cores: int) -> "PhaseCounters":
        return cls(workers=[OpCounters() for _ in range(n_cores)])


def amdahl(p: float, n: int) -> float:
    """Speedup bound 1 / ((1-p) + p/n) for parallel fraction p on n cores."""
    if not 0.0 <= p <= 1.0:
        raise BadFraction(f"parallel fraction {p!r} outside [0, 1]")
    if n < 1:
        raise BadFraction(f"core count {n!r} below 1")
    return 1.0 / ((1.0 - p) + p / n)


def invert_amdahl(speedup: float, n: int) -> float:
    """Parallel fraction p that yields the given Amdahl speedup on n cores."""
    if n < 2:
        raise BadFraction("core count must be >= 2 to invert")
    return (n * (speedup - 1.0)) / (speedup * (n - 1.0))


def flop_intensity(c: OpCounters) -> float:
    """Percentage of counted operations that are floating-point."""
    total = c.total()
    if total == 0:
        raise EmptyCounters("no operations counted")
    return 100.0 * c.fp_total() / total


@dataclass
class SortChoice:
    choice: str  # "SS" | "QS"
    ss_cost: float
    qs_cost: float


def sort_advisor(n: int, c: int, k: int) -> SortChoice:
    """Pick partial selection sort (SS) or quick sort (QS) for extracting
    the k smallest of n candidates on c cores.

    Comparison-count estimates (real-valued, per-chunk work plus the
    merge of the c local k-lists):

        SS = (n/c)*k          + c*k
        QS = (n/c)*log2(n/c)  + c*k

    SS wins iff k <= log2(n/c); ties go to SS.
    """
    if n < 1 or c < 1 or k < 1:
        raise BadArgs(f"sort_advisor needs n, c, k >= 1 (got {n}, {c}, {k})")
    chunk = n / c
    ss = chunk * k + c * k
    qs = chunk * math.log2(chunk) + c * k
    return SortChoice("SS" if ss <= qs else "QS", ss, qs)


@dataclass
class BenchCase:
    """One measurable kernel run: a single inference for lr/svm/gnb/knn/rf
    (query vector x), a full clustering run for kmeans (dataset)."""

    kernel: str  # lr | svm | gnb | knn | kmeans | rf
    model: object
    x: list | None = None
    data: object | None = None
    dims: dict = field(default_factory=dict)


@dataclass
class SpeedupReport:
    kernel: str
    dims: dict
    n_cores: int
    backend: str
    seq_counters: OpCounters
    seq_ops: int
    per_worker_ops: list[int]
    serial_ops: int
    parallel_fraction: float
    theoretical: float
    achieved: float
    flop_intensity: float
    labels: list[int]

    def as_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "dims": self.dims,
            "n_cores": self.n_cores,
            "backend": self.backend,
            "seq_counters": self.seq_counters.as_dict(),
            "seq_ops": self.seq_ops,
            "per_worker_ops": self.per_worker_ops,
            "serial_ops": self.serial_ops,
            "parallel_fraction": self.parallel_fraction,
            "theoretical_speedup": self.theoretical,
            "achieved_speedup": self.achieved,
            "flop_intensity_pct": self.flop_intensity,
            "labels": self.labels,
        }


def compute_speedups(seq_ops: int, worker_ops: list[int], serial_ops: int,
                     n_cores: int) -> tuple[float, float, float]:
    """(parallel_fraction, theoretical, achieved) from raw tallies."""
    fraction = (seq_ops - serial_ops) / seq_ops
    return fraction, amdahl(fraction, n_cores), seq_ops / (max(worker_ops) + serial_ops)


def _run_sequential(case: BenchCase, be: Backend) -> list[int]:
    from . import kernels

    k = case.kernel
    if k == "lr":
        return [kernels.lr_infer(case.model, case.x, be)]
    if k == "svm":
        return [kernels.svm_infer(case.model, case.x, be)]
    if k == "gnb":
        return [kernels.gnb_infer(case.model, case.x, be)]
    if k == "knn":
        return [kernels.knn_infer(case.model, case.x, be)]
    if k == "rf":
        return [kernels.rf_infer(case.model, case.x, be)]
    if k == "kmeans":
        _, assignments, _ = kernels.kmeans_run(case.model, case.data, be)
        return list(assignments)
    raise BadArgs(f"unknown kernel {k!r}")


def _run_parallel(case: BenchCase, cfg, be: Backend) -> list[int]:
    from . import parallel

    k = case.kernel
    if k in ("lr", "svm"):
        return [parallel.par_linear_infer(case.model, case.x, cfg, be)]
    if k == "gnb":
        return [parallel.par_gnb_infer(case.model, case.x, cfg, be)]
    if k == "knn":
        return [parallel.par_knn_infer(case.model, case.x, cfg, be)]
    if k == "rf":
        return [parallel.par_rf_infer(case.model, case.x, cfg, be)]
    if k == "kmeans":
        _, assignments, _ = parallel.par_kmeans_run(case.model, case.data, cfg, be)
        return list(assignments)
    raise BadArgs(f"unknown kernel {k!r}")


def measure(case: BenchCase, cfg, backend: Backend | None = None) -> SpeedupReport:
    """Run a kernel once sequentially and once in parallel, both with
    counters attached, and derive the speedup quantities.

    The default backend is the emulated one; op counts are identical
    under either backend (same call sequence), so the native backend is
    a valid faster substitute.
    """
    from dataclasses import replace

    base = backend if backend is not None else Backend.emulated()

    seq_c = OpCounters()
    labels = _run_sequential(case, base.with_counters(seq_c))

    phase = PhaseCounters.for_cores(cfg.n_cores)
    pcfg = replace(cfg, counters=phase)
    _run_parallel(case, pcfg, base)

    seq_ops = seq_c.total()
    worker_ops = [w.total() for w in phase.workers]
    serial_ops = phase.serial.total()
    fraction, theoretical, achieved = compute_speedups(seq_ops, worker_ops, serial_ops, cfg.n_cores)
    return SpeedupReport(
        kernel=case.kernel,
        dims=dict(case.dims),
        n_cores=cfg.n_cores,
        backend=base.mode,
        seq_counters=seq_c,
        seq_ops=seq_ops,
        per_worker_ops=worker_ops,
        serial_ops=serial_ops,
        parallel_fraction=fraction,
        theoretical=theoretical,
        achieved=achieved,
        flop_intensity=flop_intensity(seq_c),
        labels=labels,
    )


def emit_report(reports: list[SpeedupReport]) -> str:
    """Schema-stable JSON array of report objects, deterministic field order."""
    return json.dumps([r.as_dict() for r in reports], indent=2) + "\n"
