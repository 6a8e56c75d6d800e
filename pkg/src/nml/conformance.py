"""Differential conformance suite for the emulated binary32 arithmetic.

For each of add/sub/mul/div and the three comparisons, the emulated
routines are checked bit-for-bit against two independent native routes:

* numpy float32 arithmetic (vectorized hardware binary32), and
* the native Backend (double arithmetic with a single rounding).

Inputs are the full pairwise matrix of directed special patterns plus a
seeded stream of random pairs.  Half of the random pairs are drawn
uniformly over all 2**32 patterns; the other half share nearby exponents
to exercise alignment and cancellation paths that uniform bits almost
never hit.  NaN results compare equal regardless of payload (produced
NaNs are canonicalized; payload propagation is out of contract).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import backend as be
from . import softfloat as sf

# Directed patterns: zeros, subnormal extremes, normal extremes, infs,
# quiet/signaling NaNs, and a few ordinary values for the fast paths.
SPECIAL_PATTERNS = (
    0x00000000, 0x80000000,  # +0 -0
    0x00000001, 0x80000001,  # min subnormal
    0x007FFFFF, 0x807FFFFF,  # max subnormal
    0x00800000, 0x80800000,  # min normal
    0x7F7FFFFF, 0xFF7FFFFF,  # max finite
    0x7F800000, 0xFF800000,  # inf
    0x7FC00000, 0xFFC00000,  # quiet NaN
    0x7F800001, 0xFF800001,  # signaling NaN
    0x7FA55A55,              # signaling NaN with payload
    0x3F800000, 0xBF800000,  # 1
    0x3F800001,              # 1 + ulp
    0x40000000, 0xC0000000,  # 2
    0x3F000000,              # 0.5
    0x3FC00000,              # 1.5
    0x34000000,              # 2**-23
)

_ARITH = ("add", "sub", "mul", "div")
_CMP = ("le", "lt", "eq")

_SF_OP = {"add": sf.sf_add, "sub": sf.sf_sub, "mul": sf.sf_mul, "div": sf.sf_div,
          "le": sf.sf_le, "lt": sf.sf_lt, "eq": sf.sf_eq}


@dataclass
class OpResult:
    op: str
    checked: int = 0
    mismatches: int = 0
    first_failures: list = field(default_factory=list)  # (a, b, got, want)

    @property
    def passed(self) -> bool:
        return self.mismatches == 0


@dataclass
class ConformanceReport:
    results: list[OpResult]
    elapsed_s: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


def _random_pairs(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    half = n // 2
    a = rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
    b = rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
    # Rewrite the second half of b to share a's exponent +/- 4: dominant
    # coverage for add/sub alignment, ties, and cancellation.
    ea = ((a[half:] >> 23) & 0xFF).astype(np.int64)
    delta = rng.integers(-4, 5, n - half)
    eb = np.clip(ea + delta, 0, 0xFF).astype(np.uint32)
    b[half:] = (b[half:] & 0x807FFFFF) | (eb << 23)
    return a, b


def _native_arith(op: str, fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        if op == "add":
            return fa + fb
        if op == "sub":
            return fa - fb
        if op == "mul":
            return fa * fb
        return fa / fb


def _native_cmp(op: str, fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        if op == "le":
            return fa <= fb
        if op == "lt":
            return fa < fb
        return fa == fb


def _both_nan(x: int, y: int) -> bool:
    return (x & 0x7FFFFFFF) > 0x7F800000 and (y & 0x7FFFFFFF) > 0x7F800000


def _check_arith(op: str, av: np.ndarray, bv: np.ndarray, res: OpResult,
                 max_failures: int = 8) -> None:
    soft = _SF_OP[op]
    want = _native_arith(op, av.view(np.float32), bv.view(np.float32)).view(np.uint32)
    al = av.tolist()
    bl = bv.tolist()
    wl = want.tolist()
    for i in range(len(al)):
        a = al[i]
        b = bl[i]
        got = soft(a, b)
        w = wl[i]
        if got != w and not _both_nan(got, w):
            res.mismatches += 1
            if len(res.first_failures) < max_failures:
                res.first_failures.append((a, b, got, w))
    res.checked += len(al)


def _check_cmp(op: str, av: np.ndarray, bv: np.ndarray, res: OpResult,
               max_failures: int = 8) -> None:
    soft = _SF_OP[op]
    want = _native_cmp(op, av.view(np.float32), bv.view(np.float32))
    al = av.tolist()
    bl = bv.tolist()
    wl = want.tolist()
    for i in range(len(al)):
        a = al[i]
        b = bl[i]
        got = soft(a, b)
        w = wl[i]
        if got != w:
            res.mismatches += 1
            if len(res.first_failures) < max_failures:
                res.first_failures.append((a, b, got, w))
    res.checked += len(al)


def _check_native_backend(av: np.ndarray, bv: np.ndarray, results: dict) -> None:
    """Tie the scalar native Backend to the numpy route on a subsample."""
    nb = be.Backend.native()
    ops = {"add": nb.add, "sub": nb.sub, "mul": nb.mul, "div": nb.div}
    for op, f in ops.items():
        want = _native_arith(op, av.view(np.float32), bv.view(np.float32)).view(np.uint32)
        res = results[op]
        for a, b, w in zip(av.tolist(), bv.tolist(), want.tolist()):
            fa = sf.float_from_bits(a)
            fb = sf.float_from_bits(b)
            got = sf.bits_from_float(f(fa, fb))
            if got != w and not _both_nan(got, w):
                res.mismatches += 1
                if len(res.first_failures) < 8:
                    res.first_failures.append((a, b, got, w))
            res.checked += 1


def run_conformance(n_random: int = 1_000_000, seed: int = 0,
                    backend_subsample: int = 20_000) -> ConformanceReport:
    """Run the full differential suite; see module docstring."""
    t0 = time.perf_counter()
    results = {op: OpResult(op) for op in _ARITH + _CMP}

    sp = np.array(SPECIAL_PATTERNS, dtype=np.uint32)
    ga, gb = np.meshgrid(sp, sp)
    da, db = ga.ravel(), gb.ravel()

    rng = np.random.default_rng(seed)
    ra, rb = _random_pairs(rng, n_random)

    for op in _ARITH:
        _check_arith(op, da, db, results[op])
        _check_arith(op, ra, rb, results[op])
    for op in _CMP:
        _check_cmp(op, da, db, results[op])
        _check_cmp(op, ra, rb, results[op])

    # Independent scalar route: native Backend vs numpy on a subsample.
    k = min(backend_subsample, n_random)
    _check_native_backend(ra[:k], rb[:k], results)

    return ConformanceReport(list(results.values()), time.perf_counter() - t0)
