"""Numeric backends the kernels are parameterized over.

A backend exposes scalar binary32 arithmetic on plain Python floats whose
values are exactly representable in binary32 (binary32 embeds losslessly
in a Python float, so the float <-> bit-pattern mapping is exact for
everything but NaN payloads, which the kernels never rely on).

Two modes:

* ``native``: host floating point.  add/sub/mul/div run in double and
  are rounded once to binary32; with 53 >= 2*24 + 2 significand bits the
  double rounding is provably identical to direct binary32 RNE for all
  four operations, including subnormal results.
* ``emulated``: the pure-integer routines from :mod:`nml.softfloat`.

Both modes run the *same* exp algorithm (range reduction, degree-6
polynomial, exponent reassembly) on top of their own primitives, so
exp is bit-identical across backends whenever the primitives are.

An optional counter sink tallies one op per public call: add/sub/mul/
div/compare/exp each bump their own field, ``from_i32`` and explicitly
counted integer work bump ``other_ops``.  Sinks are duck-typed (any
object with those attributes); per-worker sinks must never be shared.
"""

from __future__ import annotations

import math
import struct

from . import softfloat as sf

_F32 = struct.Struct("<f")

NAN = sf.float_from_bits(sf.QNAN)
INF = math.inf

# exp(x) = 2**n * p(r), x = n*ln2 + r, |r| <= ln2/2.
# p(r) = 1 + r + r^2*(C2 + C3 r + C4 r^2 + C5 r^3 + C6 r^4), coefficients
# fitted for minimal relative error on the reduced interval (see
# tools/gen_exp_coeffs.py).  Measured max error: 1 ulp over 10^6 samples.
_LOG2E = sf.float_from_bits(0x3FB8AA3B)
_LN2_HI = sf.float_from_bits(0x3F318000)  # 11 significand bits: n*LN2_HI is exact
_LN2_LO = sf.float_from_bits(0xB95E8083)
_C2 = sf.float_from_bits(0x3EFFFFFE)
_C3 = sf.float_from_bits(0x3E2AAA49)
_C4 = sf.float_from_bits(0x3D2AAC78)
_C5 = sf.float_from_bits(0x3C091CED)
_C6 = sf.float_from_bits(0x3AB51240)

# exp certainly overflows above, certainly rounds to zero below.
_EXP_HI = 89.0
_EXP_LO = -104.0


def _round32(x: float) -> float:
    """Round a double to binary32 (RNE) and back.

    struct raises OverflowError exactly when a finite double rounds to
    binary32 infinity, which is the IEEE overflow-to-inf case.
    """
    try:
        return _F32.unpack(_F32.pack(x))[0]
    except OverflowError:
        return math.copysign(INF, x)


def _n_add(a: float, b: float) -> float:
    return _round32(a + b)


def _n_sub(a: float, b: float) -> float:
    return _round32(a - b)


def _n_mul(a: float, b: float) -> float:
    return _round32(a * b)


def _n_div(a: float, b: float) -> float:
    if b == 0.0:
        if a != a or a == 0.0:
            return NAN
        neg = math.copysign(1.0, a) != math.copysign(1.0, b)
        return -INF if neg else INF
    return _round32(a / b)


def _e_bin(op):
    def f(a: float, b: float) -> float:
        return sf.float_from_bits(op(sf.bits_from_float(a), sf.bits_from_float(b)))

    return f


_e_add = _e_bin(sf.sf_add)
_e_sub = _e_bin(sf.sf_sub)
_e_mul = _e_bin(sf.sf_mul)
_e_div = _e_bin(sf.sf_div)


def _e_le(a: float, b: float) -> bool:
    return sf.sf_le(sf.bits_from_float(a), sf.bits_from_float(b))


def _e_lt(a: float, b: float) -> bool:
    return sf.sf_lt(sf.bits_from_float(a), sf.bits_from_float(b))


def _e_eq(a: float, b: float) -> bool:
    return sf.sf_eq(sf.bits_from_float(a), sf.bits_from_float(b))


def _e_from_i32(n: int) -> float:
    return sf.float_from_bits(sf.sf_from_i32(n))


def _n_from_i32(n: int) -> float:
    return _round32(float(n))


def _exp_impl(add, sub, mul, x: float) -> float:
    """Shared exp algorithm over a backend's uncounted primitives."""
    if x != x:
        return NAN
    if x == INF:
        return INF
    if x == -INF or x < _EXP_LO:
        return 0.0
    if x == 0.0:
        return 1.0
    if x > _EXP_HI:
        return INF
    t = mul(x, _LOG2E)
    n = round(t)  # RNE; |n| <= 151 so float(n) is exact in binary32
    nf = float(n)
    r = sub(sub(x, mul(nf, _LN2_HI)), mul(nf, _LN2_LO))
    q = _C6
    for c in (_C5, _C4, _C3, _C2):
        q = add(mul(q, r), c)
    p = add(1.0, add(r, mul(mul(r, r), q)))
    # p is a normal binary32, so scaling in double is exact and the final
    # conversion is the single rounding (handles overflow/subnormals).
    return _round32(math.ldexp(p, n))


class Backend:
    """Scalar binary32 ops in one of two modes, with optional op counting.

    ``counters`` is any object with integer attributes fp_add, fp_sub,
    fp_mul, fp_div, fp_cmp, fp_exp, other_ops (see nml.perf.OpCounters),
    or None to disable counting.
    """

    __slots__ = ("mode", "counters", "_add", "_sub", "_mul", "_div", "_le", "_lt", "_eq", "_conv")

    def __init__(self, mode: str, counters=None):
        if mode not in ("native", "emulated"):
            raise ValueError(f"unknown backend mode {mode!r}")
        self.mode = mode
        self.counters = counters
        if mode == "native":
            self._add, self._sub, self._mul, self._div = _n_add, _n_sub, _n_mul, _n_div
            self._le = lambda a, b: a <= b
            self._lt = lambda a, b: a < b
            self._eq = lambda a, b: a == b
            self._conv = _n_from_i32
        else:
            self._add, self._sub, self._mul, self._div = _e_add, _e_sub, _e_mul, _e_div
            self._le, self._lt, self._eq = _e_le, _e_lt, _e_eq
            self._conv = _e_from_i32

    @classmethod
    def native(cls, counters=None) -> "Backend":
        return cls("native", counters)

    @classmethod
    def emulated(cls, counters=None) -> "Backend":
        return cls("emulated", counters)

    def with_counters(self, counters) -> "Backend":
        """A view sharing this backend's mode with its own counter sink."""
        return Backend(self.mode, counters)

    def add(self, a: float, b: float) -> float:
        c = self.counters
        if c is not None:
            c.fp_add += 1
        return self._add(a, b)

    def sub(self, a: float, b: float) -> float:
        c = self.counters
        if c is not None:
            c.fp_sub += 1
        return self._sub(a, b)

    def mul(self, a: float, b: float) -> float:
        c = self.counters
        if c is not None:
            c.fp_mul += 1
        return self._mul(a, b)

    def div(self, a: float, b: float) -> float:
        c = self.counters
        if c is not None:
            c.fp_div += 1
        return self._div(a, b)

    def le(self, a: float, b: float) -> bool:
        c = self.counters
        if c is not None:
            c.fp_cmp += 1
        return self._le(a, b)

    def lt(self, a: float, b: float) -> bool:
        c = self.counters
        if c is not None:
            c.fp_cmp += 1
        return self._lt(a, b)

    def eq(self, a: float, b: float) -> bool:
        c = self.counters
        if c is not None:
            c.fp_cmp += 1
        return self._eq(a, b)

    def exp(self, x: float) -> float:
        c = self.counters
        if c is not None:
            c.fp_exp += 1
        return _exp_impl(self._add, self._sub, self._mul, x)

    def from_i32(self, n: int) -> float:
        c = self.counters
        if c is not None:
            c.other_ops += 1
        return self._conv(n)

    def count_other(self, n: int = 1) -> None:
        """Tally explicitly counted non-FP kernel work (index updates,
        integer compares, vote bumps)."""
        c = self.counters
        if c is not None:
            c.other_ops += n
