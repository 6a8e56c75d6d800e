"""IEEE-754 binary32 arithmetic implemented purely over Python integers.

Every function here takes and returns 32-bit patterns (plain ints in
[0, 2**32)).  All 2**32 patterns are valid inputs: NaNs, infinities,
signed zeros and subnormals behave per IEEE-754-2008 with rounding fixed
to round-to-nearest-even.  Exceptional cases return IEEE result values
(NaN, ±inf); no status flags are modeled.  Every produced NaN is the
canonical quiet pattern 0x7FC00000; payload propagation is deliberately
unspecified.

The module has no dependencies and no state; functions are pure and safe
to call from any number of workers.
"""

from __future__ import annotations

import struct

SIGN = 0x80000000
EXP_MASK = 0x7F800000
MANT_MASK = 0x007FFFFF
IMPLICIT = 0x00800000
QNAN = 0x7FC00000
PLUS_INF = 0x7F800000
MINUS_INF = 0xFF800000
PLUS_ZERO = 0x00000000
MINUS_ZERO = 0x80000000
ONE = 0x3F800000
MAX_FINITE = 0x7F7FFFFF

_F32 = struct.Struct("<f")


def is_nan(a: int) -> bool:
    return (a & 0x7FFFFFFF) > EXP_MASK


def is_inf(a: int) -> bool:
    return (a & 0x7FFFFFFF) == EXP_MASK


def bits_from_float(x: float) -> int:
    """Bit pattern of the binary32 nearest to a Python float (RNE)."""
    return int.from_bytes(_F32.pack(x), "little")


def float_from_bits(a: int) -> float:
    """Exact Python-float value of a binary32 pattern (NaN payload not preserved)."""
    return _F32.unpack(a.to_bytes(4, "little"))[0]


def _round_pack(sign: int, m: int, e: int) -> int:
    """Round m * 2**e (m > 0) to binary32 RNE and pack with the given sign bit.

    sign is 0 or SIGN.  Handles normal, subnormal, overflow-to-inf and
    round-up-to-min-normal cases.
    """
    nbits = m.bit_length()
    top = e + nbits - 1  # exponent of the leading bit
    if top >= -126:
        shift = nbits - 24
        if shift > 0:
            rem = m & ((1 << shift) - 1)
            half = 1 << (shift - 1)
            m >>= shift
            if rem > half or (rem == half and (m & 1)):
                m += 1
                if m == 0x1000000:  # carry out of the 24-bit significand
                    m >>= 1
                    top += 1
        else:
            m <<= -shift
        if top > 127:
            return sign | PLUS_INF
        return sign | ((top + 127) << 23) | (m & MANT_MASK)
    # Subnormal range: quantum is 2**-149.
    shift = -149 - e
    if shift <= 0:
        m <<= -shift
    else:
        rem = m & ((1 << shift) - 1)
        half = 1 << (shift - 1)
        m >>= shift
        if rem > half or (rem == half and (m & 1)):
            m += 1
    if m >= IMPLICIT:  # rounded up into the smallest normal
        return sign | (1 << 23)
    return sign | m


def _split(a: int) -> tuple[int, int, int]:
    """Decompose finite a into (sign_bit, exp_field>=1, significand).

    Subnormals are reported with exp field 1 and no implicit bit, so the
    value is always significand * 2**(exp - 150).
    """
    e = (a >> 23) & 0xFF
    m = a & MANT_MASK
    if e:
        m |= IMPLICIT
    else:
        e = 1
    return a & SIGN, e, m


def sf_add(a: int, b: int) -> int:
    ea = (a >> 23) & 0xFF
    eb = (b >> 23) & 0xFF
    ma = a & MANT_MASK
    mb = b & MANT_MASK
    if ea == 0xFF:
        if ma:
            return QNAN
        if eb == 0xFF:
            if mb:
                return QNAN
            return a if a == b else QNAN  # inf + -inf is invalid
        return a
    if eb == 0xFF:
        return QNAN if mb else b
    sa = a >> 31
    sb = b >> 31
    if ea:
        ma |= IMPLICIT
    else:
        ea = 1
    if eb:
        mb |= IMPLICIT
    else:
        eb = 1
    # Align both significands to the smaller exponent; exact in big ints.
    if ea < eb:
        mb <<= eb - ea
        e = ea
    else:
        ma <<= ea - eb
        e = eb
    s = (-ma if sa else ma) + (-mb if sb else mb)
    if s == 0:
        # Exact cancellation gives +0 under RNE; -0 only from (-0) + (-0).
        return MINUS_ZERO if (sa and sb) else PLUS_ZERO
    sign = SIGN if s < 0 else 0
    return _round_pack(sign, abs(s), e - 150)


def sf_neg(a: int) -> int:
    """Sign-bit flip; not an arithmetic op (ok on NaN)."""
    return a ^ SIGN


def sf_sub(a: int, b: int) -> int:
    """IEEE a - b, identically sf_add(a, sf_neg(b))."""
    return sf_add(a, b ^ SIGN)


def sf_mul(a: int, b: int) -> int:
    ea = (a >> 23) & 0xFF
    eb = (b >> 23) & 0xFF
    ma = a & MANT_MASK
    mb = b & MANT_MASK
    sign = (a ^ b) & SIGN
    if ea == 0xFF or eb == 0xFF:
        if (ea == 0xFF and ma) or (eb == 0xFF and mb):
            return QNAN
        # inf * 0 is invalid; inf * finite keeps the xor sign.
        if (ea == 0xFF and (eb == 0 and mb == 0)) or (eb == 0xFF and (ea == 0 and ma == 0)):
            return QNAN
        return sign | PLUS_INF
    if (ea == 0 and ma == 0) or (eb == 0 and mb == 0):
        return sign
    if ea:
        ma |= IMPLICIT
    else:
        ea = 1
    if eb:
        mb |= IMPLICIT
    else:
        eb = 1
    return _round_pack(sign, ma * mb, ea + eb - 300)


def sf_div(a: int, b: int) -> int:
    ea = (a >> 23) & 0xFF
    eb = (b >> 23) & 0xFF
    ma = a & MANT_MASK
    mb = b & MANT_MASK
    sign = (a ^ b) & SIGN
    if ea == 0xFF or eb == 0xFF:
        if (ea == 0xFF and ma) or (eb == 0xFF and mb):
            return QNAN
        if ea == 0xFF and eb == 0xFF:
            return QNAN  # inf / inf
        if ea == 0xFF:
            return sign | PLUS_INF
        return sign  # finite / inf -> signed zero
    a_zero = ea == 0 and ma == 0
    b_zero = eb == 0 and mb == 0
    if b_zero:
        return QNAN if a_zero else sign | PLUS_INF
    if a_zero:
        return sign
    if ea:
        ma |= IMPLICIT
    else:
        ea = 1
    if eb:
        mb |= IMPLICIT
    else:
        eb = 1
    # Normalize both significands to exactly 24 bits (subnormals may have
    # fewer) so the quotient always carries >= 31 bits: the kept 24 plus
    # guard bits, making the sticky fold into the lowest bit safe.
    na = 24 - ma.bit_length()
    nb = 24 - mb.bit_length()
    q, rem = divmod((ma << na) << 32, mb << nb)
    if rem:
        q |= 1
    return _round_pack(sign, q, (ea - na) - (eb - nb) - 32)


def _order_key(a: int) -> int:
    """Monotone integer key over non-NaN patterns; both zeros map to 0."""
    m = a & 0x7FFFFFFF
    return -m if a & SIGN else m


def sf_eq(a: int, b: int) -> bool:
    if is_nan(a) or is_nan(b):
        return False
    return _order_key(a) == _order_key(b)


def sf_lt(a: int, b: int) -> bool:
    if is_nan(a) or is_nan(b):
        return False
    return _order_key(a) < _order_key(b)


def sf_le(a: int, b: int) -> bool:
    if is_nan(a) or is_nan(b):
        return False
    return _order_key(a) <= _order_key(b)


def sf_from_i32(n: int) -> int:
    """RNE conversion of a signed 32-bit integer."""
    if n == 0:
        return PLUS_ZERO
    sign = SIGN if n < 0 else 0
    return _round_pack(sign, abs(n), 0)


def sf_ldexp(a: int, n: int) -> int:
    """a * 2**n with a single RNE rounding; finite nonzero a only."""
    sign, e, m = _split(a)
    return _round_pack(sign, m, e - 150 + n)
