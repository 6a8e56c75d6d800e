#!/usr/bin/env python3
"""Regenerate the exp polynomial coefficients used in nml/backend.py.

Fits q in  exp(r) ~= 1 + r + r^2*q(r)  (q quartic) on r in [-ln2/2, ln2/2],
minimizing max relative error via iteratively reweighted least squares on
Chebyshev nodes, then reports float32-rounded coefficients and the
end-to-end ulp error of the full algorithm measured in float32.
"""

import numpy as np

A = -np.log(2.0) / 2
B = np.log(2.0) / 2
M = 4000


def fit() -> np.ndarray:
    k = np.arange(M)
    r = 0.5 * (A + B) + 0.5 * (B - A) * np.cos((2 * k + 1) * np.pi / (2 * M))
    er = np.exp(r)
    g = (er - 1.0 - r) / (r * r)
    V = np.vander(r, 5, increasing=True)
    w_eff = (r * r) / er  # |p - e^r|/e^r = r^2 |q - g| / e^r
    W = w_eff.copy()
    coeffs = None
    for _ in range(12):
        c, *_ = np.linalg.lstsq(V * W[:, None], g * W, rcond=None)
        resid = (V @ c - g) * w_eff
        W *= 1.0 + 2.0 * np.abs(resid) / np.max(np.abs(resid))
        W /= W.max()
        coeffs = c
    print("max relative fit error:", np.max(np.abs(resid)))
    return coeffs


def ulp_check(c32: np.ndarray) -> None:
    ln2_hi = np.float32(0.693359375)
    ln2_lo = np.float32(-2.12194440e-4)
    log2e = np.float32(1.4426950408889634)
    rng = np.random.default_rng(7)
    xs = np.concatenate([rng.uniform(-87, 88, 400000),
                         rng.uniform(-5, 5, 400000)]).astype(np.float32)
    t = np.float32(xs * log2e)
    n = np.round(t.astype(np.float64)).astype(np.int64)
    nf = np.float32(n)
    r = np.float32(np.float32(xs - np.float32(nf * ln2_hi)) - np.float32(nf * ln2_lo))
    q = c32[4]
    for cc in (c32[3], c32[2], c32[1], c32[0]):
        q = np.float32(np.float32(q * r) + cc)
    p = np.float32(np.float32(1.0) + np.float32(r + np.float32(np.float32(r * r) * q)))
    got = np.float32(np.ldexp(p.astype(np.float64), n))
    want = np.float32(np.exp(xs.astype(np.float64)))

    def key(u):
        return np.where(u & 0x80000000, -(u & 0x7FFFFFFF).astype(np.int64),
                        (u & 0x7FFFFFFF).astype(np.int64))

    d = np.abs(key(got.view(np.uint32).astype(np.int64)) -
               key(want.view(np.uint32).astype(np.int64)))
    print(f"end-to-end float32: max {d.max()} ulp, mean {d.mean():.3f}, >2 ulp: {(d > 2).sum()}")


if __name__ == "__main__":
    c = fit()
    c32 = np.float32(c)
    for i, v in enumerate(c32, start=2):
        print(f"_C{i} = 0x{int(v.view(np.uint32)):08X}  # {float(v)!r}")
    ulp_check(c32)
