"""Independent brute-force reference computations used by the test-suite.

Nothing here calls the package's enumeration or evaluation code; inputs and
outputs are plain numbers so disagreements point at one side unambiguously.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


# ------------------------------------------------------------------ q-series

def tau_product(N: int) -> list[int]:
    """tau(1..N) from q prod (1 - q^n)^24, by repeated multiplication of truncated series."""
    series = [1] + [0] * N
    for n in range(1, N + 1):
        for _ in range(24):
            # multiply in place by (1 - q^n), highest degree first
            for k in range(N, n - 1, -1):
                series[k] -= series[k - n]
    return series[:N]  # coefficient of q^k in the product is tau(k + 1)


def sigma(k: int, n: int) -> int:
    return sum(d**k for d in range(1, n + 1) if n % d == 0)


def tau_eisenstein(N: int) -> list[int]:
    """tau(1..N) from (E4^3 - E6^2) / 1728 with divisor sums computed directly."""
    e4 = [1] + [240 * sigma(3, n) for n in range(1, N + 1)]
    e6 = [1] + [-504 * sigma(5, n) for n in range(1, N + 1)]

    def mul(p, q):
        out = [0] * (N + 1)
        for i, a in enumerate(p):
            for j in range(N + 1 - i):
                out[i + j] += a * q[j]
        return out

    num = [x - y for x, y in zip(mul(mul(e4, e4), e4), mul(e6, e6))]
    assert all(c % 1728 == 0 for c in num)
    return [c // 1728 for c in num[1 : N + 1]]


def delta_product_value(z: complex, factors: int = 200) -> complex:
    """Delta(z) = q prod (1 - q^n)^24 evaluated directly."""
    q = np.exp(2j * np.pi * np.asarray(z))
    acc = q.copy()
    qn = np.ones_like(q)
    for _ in range(factors):
        qn = qn * q
        acc = acc * (1 - qn) ** 24
    return acc


def petersson_riemann(nx: int = 800, ny: int = 800, y_top: float = 6.0) -> float:
    """Midpoint rule for int_F y^12 |Delta|^2 dx dy / y^2 over the standard domain."""
    x = (np.arange(nx) + 0.5) / nx - 0.5
    s = (np.arange(ny) + 0.5) / ny
    X, S = np.meshgrid(x, s, indexing="ij")
    y_lo = np.sqrt(1 - X * X)
    Y = y_lo + (y_top - y_lo) * S
    vals = np.abs(delta_product_value(X + 1j * Y, 40)) ** 2 * Y**10
    inner = vals.mean(axis=1) * (y_top - y_lo[:, 0])
    return float(inner.mean())


# ------------------------------------------------------------------ lattice box scan

def _u_float(a, b, c, d, x, y):
    """u(z, xi z) via Moebius geometry: |w - z|^2 / (4 Im z Im w)."""
    n = a * d - b * c
    re = b + (a - d) * x - c * (x * x - y * y)
    im = y * (a - d - 2 * c * x)
    return (re * re + im * im) / (4.0 * n * y * y)


def _u_fraction(a, b, c, d, x: Fraction, y2: Fraction) -> Fraction:
    n = a * d - b * c
    re = b + (a - d) * x - c * (x * x - y2)
    im2 = y2 * (a - d - 2 * c * x) ** 2
    return (re * re + im2) / (4 * n * y2)


def box_profile(z: complex, N: int, delta: float, q: int = 1) -> list[int]:
    """#{xi in M2(Z), q | c : det xi = n, u(z, xi z) <= delta} for n = 1..N.

    Scans the full integer box |entries| <= cond(g_z) sqrt((4 + 2 delta) N).
    """
    x, y = float(z.real), float(z.imag)
    xq, y2q = Fraction(repr(x)), Fraction(repr(y)) ** 2
    dq = Fraction(repr(float(delta)))
    cond = y + x * x / y + 1.0 / y  # squared Frobenius norm of g_z
    B = int(math.floor(cond * math.sqrt((4 + 2 * delta) * N)))
    r = np.arange(-B, B + 1, dtype=np.int64)
    bb, cc = (t.ravel() for t in np.meshgrid(r, r, indexing="ij"))
    if q > 1:
        keep = cc % q == 0
        bb, cc = bb[keep], cc[keep]
    bc = bb * cc
    counts = np.zeros(N + 1, dtype=np.int64)
    for a in range(-B, B + 1):
        if a == 0:
            sel = (-bc >= 1) & (-bc <= N)
            b0, c0 = bb[sel], cc[sel]
            lo = np.full(b0.shape, -B)
            hi = np.full(b0.shape, B)
        else:
            if a > 0:
                lo = -((-(1 + bc)) // a)
                hi = (N + bc) // a
            else:
                m = -a
                lo = -((N + bc) // m)
                hi = (-(1 + bc)) // m
            lo = np.maximum(lo, -B)
            hi = np.minimum(hi, B)
            sel = hi >= lo
            b0, c0, lo, hi = bb[sel], cc[sel], lo[sel], hi[sel]
        lens = hi - lo + 1
        if lens.sum() == 0:
            continue
        rep = np.repeat(np.arange(b0.size), lens)
        offs = np.arange(lens.sum()) - np.repeat(np.cumsum(lens) - lens, lens)
        d = lo[rep] + offs
        b1, c1 = b0[rep], c0[rep]
        det = a * d - b1 * c1
        u = _u_float(float(a), b1.astype(float), c1.astype(float), d.astype(float), x, y)
        band = np.abs(u - delta) <= 1e-9 * (1 + delta)
        ok = (u <= delta) & ~band
        for i in np.nonzero(band)[0]:
            ok[i] = _u_fraction(a, int(b1[i]), int(c1[i]), int(d[i]), xq, y2q) <= dq
        counts += np.bincount(det[ok], minlength=N + 1)
    return [int(v) for v in counts[1:]]


def box_constrained(bound: float, q: int = 1) -> int:
    """#{xi : a^2 + b^2 + c^2 + d^2 <= bound, q | c} over the box."""
    B = int(math.isqrt(int(bound))) + 1
    r = np.arange(-B, B + 1)
    a, b, c, d = np.meshgrid(r, r, r, r, indexing="ij")
    ok = (a * a + b * b + c * c + d * d <= bound) & (c % q == 0)
    return int(ok.sum())


# ------------------------------------------------------------------ quaternion scans

def _norm_w(x, y, D):
    """Norm form of Z[w], w = (1 + sqrt D)/2 for D = 1 mod 4, else sqrt(D)/2 with D = 0 mod 4."""
    if D % 4 == 1:
        return x * x + x * y + ((1 - D) // 4) * y * y
    return x * x + (-D // 4) * y * y


def quat_box_count(n: int, delta: float, D_E: int = -19, D_B: int = 6) -> int:
    """Naive double scan over |x|, |y| <= ceil(sqrt(3 n (1 + delta))) for both a and b."""
    R = int(math.ceil(math.sqrt(3 * n * (1 + delta))))
    r = np.arange(-R, R + 1)
    X, Y = np.meshgrid(r, r, indexing="ij")
    nr = _norm_w(X, Y, D_E).ravel()
    hist = np.bincount(nr)
    cap = Fraction(repr(float(delta))) * n
    total = 0
    for w in range(hist.size):
        if hist[w] == 0 or D_B * w > cap:
            continue
        t = n + D_B * w
        if t < hist.size:
            total += int(hist[w]) * int(hist[t])
    return total


def quat_conj_count(n: int, delta: float, lam: float, theta: float, D_E: int = -19, D_B: int = 6,
                    slack: float = 1e-9) -> tuple[int, int]:
    """(strict, loose) counts of norm-n elements with u(h^-1 xi h) <= delta -/+ slack.

    Elements are 2x2 complex matrices [[a, D b], [conj b, conj a]]; conjugation is
    done by a numerical matrix inverse over a box large enough for lam^4 stretch.
    """
    w = (1 + np.sqrt(complex(D_E))) / 2 if D_E % 4 == 1 else np.sqrt(complex(D_E)) / 2
    big = lam**4 * n * (1 + 2 * delta) + 1
    R = int(math.ceil(math.sqrt(4 * big))) + 1
    r = np.arange(-R, R + 1)
    X, Y = (t.ravel() for t in np.meshgrid(r, r, indexing="ij"))
    nr = _norm_w(X, Y, D_E)
    vals = X + Y * w
    t = math.log(lam)
    e = complex(math.cos(theta), math.sin(theta))
    ha, hb = e * math.cosh(t), e * math.sinh(t) / math.sqrt(D_B)
    H = np.array([[ha, D_B * hb], [np.conj(hb), np.conj(ha)]])
    Hi = np.linalg.inv(H)
    order = np.argsort(nr, kind="stable")
    snr = nr[order]
    strict = loose = 0
    for ib in np.nonzero(D_B * nr <= big)[0]:
        need = n + D_B * int(nr[ib])
        lo, hi = np.searchsorted(snr, need, "left"), np.searchsorted(snr, need, "right")
        ia = order[lo:hi]
        if ia.size == 0:
            continue
        A = vals[ia]
        Bv = np.full(A.shape, vals[ib])
        M = np.empty((A.size, 2, 2), dtype=complex)
        M[:, 0, 0], M[:, 0, 1] = A, D_B * Bv
        M[:, 1, 0], M[:, 1, 1] = np.conj(Bv), np.conj(A)
        C = Hi @ M @ H
        u = D_B * np.abs(C[:, 0, 1] / D_B) ** 2 / n
        strict += int(np.count_nonzero(u <= delta - slack))
        loose += int(np.count_nonzero(u <= delta + slack))
    return strict, loose
