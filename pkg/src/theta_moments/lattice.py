"""Integer-matrix lattice points with fixed determinant inside u-balls.

Two enumeration engines live here:

* ``fincke_pohst`` walks the integer points of an ellipsoid ``v^T G v <= B``
  on Z^4 (Cholesky nested intervals, the two innermost levels vectorised).
  It backs ``enumerate_constrained`` and the single-pass ``count_profile``.
* ``fixed_det_sweep`` lists matrices of one determinant n whose point-pair
  invariant against a pair of points is below a radius. It scans bottom rows
  (c, d) and solves ad - bc = n along arithmetic progressions, so its cost is
  proportional to the output rather than to a 4-ball.

Boundary decisions for ``u <= delta`` are exact: the invariant is a rational
function of the (binary, hence rational) point coordinates, and candidates
whose floating value lies near the threshold are re-decided with Fractions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .halfplane import Point, as_mat2, as_point, det2, point_of

U_SLACK = 1e-12
_INT_LIMIT = 2**62


# ---------------------------------------------------------------- orders

@dataclass(frozen=True)
class OrderSpec:
    """M2(Z) (``kind="full"``) or the split Eichler order of level q.

    ``eichler_split`` means q | c; with ``transposed=True`` the condition is
    q | b instead (the image of the order under transposition).
    """

    kind: str = "full"
    q: int = 1
    transposed: bool = False

    def __post_init__(self):
        if self.kind not in ("full", "eichler_split"):
            raise ValueError(f"unknown order kind {self.kind!r}")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("level q must be a positive integer")
        if self.kind == "full" and self.q != 1:
            raise ValueError("the full order has level 1")

    @classmethod
    def full(cls) -> "OrderSpec":
        return cls("full", 1)

    @classmethod
    def eichler_split(cls, q: int) -> "OrderSpec":
        return cls("eichler_split", int(q)) if q > 1 else cls.full()

    @classmethod
    def parse(cls, text: str) -> "OrderSpec":
        text = text.strip()
        if text == "full":
            return cls.full()
        if text.startswith("eichler:"):
            return cls.eichler_split(int(text.split(":", 1)[1]))
        raise ValueError(f"order must be 'full' or 'eichler:q', got {text!r}")

    def transpose(self) -> "OrderSpec":
        if self.kind == "full":
            return self
        return OrderSpec(self.kind, self.q, not self.transposed)

    @property
    def level(self) -> int:
        return self.q

    def label(self) -> str:
        if self.kind == "full":
            return "full"
        return f"eichler:{self.q}" + (":T" if self.transposed else "")

    def basis(self) -> np.ndarray:
        """Columns express the order's Z-basis in (a, b, c, d) coordinates."""
        scale = [1, 1, 1, 1]
        if self.kind == "eichler_split":
            scale[1 if self.transposed else 2] = self.q
        return np.diag(scale).astype(np.int64)

    def contains(self, a, b, c, d) -> np.ndarray:
        a = np.asarray(a)
        if self.kind == "full":
            return np.ones(a.shape, dtype=bool)
        entry = np.asarray(b if self.transposed else c)
        return entry % self.q == 0


# ---------------------------------------------------------------- engine

def _ragged(lo: np.ndarray, hi: np.ndarray):
    """Expand inclusive integer intervals; returns (owner index, value)."""
    cnt = np.maximum(hi - lo + 1, 0)
    total = int(cnt.sum())
    owner = np.repeat(np.arange(lo.size), cnt)
    start = np.cumsum(cnt) - cnt
    offs = np.arange(total, dtype=np.int64) - np.repeat(start, cnt)
    return owner, lo[owner] + offs


def _check_int(x: float):
    if not math.isfinite(x) or abs(x) > _INT_LIMIT:
        raise OverflowError("enumeration interval exceeds 2^62; shrink the bound")


def fincke_pohst_chunks(gram, bound: float, threads: int = 1) -> Iterator[np.ndarray]:
    """Yield int64 arrays (k, 4) of all v in Z^4 with v^T G v <= bound.

    Chunks come out in increasing order of the last coordinate, so merging is
    deterministic whatever the thread count. A relative slack of 1e-10 is
    added so callers can apply their own exact filter afterwards.
    """
    G = np.asarray(gram, dtype=float)
    if G.shape != (4, 4):
        raise ValueError("Gram matrix must be 4x4")
    if bound < 0:
        return
    try:
        R = np.linalg.cholesky(G).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("Gram matrix is not positive definite") from exc
    q = np.diag(R) ** 2
    mu_ = R / np.diag(R)[:, None]
    B = bound * (1 + 1e-10) + 1e-12

    r3 = math.sqrt(B / q[3])
    _check_int(r3)
    v3_values = list(range(-math.floor(r3), math.floor(r3) + 1))

    def work(v3_list):
        out = []
        for v3 in v3_list:
            t3 = B - q[3] * v3 * v3
            if t3 < 0:
                continue
            c2 = -mu_[2, 3] * v3
            r2 = math.sqrt(t3 / q[2])
            _check_int(abs(c2) + r2)
            for v2 in range(math.ceil(c2 - r2), math.floor(c2 + r2) + 1):
                t2 = t3 - q[2] * (v2 - c2) ** 2
                if t2 < 0:
                    continue
                c1 = -(mu_[1, 2] * v2 + mu_[1, 3] * v3)
                r1 = math.sqrt(t2 / q[1])
                v1 = np.arange(math.ceil(c1 - r1), math.floor(c1 + r1) + 1, dtype=np.int64)
                if v1.size == 0:
                    continue
                t1 = t2 - q[1] * (v1 - c1) ** 2
                keep = t1 >= 0
                v1, t1 = v1[keep], t1[keep]
                c0 = -(mu_[0, 1] * v1 + mu_[0, 2] * v2 + mu_[0, 3] * v3)
                r0 = np.sqrt(t1 / q[0])
                lo = np.ceil(c0 - r0).astype(np.int64)
                hi = np.floor(c0 + r0).astype(np.int64)
                owner, v0 = _ragged(lo, hi)
                if v0.size == 0:
                    continue
                blk = np.empty((v0.size, 4), dtype=np.int64)
                blk[:, 0] = v0
                blk[:, 1] = v1[owner]
                blk[:, 2] = v2
                blk[:, 3] = v3
                out.append(blk)
        return np.concatenate(out) if out else np.empty((0, 4), dtype=np.int64)

    threads = max(1, int(threads))
    if threads == 1 or len(v3_values) < 2:
        for v3 in v3_values:
            blk = work([v3])
            if blk.size:
                yield blk
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for blk in pool.map(lambda v: work([v]), v3_values):
            if blk.size:
                yield blk


def _conjugation_map(L, R, order: OrderSpec) -> np.ndarray:
    """Matrix T with vec(L xi R) = T v for xi = basis . v (row-major vec)."""
    L, R = as_mat2(L), as_mat2(R)
    B = order.basis()
    cols = []
    for k in range(4):
        xi = B[:, k].reshape(2, 2).astype(float)
        cols.append((L @ xi @ R).reshape(4))
    return np.array(cols).T


def _to_matrices(order: OrderSpec, v: np.ndarray) -> np.ndarray:
    return (v @ order.basis().T).reshape(-1, 2, 2)


def enumerate_constrained(order: OrderSpec, L, R, bound: float, threads: int = 1) -> np.ndarray:
    """All xi in the order with ||L xi R||_F^2 <= bound, as an int64 array (k, 2, 2)."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    L, R = as_mat2(L), as_mat2(R)
    if abs(det2(L)) < 1e-300 or abs(det2(R)) < 1e-300:
        raise ValueError("L and R must be invertible")
    T = _conjugation_map(L, R, order)
    G = T.T @ T
    chunks = []
    for v in fincke_pohst_chunks(G, bound, threads):
        w = v.astype(float)
        val = np.einsum("ij,jk,ik->i", w, G, w)
        chunks.append(v[val <= bound * (1 + 1e-12)])
    v = np.concatenate(chunks) if chunks else np.empty((0, 4), dtype=np.int64)
    return _to_matrices(order, v)


# ---------------------------------------------------------------- u-ball tests

def _frac_point(z: Point):
    return Fraction(z.x), Fraction(z.y)


def u_exact(xi, z, w=None) -> Fraction:
    """u(g_z^-1 xi g_w) as an exact rational in the binary point coordinates.

    Uses |z(cw+d) - (aw+b)|^2 / (4 n Im z Im w) with n = det xi > 0.
    """
    z = as_point(z)
    w = z if w is None else as_point(w)
    (a, b), (c, d) = ((int(t) for t in row) for row in np.asarray(xi))
    n = a * d - b * c
    if n <= 0:
        raise ValueError("u_exact needs a matrix of positive determinant")
    x, y = _frac_point(z)
    s, t = _frac_point(w)
    re = x * (c * s + d) - y * c * t - a * s - b
    im = y * (c * s + d) + x * c * t - a * t
    return (re * re + im * im) / (4 * n * y * t)


def u_float(a, b, c, d, z: Point, w: Point) -> np.ndarray:
    a, b, c, d = (np.asarray(t, dtype=float) for t in (a, b, c, d))
    x, y, s, t = z.x, z.y, w.x, w.y
    n = a * d - b * c
    re = x * (c * s + d) - y * c * t - a * s - b
    im = y * (c * s + d) + x * c * t - a * t
    with np.errstate(divide="ignore", invalid="ignore"):
        return (re * re + im * im) / (4 * n * y * t)


def u_within(a, b, c, d, z: Point, w: Point, delta: float) -> np.ndarray:
    """Mask of u(g_z^-1 xi g_w) <= delta (1 + 1e-12), decided exactly near the boundary."""
    a, b, c, d = (np.asarray(t, dtype=np.int64) for t in (a, b, c, d))
    thr = delta * (1 + U_SLACK)
    uf = u_float(a, b, c, d, z, w)
    band = 1e-9 * (1.0 + thr)
    keep = uf <= thr - band
    unsure = np.nonzero(np.abs(uf - thr) <= band)[0]
    if unsure.size:
        thr_exact = Fraction(delta) * (1 + Fraction(1, 10**12))
        for i in unsure:
            xi = ((a[i], b[i]), (c[i], d[i]))
            keep[i] = u_exact(xi, z, w) <= thr_exact
    return keep


# ---------------------------------------------------------------- fixed determinant sweep

def _modinv_vec(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Inverse of x modulo m elementwise (gcd(x, m) = 1 assumed, m >= 1)."""
    old_r, r = x % m, m.copy()
    old_s, s = np.ones_like(x), np.zeros_like(x)
    while np.any(r != 0):
        nz = r != 0
        qt = np.zeros_like(r)
        qt[nz] = old_r[nz] // r[nz]
        old_r, r = np.where(nz, r, old_r), np.where(nz, old_r - qt * r, r)
        old_s, s = np.where(nz, s, old_s), np.where(nz, old_s - qt * s, s)
    return old_s % m


def _ball_ratio(umax: float) -> float:
    """Largest ratio of heights of two points at invariant distance <= umax."""
    t = 1.0 + 2.0 * umax
    return t + math.sqrt(t * t - 1.0)


def fixed_det_sweep(order: OrderSpec, n: int, z, w=None, umax: float = 0.0):
    """Matrices xi in the order with det xi = n and u(g_z^-1 xi g_w) <= umax (+ float slack).

    Returns int64 arrays (a, b, c, d) and the float u values. Candidates are
    kept with a relative slack of 1e-9 so that exact callers can re-decide.
    """
    if n < 1:
        raise ValueError("determinant must be a positive integer")
    if umax < 0:
        raise ValueError("radius must be non-negative")
    z = as_point(z)
    w = z if w is None else as_point(w)
    x, y, s, t = z.x, z.y, w.x, w.y
    U = umax * (1 + 1e-9) + 1e-12
    C = _ball_ratio(U)
    R2 = n * t * C / y                     # |cw + d|^2 <= R2
    rho = math.sqrt(4.0 * U * n * y * t)   # |z J - (aw + b)| <= rho
    eps = 1e-9

    parts = []
    # bottom rows with c = 0: then d | n and a = n / d
    for dd in [d for d in range(1, n + 1) if n % d == 0]:
        for d in (dd, -dd):
            a = n // d
            if d * d > R2 * (1 + eps):
                continue
            im = y * d - a * t
            rem = rho * rho - im * im
            if rem < -eps * rho * rho - 1e-12:
                continue
            half = math.sqrt(max(rem, 0.0))
            cen = x * d - a * s
            _check_int(abs(cen) + half)
            bs = np.arange(math.ceil(cen - half - eps), math.floor(cen + half + eps) + 1, dtype=np.int64)
            if bs.size:
                parts.append((np.full(bs.size, a), bs, np.zeros(bs.size, np.int64), np.full(bs.size, d)))

    cmax = math.floor(math.sqrt(R2) / t + eps)
    _check_int(cmax)
    step = order.q if (order.kind == "eichler_split" and not order.transposed) else 1
    cs = np.arange(step, cmax + 1, step, dtype=np.int64)
    cs = np.concatenate([-cs[::-1], cs])
    if cs.size:
        half_d = np.sqrt(np.maximum(R2 - (cs * t) ** 2, 0.0))
        lo = np.ceil(-cs * s - half_d - eps).astype(np.int64)
        hi = np.floor(-cs * s + half_d + eps).astype(np.int64)
        owner, dv = _ragged(lo, hi)
        cv = cs[owner]
        g = np.gcd(dv, np.abs(cv))
        ok = (n % g) == 0
        cv, dv, g = cv[ok], dv[ok], g[ok]
        mod = np.abs(cv) // g
        inv = _modinv_vec((dv // g) % mod, mod)
        res = ((n // g) % mod) * inv % mod
        # a * t must lie within rho of Im(z J)
        im_p0 = y * (cv * s + dv) + x * cv * t
        a_lo = np.ceil((im_p0 - rho) / t - eps).astype(np.int64)
        a_hi = np.floor((im_p0 + rho) / t + eps).astype(np.int64)
        first = a_lo + (res - a_lo) % mod
        count = np.where(first <= a_hi, (a_hi - first) // mod + 1, 0)
        owner2 = np.repeat(np.arange(cv.size), count)
        start = np.cumsum(count) - count
        k = np.arange(int(count.sum()), dtype=np.int64) - np.repeat(start, count)
        av = first[owner2] + k * mod[owner2]
        cv2, dv2 = cv[owner2], dv[owner2]
        num = av * dv2 - n
        bv = num // cv2
        parts.append((av, bv, cv2, dv2))

    if parts:
        a, b, c, d = (np.concatenate([p[i] for p in parts]) for i in range(4))
    else:
        a = b = c = d = np.empty(0, dtype=np.int64)
    keep = order.contains(a, b, c, d)
    a, b, c, d = a[keep], b[keep], c[keep], d[keep]
    u = u_float(a, b, c, d, z, w)
    keep = u <= U * (1 + 1e-9) + 1e-12
    return a[keep], b[keep], c[keep], d[keep], u[keep]


# ---------------------------------------------------------------- counting

@dataclass(frozen=True)
class CountQuery:
    order: OrderSpec
    g: tuple
    n: int
    delta: float

    def __post_init__(self):
        g = as_mat2(self.g)
        if abs(det2(g) - 1.0) > 1e-12:
            raise ValueError("g must have determinant 1")
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")
        object.__setattr__(self, "g", tuple(map(tuple, g.tolist())))

    @property
    def point(self) -> Point:
        return _point_from(self.g)


@dataclass(frozen=True)
class CountProfile:
    order: OrderSpec
    g: tuple
    delta: float
    N: int
    counts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.counts) != self.N:
            raise ValueError("profile length must equal its horizon")

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


def _snap(v: float) -> float:
    # matrix round trips leave a few ulps of noise on rational coordinates
    r = float(Fraction(v).limit_denominator(1000))
    return r if abs(r - v) <= 8 * math.ulp(max(abs(v), 1.0)) else v


def _point_from(g) -> Point:
    if isinstance(g, (Point, str, complex)):
        return as_point(g)
    z = point_of(g)
    return Point(_snap(z.x), _snap(z.y))


def count_norm_ball(query: CountQuery) -> int:
    """#{xi in order : det xi = n, u(g^-1 xi g) <= delta (1 + 1e-12)}."""
    z = query.point
    a, b, c, d, _ = fixed_det_sweep(query.order, query.n, z, z, query.delta)
    return int(np.count_nonzero(u_within(a, b, c, d, z, z, query.delta)))


def _profile_gram(order: OrderSpec, z: Point, N: int, delta: float):
    """Ellipsoid containing {u(g_z^-1 xi g_z) <= delta, 0 < det xi <= N}.

    With h = g_z^-1 xi g_z, s1 = (h11-h22)^2 + (h12+h21)^2 and
    s2 = (h11+h22)^2 + (h12-h21)^2 one has s2 - s1 = 4 det h and
    u(h) <= delta iff s1 <= 4 delta det h. The form K s1 + s2 with
    K = (1+delta)/delta is bounded by 8 N (1 + delta) on the target set.
    """
    d_eff = max(delta, 1.0 / (4.0 * N))
    K = (1.0 + d_eff) / d_eff
    g = np.array([[math.sqrt(z.y), z.x / math.sqrt(z.y)], [0.0, 1.0 / math.sqrt(z.y)]])
    ginv = np.array([[g[1, 1], -g[0, 1]], [0.0, g[0, 0]]])
    T = _conjugation_map(ginv, g, order)  # rows: h11, h12, h21, h22
    l1 = T[0] - T[3]
    l2 = T[1] + T[2]
    l3 = T[0] + T[3]
    l4 = T[1] - T[2]
    G = K * (np.outer(l1, l1) + np.outer(l2, l2)) + np.outer(l3, l3) + np.outer(l4, l4)
    bound = 4.0 * d_eff * N * K + 4.0 * N * (1.0 + d_eff)
    return G, bound


def count_profile(order: OrderSpec, g, N: int, delta: float, threads: int = 1, method: str = "auto") -> CountProfile:
    """Counts M(g, n; delta) for n = 1..N.

    ``method="ellipsoid"`` does one enumeration over det in [1, N] and buckets
    by determinant; ``method="sweep"`` runs the fixed-determinant sweep per n,
    which is cheaper for large delta. ``auto`` picks the ellipsoid when
    delta <= 1.
    """
    if N < 1:
        raise ValueError("horizon N must be at least 1")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    z = _point_from(g)
    gm = np.array([[math.sqrt(z.y), z.x / math.sqrt(z.y)], [0.0, 1.0 / math.sqrt(z.y)]])
    if method == "auto":
        method = "ellipsoid" if delta <= 1.0 else "sweep"
    counts = np.zeros(N + 1, dtype=np.int64)
    if method == "ellipsoid":
        G, bound = _profile_gram(order, z, N, delta)
        basis = order.basis()
        for v in fincke_pohst_chunks(G, bound, threads):
            a, b, c, d = (v @ basis.T).T
            det = a * d - b * c
            sel = (det >= 1) & (det <= N)
            a, b, c, d, det = a[sel], b[sel], c[sel], d[sel], det[sel]
            keep = u_within(a, b, c, d, z, z, delta)
            counts += np.bincount(det[keep], minlength=N + 1)
    elif method == "sweep":
        def one(n):
            a, b, c, d, _ = fixed_det_sweep(order, n, z, z, delta)
            return int(np.count_nonzero(u_within(a, b, c, d, z, z, delta)))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                vals = list(pool.map(one, range(1, N + 1)))
        else:
            vals = [one(n) for n in range(1, N + 1)]
        counts[1:] = vals
    else:
        raise ValueError(f"unknown method {method!r}")
    return CountProfile(order, tuple(map(tuple, gm.tolist())), float(delta), int(N), tuple(int(c) for c in counts[1:]))


def u_values(order: OrderSpec, g, n: int, umax: float) -> np.ndarray:
    """Sorted exact-enough u values of all det-n lattice points within radius umax.

    Boundary points are included per the same slack as ``count_norm_ball``.
    """
    z = _point_from(g)
    a, b, c, d, u = fixed_det_sweep(order, n, z, z, umax)
    keep = u_within(a, b, c, d, z, z, umax)
    return np.sort(u[keep])


# ---------------------------------------------------------------- moments and bounds

def second_moment(profile, weighting: str = "uniform", A: float = 1.0) -> float:
    """Sum of w_n M_n^2 with w_n = 1, 1/n or exp(-n/A)/n."""
    counts = np.asarray(profile.counts if isinstance(profile, CountProfile) else profile, dtype=float)
    if counts.size == 0:
        raise ValueError("profile is empty")
    n = np.arange(1, counts.size + 1, dtype=float)
    if weighting == "uniform":
        w = np.ones_like(n)
    elif weighting == "reciprocal":
        w = 1.0 / n
    elif weighting == "exp_tail":
        if A <= 0:
            raise ValueError("A must be positive")
        w = np.exp(-n / A) / n
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return math.fsum(w * counts * counts)


def split_bound_rhs(N: float, delta: float, y: float, eps: float = 0.0) -> float:
    """N^(3+eps) delta^2 + N + N^(1/2+eps) min(N^(1/2), (N delta)^(1/2) + 1) (y^2 N delta + 1)."""
    if N < 1 or delta < 0 or y <= 0:
        raise ValueError("need N >= 1, delta >= 0, y > 0")
    return (N ** (3 + eps) * delta**2 + N
            + N ** (0.5 + eps) * min(math.sqrt(N), math.sqrt(N * delta) + 1) * (y * y * N * delta + 1))
