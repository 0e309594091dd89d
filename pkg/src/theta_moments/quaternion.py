"""Norm and u-ball counts in an order of a definite-at-E quaternion algebra.

Elements are pairs (a, b) of integers of an imaginary quadratic field E,
standing for the matrix [[a, D_B b], [sigma b, sigma a]] with sigma complex
conjugation.  Then Nr = Nr a - D_B Nr b and, for the K_E-adapted base point,
u = D_B Nr b / |Nr|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_CANDIDATES = 10**9
BOUNDARY_SLACK = 1e-12


def _is_fundamental(D: int) -> bool:
    if D >= 0:
        return False
    if D % 4 == 1:
        return _squarefree(-D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(-m)
    return False


def _squarefree(n: int) -> bool:
    return all(n % (d * d) for d in range(2, math.isqrt(n) + 1))


@dataclass(frozen=True)
class ImagQuadField:
    """Q(sqrt D) for a negative fundamental discriminant D, with Z-basis (1, w) of O_E."""

    D: int

    def __post_init__(self):
        if not _is_fundamental(self.D):
            raise ValueError(f"{self.D} is not a negative fundamental discriminant")

    @property
    def trace_w(self) -> int:
        return 1 if self.D % 4 == 1 else 0

    @property
    def norm_w(self) -> int:
        return (1 - self.D) // 4 if self.D % 4 == 1 else -self.D // 4

    def norm(self, x: int, y: int) -> int:
        """Nr(x + y w) = x^2 + T x y + S y^2."""
        return x * x + self.trace_w * x * y + self.norm_w * y * y

    def norm_array(self, x, y):
        return x * x + self.trace_w * x * y + self.norm_w * y * y

    def w_complex(self) -> complex:
        return complex(self.trace_w / 2.0, math.sqrt(4 * self.norm_w - self.trace_w**2) / 2.0)

    def to_complex(self, x, y):
        return x + y * self.w_complex()

    def mul(self, u, v):
        """(x1 + y1 w)(x2 + y2 w) with w^2 = T w - S."""
        (x1, y1), (x2, y2) = u, v
        T, S = self.trace_w, self.norm_w
        return (x1 * x2 - S * y1 * y2, x1 * y2 + y1 * x2 + T * y1 * y2)

    def conj(self, u):
        x, y = u
        return (x + self.trace_w * y, -y)

    def representations(self, m: int):
        """All (x, y) with Nr(x + y w) = m, by solving the quadratic in x for each y."""
        if m < 0:
            return []
        if m == 0:
            return [(0, 0)]
        T, S = self.trace_w, self.norm_w
        disc_y = 4 * S - T * T  # = |D|
        ymax = math.isqrt(4 * m // disc_y) + 1
        out = []
        for y in range(-ymax, ymax + 1):
            # x^2 + T y x + (S y^2 - m) = 0
            disc = T * T * y * y - 4 * (S * y * y - m)
            if disc < 0:
                continue
            r = math.isqrt(disc)
            if r * r != disc:
                continue
            for s in {r, -r}:
                num = -T * y + s
                if num % 2 == 0:
                    out.append((num // 2, y))
        return sorted(set(out))

    def count_representations(self, m: int) -> int:
        return len(self.representations(m))


@dataclass(frozen=True)
class DivisionOrderModel:
    """O_E + j O_E with j^2 = D_B (``simple``), or the larger ``different`` lattice.

    The ``different`` lattice takes a, b in the inverse different (1/sqrt D_E) O_E
    with a + b in O_E.
    """

    field: ImagQuadField
    D_B: int
    lattice: str = "simple"

    def __post_init__(self):
        if self.D_B < 1 or not _squarefree(self.D_B):
            raise ValueError("D_B must be a positive squarefree integer")
        if self.lattice not in ("simple", "different"):
            raise ValueError("lattice must be 'simple' or 'different'")

    @classmethod
    def default(cls, lattice: str = "simple") -> "DivisionOrderModel":
        return cls(ImagQuadField(-19), 6, lattice)

    def mul(self, xi, eta):
        """(a, b)(a', b') = (a a' + D_B b conj(b'), a b' + b conj(a')) on O_E coordinates."""
        F = self.field
        (a, b), (a2, b2) = xi, eta
        s1 = F.mul(a, a2)
        s2 = F.mul(b, F.conj(b2))
        t1 = F.mul(a, b2)
        t2 = F.mul(b, F.conj(a2))
        return ((s1[0] + self.D_B * s2[0], s1[1] + self.D_B * s2[1]), (t1[0] + t2[0], t1[1] + t2[1]))


@dataclass(frozen=True)
class CartanParams:
    """gh = k_theta a_lambda (the right K_E factor does not affect u)."""

    lam: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 1.0):
            raise ValueError("lambda must be a finite real >= 1")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")

    @property
    def identity(self) -> bool:
        return self.lam == 1.0


def quat_norm(a, b, D_B: int, field: ImagQuadField | None = None) -> int:
    """Nr a - D_B Nr b for a, b given as (x, y) coordinates in O_E."""
    field = field or ImagQuadField(-19)
    return field.norm(*a) - D_B * field.norm(*b)


def quat_u(a, b, D_B: int, field: ImagQuadField | None = None) -> Fraction:
    """D_B Nr b / |Nr a - D_B Nr b| exactly."""
    field = field or ImagQuadField(-19)
    n = quat_norm(a, b, D_B, field)
    if n == 0:
        raise ValueError("u is undefined for elements of norm zero")
    return Fraction(D_B * field.norm(*b), abs(n))


def _ellipse_points(field: ImagQuadField, bound):
    """All (x, y) with Nr(x + y w) <= bound."""
    if bound < 0:
        return np.zeros((0, 2), dtype=np.int64)
    T, S = field.trace_w, field.norm_w
    disc = 4 * S - T * T
    ymax = int(math.isqrt(int(4 * bound // disc) + 1)) + 1
    ys = np.arange(-ymax, ymax + 1)
    pts = []
    for y in ys:
        rest = 4 * bound - disc * int(y) * int(y)  # (2x + T y)^2 <= rest
        if rest < 0:
            continue
        r = math.isqrt(int(rest)) + 1
        lo = math.floor((-r - T * int(y)) / 2) - 1
        hi = math.ceil((r - T * int(y)) / 2) + 1
        xs = np.arange(lo, hi + 1)
        keep = field.norm_array(xs, int(y)) <= bound
        xs = xs[keep]
        pts.append(np.stack([xs, np.full(xs.shape, y)], axis=1))
    return np.concatenate(pts) if pts else np.zeros((0, 2), dtype=np.int64)


def _scaled_ok(delta, n: int) -> Fraction:
    return Fraction(delta) * n


def count_quat(model: DivisionOrderModel, cartan: CartanParams, n: int, delta: float) -> int:
    """#{xi : Nr xi = n, u((gh)^-1 xi gh) <= delta}."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (delta >= 0):
        raise ValueError("delta must be non-negative")
    if model.lattice == "different":
        return len(_different_elements(model, cartan, n, delta))
    if cartan.identity:
        return _count_identity(model, n, delta)
    return len(enumerate_quat(model, cartan, n, delta))


def _count_identity(model: DivisionOrderModel, n: int, delta) -> int:
    F, D = model.field, model.D_B
    cap = _scaled_ok(delta, n)  # D_B Nr b <= delta n, exactly
    bmax = cap / D
    total = 0
    for x, y in _ellipse_points(F, int(math.floor(bmax))):
        nb = F.norm(int(x), int(y))
        if D * nb <= cap:
            total += F.count_representations(n + D * nb)
    return total


def _conj_u(model: DivisionOrderModel, cartan: CartanParams, A: np.ndarray, B: np.ndarray, n: int) -> np.ndarray:
    """u((gh)^-1 xi gh) for complex coordinate arrays A, B of elements with norm n."""
    D = model.D_B
    t = math.log(cartan.lam)
    # h = k_theta a_t with k_theta = (e^{i theta}, 0), a_t = (cosh t, sinh t / sqrt D)
    ha = complex(math.cos(cartan.theta), math.sin(cartan.theta)) * math.cosh(t)
    hb = complex(math.cos(cartan.theta), math.sin(cartan.theta)) * math.sinh(t) / math.sqrt(D)
    # h^-1 = (conj(ha), -hb); product (a,b)(a',b') = (a a' + D b conj(b'), a b' + b conj(a'))
    ia, ib = np.conj(ha), -hb
    a1 = ia * A + D * ib * np.conj(B)
    b1 = ia * B + ib * np.conj(A)
    b2 = a1 * hb + b1 * np.conj(ha)
    return D * np.abs(b2) ** 2 / abs(n)


def enumerate_quat(model: DivisionOrderModel, cartan: CartanParams, n: int, delta: float):
    """Elements (a, b) in O_E coordinates with Nr = n and conjugated u <= delta (float filter with slack)."""
    F, D = model.field, model.D_B
    big = cartan.lam**4 * n * (1 + 2 * delta)  # conjugation by h stretches the Frobenius norm by at most lam^2
    bs = _ellipse_points(F, math.floor(big / D) if D else 0)
    if len(bs) * max(1, int(big)) > MAX_CANDIDATES:
        raise ValueError("candidate box exceeds 10^9 elements")
    out = []
    for x, y in bs:
        nb = F.norm(int(x), int(y))
        if n + D * nb + D * nb > big + 1e-9 * big:
            continue
        for a in F.representations(n + D * nb):
            out.append((a, (int(x), int(y))))
    if not out:
        return []
    A = np.array([F.to_complex(*a) for a, _ in out])
    B = np.array([F.to_complex(*b) for _, b in out])
    u = _conj_u(model, cartan, A, B, n)
    keep = u <= delta * (1 + BOUNDARY_SLACK) + BOUNDARY_SLACK
    return [e for e, k in zip(out, keep) if k]


def _different_elements(model: DivisionOrderModel, cartan: CartanParams, n: int, delta):
    """Elements of the inverse-different lattice: a = alpha/sqrt(D_E), b = beta/sqrt(D_E), alpha + beta in sqrt(D_E) O_E.

    Norms scale by 1/|D_E|, so Nr xi = n means Nr alpha - D_B Nr beta = n |D_E|.
    """
    F, D = model.field, model.D_B
    dE = -F.D
    big = cartan.lam**4 * n * (1 + 2 * delta) * dE
    bs = _ellipse_points(F, math.floor(big / D))
    sq = (-1, 2) if F.D % 4 == 1 else (0, 2)  # sqrt(D_E) = 2w - 1 or 2w as (x, y)
    out = []
    for x, y in bs:
        nb = F.norm(int(x), int(y))
        if dE * n + 2 * D * nb > big * (1 + 1e-9):
            continue
        for al in F.representations(dE * n + D * nb):
            s = (al[0] + int(x), al[1] + int(y))
            # s in sqrt(D_E) O_E  <=>  s * sqrt(D_E) in D_E O_E
            prod = F.mul(s, sq)
            if prod[0] % dE == 0 and prod[1] % dE == 0:
                out.append((al, (int(x), int(y))))
    if not out:
        return []
    root = complex(0.0, math.sqrt(dE))
    A = np.array([F.to_complex(*a) for a, _ in out]) / root
    B = np.array([F.to_complex(*b) for _, b in out]) / root
    if cartan.identity:
        nbs = np.array([F.norm(*b) for _, b in out])
        keep = [Fraction(D * int(v), dE) <= _scaled_ok(delta, n) for v in nbs]
    else:
        u = _conj_u(model, cartan, A, B, n)
        keep = u <= delta * (1 + BOUNDARY_SLACK) + BOUNDARY_SLACK
    return [e for e, k in zip(out, keep) if k]


def quat_profile(model: DivisionOrderModel, cartan: CartanParams, N: int, delta: float) -> list:
    return [count_quat(model, cartan, n, delta) for n in range(1, N + 1)]


def division_pointwise_bound(n: int, delta: float, lam: float, eps: float = 0.0) -> float:
    """((lambda + 1/lambda) n)^(1+eps) delta, the delta >= 1 bound, constant 1."""
    return ((lam + 1.0 / lam) * n) ** (1 + eps) * delta


def division_bound_rhs(N: int, delta: float, lam: float, D_E: int, eps: float = 0.0) -> float:
    """Right-hand side of the division-algebra second-moment bound with constant 1.

    For delta < 1 the displayed bracket; for delta >= 1 the sum over n <= N of
    the squared pointwise bound.
    """
    if N < 1 or delta < 0 or lam <= 0:
        raise ValueError("need N >= 1, delta >= 0 and lambda > 0")
    L = lam + 1.0 / lam
    if delta < 1:
        return abs(D_E) ** (2 + eps) * N**eps * (N**3 * delta**2 + L ** (2 + eps) * (N**2.5 * delta**1.5 + N))
    return math.fsum(division_pointwise_bound(n, delta, lam, eps) ** 2 for n in range(1, N + 1))
