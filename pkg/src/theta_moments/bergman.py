"""Geometric kernel sums, theta coefficients and the two bound evaluators.

The kernel sum S(n; z, w) adds mu(g_z^-1 xi g_w)^m over lattice points of
determinant n. Summands have modulus (1 + u)^(-m/2) and the number of points
with u <= U grows like 24 sigma(n) U, so truncating at radius U leaves a tail
of about 24 sigma(n) (1 + U)^(1 - m/2) / (m/2 - 1). The radius is chosen so
that twice this estimate is below the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from .halfplane import SQRT3_2, Point, as_point, point_matrix
from .lattice import OrderSpec, fixed_det_sweep, u_values
from .modular import (DIM_ONE_WEIGHTS, QExpansion, delta_coefficients, eval_modular,
                      level1_cusp_form, petersson_norm, required_terms, slash,
                      strip_parseval)

TAIL_SAFETY = 2.0


class NodeError(ValueError):
    """The normalising kernel value is too small to divide by."""


def _sigma1(n: int) -> int:
    return sum(d for d in range(1, n + 1) if n % d == 0)


@dataclass(frozen=True)
class KernelSumParams:
    m: int
    tol: float = 1e-10

    def __post_init__(self):
        if self.m <= 4:
            raise ValueError("kernel sums diverge for m <= 4")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    def tail_estimate(self, n: int, u_max: float) -> float:
        e = self.m / 2.0 - 1.0
        return TAIL_SAFETY * 24.0 * _sigma1(n) * (1.0 + u_max) ** (-e) / e

    def u_max(self, n: int) -> float:
        e = self.m / 2.0 - 1.0
        base = TAIL_SAFETY * 24.0 * _sigma1(n) / (e * self.tol)
        return max(base ** (1.0 / e) - 1.0, 1.0)


def _as_params(p, m=None) -> KernelSumParams:
    if isinstance(p, KernelSumParams):
        return p
    if p is None:
        return KernelSumParams(m)
    return KernelSumParams(m, float(p))


def kernel_terms(n: int, z, w, m: int, u_max: float, order: OrderSpec | None = None) -> np.ndarray:
    """The individual summands mu(g_z^-1 xi g_w)^m for det xi = n, u <= u_max."""
    order = order or OrderSpec.full()
    z, w = as_point(z), as_point(w)
    a, b, c, d, _ = fixed_det_sweep(order, n, z, w, u_max)
    gz_inv = np.linalg.inv(point_matrix(z))
    gw = point_matrix(w)
    xi = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2).astype(float)
    h = gz_inv @ xi @ gw
    den = (h[:, 0, 1] - h[:, 1, 0]) + 1j * (h[:, 0, 0] + h[:, 1, 1])
    mu = 2j * math.sqrt(n) / den
    return mu**m


def kernel_sum(n: int, z, w, p: KernelSumParams | float | None = None, order: OrderSpec | None = None,
               m: int | None = None) -> complex:
    """S(n; z, w) truncated at the radius implied by the tolerance."""
    if m is None and not isinstance(p, KernelSumParams):
        raise ValueError("pass KernelSumParams or the weight m")
    params = _as_params(p, m)
    if n < 1:
        raise ValueError("n must be a positive integer")
    terms = kernel_terms(n, z, w, params.m, params.u_max(n), order)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def hecke_ratio(n: int, m: int, z, w, tol: float = 1e-11, order: OrderSpec | None = None) -> complex:
    """kappa(n) = S(n; z, w) / S(1; z, w)."""
    if m not in DIM_ONE_WEIGHTS:
        raise ValueError(f"Hecke ratios are eigenvalues only for one-dimensional spaces {DIM_ONE_WEIGHTS}")
    p = KernelSumParams(m, tol)
    s1 = kernel_sum(1, z, w, p, order)
    if abs(s1) < 1e3 * tol:
        raise NodeError("kernel at n=1 vanishes here (node of the form); move the point")
    return kernel_sum(n, z, w, p, order) / s1


def predicted_hecke_ratio(n: int, m: int) -> Fraction:
    """a(n) / n^(m/2-1) from the q-expansion, as an exact fraction."""
    a = level1_cusp_form(m, n).coeffs[n - 1]
    return Fraction(a, n ** (m // 2 - 1))


def theta_coefficient(n: int, z, w, m: int, tol: float = 1e-11, order: OrderSpec | None = None) -> complex:
    """n^(m/2-1) S(n; z, w)."""
    return n ** (m / 2.0 - 1.0) * kernel_sum(n, z, w, KernelSumParams(m, tol), order)


def horocycle_l2_from_coeffs(coeffs, tau2: float) -> float:
    """sum_n |theta(n)|^2 e^(-4 pi n tau2) for coefficients theta(1), theta(2), ..."""
    if not tau2 > 0:
        raise ValueError("tau2 must be positive")
    c = np.asarray(coeffs, dtype=complex)
    n = np.arange(1, c.size + 1)
    return math.fsum(np.abs(c) ** 2 * np.exp(-4 * np.pi * n * tau2))


def theta_horocycle_l2(z, m: int, tau2: float, N: int, tol: float = 1e-11) -> float:
    """Parseval value sum_{n<=N} n^(m-2) |S(n; z, z)|^2 e^(-4 pi n tau2).

    Raises if the (N+1)-th term is not below 1e-14 of the sum.
    """
    coeffs = [theta_coefficient(n, z, z, m, tol) for n in range(1, N + 2)]
    total = horocycle_l2_from_coeffs(coeffs[:N], tau2)
    nxt = abs(coeffs[N]) ** 2 * math.exp(-4 * math.pi * (N + 1) * tau2)
    if nxt >= 1e-14 * total:
        raise ValueError(f"N={N} too small: next term {nxt:.3e} vs sum {total:.3e}")
    return total


def elementary_theta_coeffs(f: QExpansion, z, N: int) -> list:
    """c(n) = n^(m/2-1) sum_{ad=n, 0<=b<d} (f|_m [[a,b],[0,d]])(z) for n = 1..N."""
    z = as_point(z)
    out = []
    for n in range(1, N + 1):
        acc = 0j
        for d in range(1, n + 1):
            if n % d:
                continue
            a = n // d
            for b in range(d):
                acc += slash(f, ((a, b), (0, d)), z)
        out.append(n ** (f.m / 2.0 - 1.0) * acc)
    return out


# ---------------------------------------------------------------- bounds

def bergman_constant_ratio(z, m: int = 12, convention: str = "hyperbolic", tol: float = 1e-10) -> float:
    """S(1; z, z) <f, f> / ((8 pi/(m-1)) y^m |f(z)|^2); equals 1 for the right convention."""
    z = as_point(z)
    f = level1_cusp_form(m, 80)
    s1 = kernel_sum(1, z, z, KernelSumParams(m, tol))
    fz = eval_modular(f, z)
    norm = petersson_norm(f, convention)
    return (s1.real * norm) / ((8 * math.pi / (m - 1)) * z.y**m * abs(fz) ** 2)


def strip_norm(f: QExpansion, y0: float = SQRT3_2) -> float:
    """sum |a(n)|^2 int_{y0}^inf y^(m-2) e^(-4 pi n y) dy."""
    return strip_parseval(f, y0)


def spectral_lower_bound(z, m: int, convention: str = "hyperbolic", f: QExpansion | None = None) -> float:
    """(8 pi/(m-1))^2 y^(2m) ||f_M||^2 |f(z)|^4 / <f, f>^2 for the dimension-one weights.

    ||f_M||^2 is the strip integral over y >= sqrt(3)/2 of the arithmetically
    normalised form, so the value does not depend on how f is scaled.
    """
    z = as_point(z)
    if f is None:
        if m not in DIM_ONE_WEIGHTS:
            raise ValueError(f"m must be one of {DIM_ONE_WEIGHTS}")
        f = level1_cusp_form(m, max(80, required_terms(m, SQRT3_2)))
    fz = eval_modular(f, z)
    # the lift is arithmetically normalised (a(1) = 1) whatever the scaling of f
    lift = strip_norm(f) / abs(complex(f.coeffs[0])) ** 2
    log_val = (2 * math.log(8 * math.pi / (m - 1)) + 2 * m * math.log(z.y) + math.log(lift)
               + 4 * math.log(abs(fz)) - 2 * math.log(petersson_norm(f, convention)))
    return math.exp(log_val)


@dataclass(frozen=True)
class ProfileGrid:
    """Counts M(n; delta_k) on an increasing grid delta_0 = 0 < ... < delta_K.

    ``counts[k, n-1]`` is the count at delta_k; counts are step functions,
    constant on [delta_k, delta_{k+1}).
    """

    deltas: tuple
    counts: tuple

    def arrays(self):
        return np.asarray(self.deltas, dtype=float), np.asarray(self.counts, dtype=float)


@dataclass(frozen=True)
class EventProfile:
    """Exact step functions: the sorted u-values where some M(n; .) jumps."""

    u: np.ndarray
    n: np.ndarray
    N: int
    delta_max: float


def event_profile(order: OrderSpec, z, N: int, delta_max: float) -> EventProfile:
    """All jumps of delta -> M(z, n; delta) for n <= N and delta <= delta_max."""
    us, ns = [], []
    for n in range(1, N + 1):
        u = u_values(order, z, n, delta_max)
        us.append(u)
        ns.append(np.full(u.size, n, dtype=np.int64))
    u = np.concatenate(us)
    n = np.concatenate(ns)
    idx = np.lexsort((n, u))
    return EventProfile(u[idx], n[idx], int(N), float(delta_max))


def _weights(N: int, A: float, m: int):
    n = np.arange(1, N + 1, dtype=float)
    head = n <= A * m
    w1 = np.where(head, 1.0 / n, 0.0)
    w2 = np.where(head, 0.0, np.exp(-n / A) / n)
    return w1, w2


def _step_integral(breaks: np.ndarray, F: np.ndarray, delta_max: float, m: int) -> float:
    """(m/2) int_0^delta_max F(delta) (1+delta)^(-m/2-1) d delta for a step function F."""
    edges = np.append(breaks, delta_max)
    mass = (1.0 + edges[:-1]) ** (-m / 2.0) - (1.0 + edges[1:]) ** (-m / 2.0)
    return math.fsum(F * mass)


def _check_cover(delta_max: float, m: int):
    if (1.0 + delta_max) ** (-m / 2.0) >= 1e-12:
        raise ValueError("delta grid must reach delta* with (1+delta*)^(-m/2) < 1e-12")


def delta_star(m: int) -> float:
    """Smallest grid end accepted by the geometric bound: (1+delta*)^(-m/2) = 1e-12 (rounded up)."""
    return 10.0 ** (24.0 / m) * (1 + 1e-9) - 1.0


def _bound_from_integral(integral: float, m: int, level: int) -> float:
    if integral <= 0:
        return 0.0
    log_pref = math.log(level) + special.gammaln(m - 1) - m * math.log(4 * math.pi)
    return math.exp(log_pref + 2 * math.log(integral))


def geometric_upper_bound(z, m: int, q: int, D_B: int, profiles) -> float:
    """(qD_B) Gamma(m-1)/(4 pi)^m {(m/2) int F(delta) d delta/(1+delta)^(m/2+1)}^2.

    F(delta) = [sum_{n <= A m} M^2/n]^(1/2) + [sum_{n > A m} e^(-n/A) M^2/n]^(1/2)
    with A = (q D_B)^2. ``profiles`` is a ProfileGrid or an EventProfile.
    """
    A = float(q * D_B) ** 2
    if isinstance(profiles, EventProfile):
        _check_cover(profiles.delta_max, m)
        w1, w2 = _weights(profiles.N, A, m)
        n = profiles.n
        if n.size == 0:
            return 0.0
        # rank of each event within its n gives the count before the jump
        order = np.lexsort((profiles.u, n))
        rank = np.empty(n.size, dtype=np.int64)
        sorted_n = n[order]
        starts = np.searchsorted(sorted_n, sorted_n, side="left")
        rank[order] = np.arange(n.size) - starts
        inc = 2.0 * rank + 1.0
        s1 = np.cumsum(inc * w1[n - 1])
        s2 = np.cumsum(inc * w2[n - 1])
        F = np.sqrt(s1) + np.sqrt(s2)
        u = profiles.u
        last = np.append(u[1:] != u[:-1], True)  # value after all jumps at the same u
        breaks, F = u[last], F[last]
        # F vanishes before the first jump, so the integral starts at breaks[0]
        integral = _step_integral(breaks, F, profiles.delta_max, m)
        return _bound_from_integral(integral, m, q * D_B)
    deltas, counts = profiles.arrays()
    if deltas.size == 0 or deltas[0] != 0:
        raise ValueError("grid must start at delta = 0")
    _check_cover(deltas[-1], m)
    w1, w2 = _weights(counts.shape[1], A, m)
    sq = counts * counts
    F = np.sqrt(sq @ w1) + np.sqrt(sq @ w2)
    integral = _step_integral(deltas[:-1], F[:-1], deltas[-1], m)
    return _bound_from_integral(integral, m, q * D_B)


def geometric_upper_bound_at(z, m: int, q: int = 1, D_B: int = 1, N: int | None = None) -> float:
    """Geometric bound from exact count step functions of the level-q split order."""
    A = (q * D_B) ** 2
    if D_B != 1:
        raise ValueError("only split orders (D_B = 1) are enumerated by lattice-count")
    N = N or int(math.ceil(A * (m + 18)))
    order = OrderSpec.eichler_split(q)
    ev = event_profile(order, as_point(z), N, delta_star(m))
    return geometric_upper_bound(z, m, q, D_B, ev)


def tau_over(n: int, m: int = 12) -> str:
    """a(n)/n^(m/2-1) written as an unreduced fraction string."""
    a = level1_cusp_form(m, n).coeffs[n - 1] if m != 12 else delta_coefficients(n)[n - 1]
    return f"{a}/{n ** (m // 2 - 1)}"
