"""Level-one q-expansions, evaluation and Petersson norms.

These are the spectral-side oracles: exact integer coefficients from product
formulas, evaluation anywhere in the half-plane through SL2(Z) reduction, and
Petersson norms by quadrature over the standard fundamental domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .halfplane import SQRT3_2, as_point, reduce_to_fundamental

DIM_ONE_WEIGHTS = (12, 16, 18, 20, 22, 26)
FUNDAMENTAL_COVOLUME = math.pi / 3.0


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QExpansion:
    """Fourier coefficients a(1..N) of a weight-m cusp form of the given level."""

    m: int
    coeffs: tuple
    level: int = 1
    normalization: str = "arithmetic"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("weight must be at least 2")
        if len(self.coeffs) == 0:
            raise ValueError("need at least one coefficient")

    @property
    def N(self) -> int:
        return len(self.coeffs)

    def scaled(self, c) -> "QExpansion":
        return QExpansion(self.m, tuple(c * a for a in self.coeffs), self.level, "scaled")

    def array(self) -> np.ndarray:
        return np.array([complex(a) for a in self.coeffs])


def _poly_mul(p, q, N):
    out = [0] * (N + 1)
    for i, a in enumerate(p):
        if a:
            for j in range(N + 1 - i):
                if q[j]:
                    out[i + j] += a * q[j]
    return out


def _poly_pow(p, e, N):
    result = [1] + [0] * N
    base = list(p)
    while e:
        if e & 1:
            result = _poly_mul(result, base, N)
        e >>= 1
        if e:
            base = _poly_mul(base, base, N)
    return result


def _euler_product(N: int) -> list:
    """prod_{k>=1} (1 - q^k) to order q^N via pentagonal numbers."""
    out = [0] * (N + 1)
    k = 0
    while True:
        found = False
        for kk in ((k, ) if k == 0 else (k, -k)):
            e = kk * (3 * kk - 1) // 2
            if e <= N:
                out[e] += -1 if kk % 2 else 1
                found = True
        if not found and k > 0:
            break
        k += 1
    return out


def delta_coefficients(N: int) -> list:
    """tau(1..N) from q prod (1 - q^n)^24, as exact integers."""
    if N < 1:
        raise ValueError("N must be at least 1")
    p = _poly_pow(_euler_product(N - 1), 24, N - 1)
    return p[:N]


def _sigma(k: int, N: int) -> list:
    s = [0] * (N + 1)
    for d in range(1, N + 1):
        dk = d**k
        for mlt in range(d, N + 1, d):
            s[mlt] += dk
    return s


def eisenstein_series(k: int, N: int) -> list:
    """Coefficients 0..N of the normalised level-one Eisenstein series E_k (k = 4, 6)."""
    c = {4: 240, 6: -504}
    if k not in c:
        raise ValueError("only E_4 and E_6 are provided")
    s = _sigma(k - 1, N)
    return [1] + [c[k] * s[n] for n in range(1, N + 1)]


def level1_cusp_form(m: int, N: int) -> QExpansion:
    """The normalised eigenform spanning S_m(SL2(Z)) for m in the dimension-one list."""
    if m not in DIM_ONE_WEIGHTS:
        raise ValueError(f"S_m is one-dimensional only for m in {DIM_ONE_WEIGHTS}")
    tau = delta_coefficients(N)
    series = [0] + tau  # index by power of q
    e4 = eisenstein_series(4, N)
    e6 = eisenstein_series(6, N)
    factors = {12: [], 16: [e4], 18: [e6], 20: [e4, e4], 22: [e4, e6], 26: [e4, e4, e6]}[m]
    for fct in factors:
        series = _poly_mul(series, fct, N)
    return QExpansion(m, tuple(series[1:N + 1]))


def delta_form(N: int = 60) -> QExpansion:
    return QExpansion(12, tuple(delta_coefficients(N)))


# ---------------------------------------------------------------- evaluation

@lru_cache(maxsize=4096)
def required_terms(m: int, y: float, rel: float = 1e-14) -> int:
    """Smallest N whose crude tail bound is below rel times the leading term e^(-2 pi y)."""
    if y <= 0:
        raise ValueError("y must be positive")
    # past n ~ (m + 60)/(2 pi y) the terms decay faster than e^-60 relative to the head
    cap = int(4 * (m + 80) / (2 * math.pi * y)) + 64
    n = np.arange(1, cap + 1, dtype=float)
    # crude coefficient bound |a(n)| <= n^(m/2) d(n) with d(n) <= 2 sqrt(n)
    log_terms = (m / 2.0 + 0.5) * np.log(n) + math.log(2.0) - 2 * math.pi * n * y
    terms = np.exp(log_terms + 2 * math.pi * y)
    tail = np.cumsum(terms[::-1])[::-1]  # tail[k] = sum_{n >= k+1}
    ok = np.nonzero(tail < rel)[0]
    if ok.size == 0:
        raise ValueError("height too small for any reasonable truncation")
    return int(ok[0])  # terms with n <= ok[0] are kept


def _phases(x: float, N: int) -> np.ndarray:
    """e(n x) for n = 1..N with n x reduced mod 1 exactly."""
    xf = Fraction(x) % 1
    num, den = xf.numerator, xf.denominator
    frac = np.array([((n * num) % den) / den for n in range(1, N + 1)])
    return np.exp(2j * np.pi * frac)


def eval_cusp_form(f: QExpansion, z) -> complex:
    """sum a(n) e^(2 pi i n z), requiring Im z >= 0.05 and enough coefficients."""
    z = as_point(z)
    if z.y < 0.05:
        raise ValueError("eval_cusp_form needs Im z >= 0.05; use eval_modular for smaller heights")
    need = required_terms(f.m, z.y)
    if need > f.N:
        raise ValueError(f"need at least N={need} coefficients at height {z.y}, have {f.N}")
    n = np.arange(1, need + 1)
    terms = f.array()[:need] * np.exp(-2 * np.pi * n * z.y) * _phases(z.x, need)
    return complex(np.sum(terms[::-1]))


def eval_modular(f: QExpansion, z) -> complex:
    """Evaluate a level-one form anywhere by moving z to the fundamental domain first."""
    if f.level != 1:
        raise ValueError("automorphic reduction is only implemented for level one")
    z = as_point(z)
    zr, gamma, _ = reduce_to_fundamental(z)
    c, d = int(gamma[1, 0]), int(gamma[1, 1])
    return eval_cusp_form(f, zr) / (c * z.z + d) ** f.m


def slash(f: QExpansion, alpha, z) -> complex:
    """(f |_m alpha)(z) = det(alpha)^(m/2) (cz + d)^(-m) f(alpha z)."""
    (a, b), (c, d) = alpha
    det = a * d - b * c
    if det <= 0:
        raise ValueError("slash action needs positive determinant")
    z = as_point(z).z
    j = c * z + d
    return det ** (f.m / 2.0) * j ** (-f.m) * eval_modular(f, (a * z + b) / j)


# ---------------------------------------------------------------- Petersson norms

def strip_parseval(f: QExpansion, y0: float) -> float:
    """int_{y >= y0} int_0^1 y^(m-2) |f|^2 dx dy via Parseval and incomplete gamma."""
    m = f.m
    a = np.abs(f.array()) ** 2
    n = np.arange(1, f.N + 1, dtype=float)
    s = 4 * np.pi * n
    # integral = Gamma(m-1) Q(m-1, s y0) / s^(m-1)
    with np.errstate(divide="ignore"):
        logs = special.gammaln(m - 1) + np.log(special.gammaincc(m - 1, s * y0)) - (m - 1) * np.log(s)
    vals = np.where(a > 0, a * np.exp(logs), 0.0)
    return math.fsum(vals)


def petersson_norm(f: QExpansion, convention: str = "hyperbolic", rel: float = 1e-8) -> float:
    """int_F y^m |f|^2 dx dy / y^2 over the standard fundamental domain.

    The part with y >= 1 is done exactly by Parseval; the cap between the unit
    circle and y = 1 by adaptive Gauss-Kronrod quadrature. ``probability``
    divides by the covolume pi/3.
    """
    if convention not in ("hyperbolic", "probability"):
        raise ValueError("convention must be 'hyperbolic' or 'probability'")
    if f.level != 1:
        raise ValueError("quadrature domain is the level-one fundamental domain")
    need = required_terms(f.m, SQRT3_2)
    if need > f.N:
        raise ValueError(f"need at least N={need} coefficients, have {f.N}")
    coeffs = f.array()[:need]
    n = np.arange(1, need + 1)
    m = f.m

    def integrand(y, x):
        q = np.exp(2j * np.pi * n * complex(x, y))
        v = np.dot(coeffs, q)
        return y ** (m - 2) * (v.real * v.real + v.imag * v.imag)

    inner_err = [0.0]

    def inner(x):
        val, err = integrate.quad(integrand, math.sqrt(1 - x * x), 1.0, args=(x,), epsabs=0, epsrel=1e-12, limit=200)
        inner_err[0] = max(inner_err[0], err)
        return val

    cap, cap_err = integrate.quad(inner, -0.5, 0.5, epsabs=0, epsrel=1e-12, limit=200, points=[0.0])
    top = strip_parseval(QExpansion(m, tuple(coeffs)), 1.0)
    total = cap + top
    if not (total > 0) or cap_err + inner_err[0] > rel * total:
        raise QuadratureError(f"Petersson quadrature did not reach relative accuracy {rel}")
    if convention == "probability":
        total /= FUNDAMENTAL_COVOLUME
    return total
