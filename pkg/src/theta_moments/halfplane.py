"""Real 2x2 matrix geometry on the upper half-plane.

Matrices are numpy arrays of shape (2, 2) laid out as [[a, b], [c, d]].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0


class DegenerateMatrixWarning(UserWarning):
    """Emitted when mu is evaluated at a matrix with zero determinant."""


@dataclass(frozen=True)
class Point:
    """A point x + iy of the upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")
        if self.y <= 0:
            raise ValueError(f"point must lie in the upper half-plane, got y={self.y}")

    @classmethod
    def from_complex(cls, z) -> "Point":
        z = complex(z)
        return cls(float(z.real), float(z.imag))

    @classmethod
    def parse(cls, text: str) -> "Point":
        """Parse literals such as ``i``, ``2i``, ``0.3+0.8i`` or ``-0.3+0.9i``."""
        s = text.strip().replace(" ", "").replace("I", "i").replace("i", "j")
        try:
            return cls.from_complex(complex(s))
        except ValueError as exc:
            raise ValueError(f"cannot parse point {text!r}") from exc

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def __str__(self) -> str:
        return f"{self.x!r}{'+' if self.y >= 0 else '-'}{abs(self.y)!r}i"


def as_point(z) -> Point:
    if isinstance(z, Point):
        return z
    if isinstance(z, str):
        return Point.parse(z)
    return Point.from_complex(z)


def as_mat2(g) -> np.ndarray:
    arr = np.asarray(g, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def det2(g) -> float:
    g = as_mat2(g)
    return float(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0])


def rotation(theta: float) -> np.ndarray:
    """k_theta = [[cos, sin], [-sin, cos]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def mobius(g, z) -> complex:
    g = as_mat2(g)
    z = complex(z)
    return (g[0, 0] * z + g[0, 1]) / (g[1, 0] * z + g[1, 1])


def point_matrix(z) -> np.ndarray:
    """Iwasawa representative g_z = n(x) a(y) with g_z . i = z."""
    z = as_point(z)
    sy = math.sqrt(z.y)
    return np.array([[sy, z.x / sy], [0.0, 1.0 / sy]])


def point_of(g) -> Point:
    """The point g . i for g of positive determinant."""
    g = as_mat2(g)
    if det2(g) <= 0:
        raise ValueError("g must have positive determinant")
    return Point.from_complex(mobius(g, 1j))


def u_invariant(g) -> float:
    """Point-pair invariant (Tr g g^T - 2|det g|) / (4|det g|)."""
    g = as_mat2(g)
    det = det2(g)
    if det == 0:
        raise ValueError("u is undefined for singular matrices")
    frob = float(np.sum(g * g))
    return (frob - 2.0 * abs(det)) / (4.0 * abs(det))


def mu(g) -> complex:
    """Phase function 2i sqrt(det) / ((b - c) + i(a + d)); zero when det <= 0."""
    g = as_mat2(g)
    (a, b), (c, d) = g
    det = a * d - b * c
    if det == 0:
        warnings.warn("mu evaluated at a singular matrix; returning 0", DegenerateMatrixWarning, stacklevel=2)
        return 0j
    if det < 0:
        return 0j
    return 2j * math.sqrt(det) / complex(b - c, a + d)


def mu_array(a, b, c, d) -> np.ndarray:
    """Vectorised mu over entry arrays; zero wherever det <= 0."""
    a, b, c, d = (np.asarray(t, dtype=float) for t in (a, b, c, d))
    det = a * d - b * c
    pos = det > 0
    out = np.zeros(np.broadcast(a, b, c, d).shape, dtype=complex)
    den = (b - c) + 1j * (a + d)
    out[pos] = 2j * np.sqrt(det[pos]) / den[pos]
    return out


def log_bergman_test_function(x, m: int) -> complex | None:
    """log of the Bergman test function as log|M| + i arg M, or None where M vanishes."""
    if m < 2:
        raise ValueError("weight must be at least 2")
    x = as_mat2(x)
    nr = det2(x)
    if nr <= 0:
        return None
    ph = mu(x)
    log_abs = -2.0 * math.pi * nr + (m / 2.0 - 1.0) * math.log(nr) + m * math.log(abs(ph))
    return complex(log_abs, m * math.atan2(ph.imag, ph.real))


def bergman_test_function(x, m: int) -> complex:
    """exp(-2 pi Nr x) Nr(x)^(m/2-1) mu(x)^m, extended by zero where Nr x <= 0.

    Evaluated in log-space so large weights do not overflow the intermediate
    power of the norm.
    """
    lg = log_bergman_test_function(x, m)
    if lg is None:
        return 0j
    mag = math.exp(lg.real)
    return complex(mag * math.cos(lg.imag), mag * math.sin(lg.imag))


def reduce_to_fundamental(z, max_steps: int = 10_000):
    """Move z into the standard fundamental domain of SL2(Z).

    Returns ``(z_reduced, gamma, ht)`` where gamma is an integer matrix with
    gamma . z = z_reduced and ht is the height Im z_reduced.
    """
    z0 = as_point(z).z
    # gamma is tracked exactly as Python ints
    a, b, c, d = 1, 0, 0, 1
    w = z0
    for _ in range(max_steps):
        shift = math.ceil(w.real - 0.5)  # keeps Re in (-1/2, 1/2]
        if shift:
            w -= shift
            a, b = a - shift * c, b - shift * d
        if abs(w) ** 2 < 1.0 - 1e-15:
            w = -1.0 / w
            a, b, c, d = -c, -d, a, b
            continue
        break
    else:  # pragma: no cover - the loop provably terminates
        raise RuntimeError("fundamental-domain reduction did not terminate")
    if c < 0 or (c == 0 and d < 0):
        a, b, c, d = -a, -b, -c, -d
    gamma = np.array([[a, b], [c, d]], dtype=np.int64)
    zr = (a * z0 + b) / (c * z0 + d)
    reduced = Point(zr.real, zr.imag)
    return reduced, gamma, reduced.y
