"""Exact arithmetic in Z[zeta_{p^L}, 1/p].

An element is an integer vector c of length P = p^L together with a scale s,
standing for p^(-s) * sum_k c[k] zeta^k.  The canonical form reduces modulo the
cyclotomic polynomial, so two elements are equal exactly when their canonical
coefficients and scales agree.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

_LIMIT = 2**53


def degree(p: int, L: int) -> int:
    P = p**L
    return P - P // p


def reduce_group_ring(coeffs: np.ndarray, p: int, L: int) -> np.ndarray:
    """Map group-ring vectors (last axis of length p^L) to canonical length phi(p^L)."""
    P = p**L
    if coeffs.shape[-1] != P:
        raise ValueError(f"last axis must have length {P}")
    if L == 0:
        return coeffs.copy()
    block = P // p
    D = P - block
    out = coeffs[..., :D].copy()
    top = coeffs[..., D:]
    # zeta^(D + r) = -sum_{i < p-1} zeta^(i P/p + r)
    for i in range(p - 1):
        out[..., i * block:(i + 1) * block] -= top
    return out


def embed(coeffs: np.ndarray, p: int, L: int, L_new: int) -> np.ndarray:
    """Group-ring vectors at level L viewed at level L_new >= L."""
    if L_new < L:
        raise ValueError("can only raise the cyclotomic level")
    if L_new == L:
        return coeffs
    step = p ** (L_new - L)
    out = np.zeros(coeffs.shape[:-1] + (p**L_new,), dtype=coeffs.dtype)
    out[..., ::step] = coeffs
    return out


def descend(canon: np.ndarray, p: int, L: int):
    """Lower L while the element lies in the smaller cyclotomic field."""
    while L >= 1:
        if L == 1:
            if np.any(canon[..., 1:]):
                break
            canon = canon[..., :1]
        else:
            rest = canon.copy()
            rest[..., ::p] = 0
            if np.any(rest):
                break
            canon = canon[..., ::p]
        L -= 1
    return canon, L


def check_range(arr: np.ndarray) -> None:
    if arr.size and int(np.max(np.abs(arr))) >= _LIMIT:
        raise OverflowError("cyclotomic coefficients exceed the exact int64 range")


def normalise(canon: np.ndarray, scale: int, p: int):
    """Strip common factors of p from canonical coefficients; returns (coeffs, scale)."""
    canon = np.asarray(canon, dtype=np.int64)
    if not np.any(canon):
        return np.zeros_like(canon), 0
    if scale < 0:
        canon = canon * p ** (-scale)
        check_range(canon)
        scale = 0
    while scale > 0 and not np.any(canon % p):
        canon = canon // p
        scale -= 1
    return canon, scale


@dataclass(frozen=True)
class Cyclotomic:
    """A single element of Z[zeta_{p^L}, 1/p] in canonical form at the smallest level L.

    Canonical form makes dataclass equality and hashing exact.
    """

    p: int
    L: int
    scale: int
    coeffs: tuple

    @classmethod
    def from_group_ring(cls, p: int, L: int, vec, scale: int = 0) -> "Cyclotomic":
        vec = np.asarray(vec, dtype=np.int64)
        canon, s = normalise(reduce_group_ring(vec, p, L), scale, p)
        canon, L = descend(canon, p, L)
        return cls(p, L, s, tuple(int(c) for c in canon))

    @classmethod
    def integer(cls, p: int, value: int, L: int = 1) -> "Cyclotomic":
        vec = np.zeros(p**L, dtype=np.int64)
        vec[0] = value
        return cls.from_group_ring(p, L, vec)

    def group_ring(self, L: int | None = None) -> np.ndarray:
        L = self.L if L is None else L
        vec = np.zeros(self.p**self.L, dtype=np.int64)
        vec[:len(self.coeffs)] = self.coeffs
        return embed(vec, self.p, self.L, L)

    def _common(self, other):
        if not isinstance(other, Cyclotomic):
            other = Cyclotomic.integer(self.p, int(other), self.L)
        if other.p != self.p:
            raise ValueError("cannot combine cyclotomic numbers for different primes")
        L = max(self.L, other.L)
        return other, L

    def __add__(self, other):
        other, L = self._common(other)
        s = max(self.scale, other.scale)
        a = self.group_ring(L) * self.p ** (s - self.scale)
        b = other.group_ring(L) * self.p ** (s - other.scale)
        return Cyclotomic.from_group_ring(self.p, L, a + b, s)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.p, self.L, self.scale, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        other, _ = self._common(other)
        return self + (-other)

    def __mul__(self, other):
        other, L = self._common(other)
        P = self.p**L
        a, b = self.group_ring(L), other.group_ring(L)
        prod = np.zeros(P, dtype=object)
        for k in np.nonzero(a)[0]:
            prod += int(a[k]) * np.roll(b.astype(object), int(k))
        vec = np.array([int(v) for v in prod], dtype=np.int64)
        return Cyclotomic.from_group_ring(self.p, L, vec, self.scale + other.scale)

    __rmul__ = __mul__

    def conjugate(self) -> "Cyclotomic":
        vec = self.group_ring()
        P = vec.shape[0]
        return Cyclotomic.from_group_ring(self.p, self.L, vec[(-np.arange(P)) % P], self.scale)

    def __complex__(self):
        P = self.p**self.L
        total = sum(c * cmath.exp(2j * cmath.pi * k / P) for k, c in enumerate(self.coeffs) if c)
        return complex(total) / self.p**self.scale

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def __repr__(self):
        return f"Cyclotomic(p={self.p}, L={self.L}, scale={self.scale}, coeffs={self.coeffs})"
