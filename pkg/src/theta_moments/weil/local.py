"""Finite models of the local Weil representation on a quaternion algebra over Q_p.

A model fixes, for each of the four coordinates x_i of B_p, a denominator depth
j_i and an invariance depth k_i.  Functions are supported on prod p^(-j_i) Z_p
and constant on cosets of prod p^(k_i) Z_p, so they are arrays indexed by
u_i in Z/p^(j_i + k_i) with x_i = u_i p^(-j_i).

Split coordinates are the matrix entries (a, b, c, d) with Nr = ad - bc.
Ramified coordinates are (a0, a1, b0, b1) for x = a + j b, a, b in O_E,
j^2 = p and Nr = N(a) - p N(b), with O_E the ring of integers of the
unramified quadratic extension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cyclotomic import Cyclotomic, check_range, descend, embed, normalise, reduce_group_ring

MAX_CARRIER = 2**24


class UnsupportedError(ValueError):
    """Raised for operations outside the finite model (non-unit scaling, oversized carriers)."""


def is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


def smallest_nonresidue(p: int) -> int:
    for r in range(2, p):
        if pow(r, (p - 1) // 2, p) == p - 1:
            return r
    raise ValueError(f"no quadratic non-residue mod {p}")


@dataclass(frozen=True)
class QuadraticData:
    """Norm form, polar form and Weil constant of B_p in the fixed coordinates."""

    p: int
    ramified: bool
    norm: np.ndarray = field(repr=False, compare=False)  # upper-triangular coefficients
    gamma: int
    extension: str  # description of O_E, recorded in metadata
    half_val_det: int  # v_p(det polar) / 2

    @property
    def polar(self) -> np.ndarray:
        return self.norm + self.norm.T

    def blocks(self):
        """Coordinate groups on which the polar form is block diagonal."""
        pol = self.polar
        seen, out = set(), []
        for i in range(4):
            if i in seen:
                continue
            comp, stack = {i}, [i]
            while stack:
                a = stack.pop()
                for b in range(4):
                    if pol[a, b] and b not in comp:
                        comp.add(b)
                        stack.append(b)
            seen |= comp
            out.append(tuple(sorted(comp)))
        return out


@lru_cache(maxsize=None)
def quadratic_data(p: int, ramified: bool) -> QuadraticData:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    Q = np.zeros((4, 4), dtype=np.int64)
    if not ramified:
        Q[0, 3], Q[1, 2] = 1, -1
        return QuadraticData(p, False, Q, 1, "split: M_2(Q_p)", 0)
    if p == 2:
        # Z_2[x]/(x^2 - r) is never maximal at 2; use the unramified x^2 + x + 1 instead
        T, S, ext = -1, 1, "Z_2[w]/(w^2 + w + 1)"
    else:
        r = smallest_nonresidue(p)
        T, S, ext = 0, -r, f"Z_{p}[w]/(w^2 - {r})"
    Q[0, 0], Q[0, 1], Q[1, 1] = 1, T, S
    Q[2, 2], Q[2, 3], Q[3, 3] = -p, -p * T, -p * S
    pol = Q + Q.T
    v = 0
    det = round(np.linalg.det(pol.astype(float)))
    while det % p == 0:
        det //= p
        v += 1
    return QuadraticData(p, True, Q, -1, ext, v // 2)


@dataclass(frozen=True)
class FiniteModel:
    """Carrier prod_i p^(-j_i) Z_p / p^(k_i) Z_p for the four coordinates."""

    p: int
    ramified: bool
    depths: tuple  # ((j_0, k_0), ..., (j_3, k_3))

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        depths = tuple((int(j), int(k)) for j, k in self.depths)
        if len(depths) != 4 or any(j + k < 0 for j, k in depths):
            raise ValueError("need four (j, k) pairs with j + k >= 0")
        object.__setattr__(self, "depths", depths)
        if self.size > MAX_CARRIER:
            raise UnsupportedError(f"carrier of {self.size} cosets exceeds the cap {MAX_CARRIER}")

    @classmethod
    def uniform(cls, p: int, j: int, k: int, ramified: bool = False) -> "FiniteModel":
        return cls(p, ramified, ((j, k),) * 4)

    @classmethod
    def standard(cls, p: int, n: int = 1, ramified: bool = False) -> "FiniteModel":
        """The smallest model carrying the orbit of 1_R: exactly the cosets of R in its dual."""
        if ramified:
            if n != 1:
                raise ValueError("the ramified maximal order has level p")
            return cls(p, True, ((0, 0), (0, 0), (1, 0), (1, 0)))
        if n < 0:
            raise ValueError("level exponent must be non-negative")
        return cls(p, False, ((0, 0), (n, 0), (0, n), (0, 0)))

    @property
    def shape(self) -> tuple:
        return tuple(self.p ** (j + k) for j, k in self.depths)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def j(self) -> int:
        return max(j for j, _ in self.depths)

    @property
    def k(self) -> int:
        return max(k for _, k in self.depths)

    @property
    def quad(self) -> QuadraticData:
        return quadratic_data(self.p, self.ramified)

    def join(self, other: "FiniteModel") -> "FiniteModel":
        if (self.p, self.ramified) != (other.p, other.ramified):
            raise ValueError("models live on different spaces")
        return FiniteModel(self.p, self.ramified, tuple(
            (max(a[0], b[0]), max(a[1], b[1])) for a, b in zip(self.depths, other.depths)))

    def grids(self):
        """Integer representatives u_i as broadcastable arrays."""
        out = []
        for i, n in enumerate(self.shape):
            sh = [1, 1, 1, 1]
            sh[i] = n
            out.append(np.arange(n, dtype=np.int64).reshape(sh))
        return out

    def norm_denominator(self) -> int:
        """E with p^E Nr x integral on the carrier."""
        Q = self.quad.norm
        return max((self.depths[a][0] + self.depths[b][0] for a in range(4) for b in range(4) if Q[a, b]), default=0)

    def dual(self) -> "FiniteModel":
        """Model holding Fourier transforms of functions on this model."""
        return FiniteModel(self.p, self.ramified, _dual_depths(self))

    def to_dict(self) -> dict:
        return {"p": self.p, "ramified": self.ramified, "depths": [list(d) for d in self.depths],
                "extension": self.quad.extension}


def _block_scaling(pol: np.ndarray, block, p: int):
    """Write the block of the polar form as p^e U; returns (e, permutation or None)."""
    sub = pol[np.ix_(block, block)]
    nz = sub[sub != 0]
    e = min(_vp(int(v), p) for v in nz)
    U = sub // p**e
    perm = {}
    for r, i in enumerate(block):
        row = np.nonzero(U[r])[0]
        if len(row) != 1 or U[r, row[0]] % p == 0:
            return e, None
        perm[i] = block[row[0]]
    return e, perm


def _vp(v: int, p: int) -> int:
    if v == 0:
        raise ValueError("valuation of zero")
    e = 0
    while v % p == 0:
        v //= p
        e += 1
    return e


def _dual_depths(model: FiniteModel):
    pol = model.quad.polar
    out = [None] * 4
    for block in model.quad.blocks():
        e, perm = _block_scaling(pol, block, model.p)
        if perm is None:
            ds = {model.depths[i] for i in block}
            if len(ds) != 1:
                raise UnsupportedError("non-monomial polar block needs equal depths on the block")
            j, k = ds.pop()
            for i in block:
                out[i] = (k + e, j - e)
        else:
            for i in block:
                j, k = model.depths[perm[i]]
                out[i] = (k + e, j - e)
    return tuple(out)


class FiniteWeilFunction:
    """A function on a finite model with values in Z[zeta_{p^L}, 1/p].

    ``coeffs`` has shape model.shape + (p^L,) in group-ring form; the value at
    u is p^(-scale) sum_t coeffs[u, t] zeta^t.  Instances are treated as
    immutable.
    """

    __slots__ = ("model", "L", "scale", "coeffs", "_key")

    def __init__(self, model: FiniteModel, L: int, scale: int, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.int64)
        if coeffs.shape != model.shape + (model.p**L,):
            raise ValueError(f"coefficient array has shape {coeffs.shape}, expected {model.shape + (model.p**L,)}")
        check_range(coeffs)
        self.model, self.L, self.scale, self.coeffs = model, L, scale, coeffs
        self._key = None

    # ---- canonical form and comparison
    def canonical(self):
        """(level, scale, canonical coefficients) with the smallest level and scale."""
        canon = reduce_group_ring(self.coeffs, self.model.p, self.L)
        canon, scale = normalise(canon, self.scale, self.model.p)
        canon, L = descend(canon, self.model.p, self.L)
        return L, scale, canon

    def key(self):
        if self._key is None:
            L, scale, canon = self.canonical()
            self._key = (self.model, L, scale, canon.tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, FiniteWeilFunction) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"FiniteWeilFunction(model={self.model.depths}, L={self.L}, scale={self.scale}, support={int(self.support().sum())})"

    # ---- access
    def at_level(self, L: int) -> "FiniteWeilFunction":
        if L == self.L:
            return self
        return FiniteWeilFunction(self.model, L, self.scale, embed(self.coeffs, self.model.p, self.L, L))

    def support(self) -> np.ndarray:
        canon = reduce_group_ring(self.coeffs, self.model.p, self.L)
        return np.any(canon != 0, axis=-1)

    def value(self, index) -> Cyclotomic:
        return Cyclotomic.from_group_ring(self.model.p, self.L, self.coeffs[tuple(index)], self.scale)

    def to_complex(self) -> np.ndarray:
        P = self.model.p**self.L
        roots = np.exp(2j * np.pi * np.arange(P) / P)
        return (self.coeffs @ roots) / float(self.model.p) ** self.scale

    def scaled(self, sign: int = 1, extra_scale: int = 0) -> "FiniteWeilFunction":
        return FiniteWeilFunction(self.model, self.L, self.scale + extra_scale, sign * self.coeffs)

    def norm_squared(self) -> Cyclotomic:
        """sum_x |M(x)|^2 times the self-dual cell volume, as an exact cyclotomic number."""
        p = self.model.p
        P = p**self.L
        c = self.coeffs.reshape(-1, P)
        # |v|^2 = sum_{s,t} c_s c_t zeta^(s - t): autocorrelation of the group-ring vector
        auto = np.array([int(np.sum(c * np.roll(c, d, axis=1), dtype=np.int64)) for d in range(P)], dtype=np.int64)
        cell = self.model.quad.half_val_det + sum(k for _, k in self.model.depths)
        return Cyclotomic.from_group_ring(p, self.L, auto, 2 * self.scale + cell)

    def same_function(self, other: "FiniteWeilFunction") -> bool:
        """Equality after viewing both functions on the join of their models."""
        model = self.model.join(other.model)
        return extend(self, model) == extend(other, model)

    def to_dict(self) -> dict:
        L, scale, canon = self.canonical()
        entries = [[list(map(int, idx)), [int(c) for c in canon[idx]]]
                   for idx in zip(*np.nonzero(np.any(canon != 0, axis=-1)))]
        return {"level": L, "scale": scale, "entries": entries}


# ---------------------------------------------------------------- constructors

def indicator(model: FiniteModel, valuations, sign: int = 1, scale: int = 0, L: int = 0) -> FiniteWeilFunction:
    """sign * p^(-scale) times the indicator of prod_i p^(v_i) Z_p."""
    p = model.p
    mask = np.ones(model.shape, dtype=bool)
    for (j, k), v, g in zip(model.depths, valuations, model.grids()):
        if v > k:
            raise UnsupportedError("lattice is finer than the model resolves")
        if v + j > 0:
            mask = mask & (g % p ** (v + j) == 0)
    coeffs = np.zeros(model.shape + (p**L,), dtype=np.int64)
    coeffs[..., 0] = np.where(mask, sign, 0)
    return FiniteWeilFunction(model, L, scale, coeffs)


def order_indicator(model: FiniteModel, n: int = 1) -> FiniteWeilFunction:
    """1_R for the standard local order: [[Z_p, Z_p],[p^n Z_p, Z_p]] or O_E + j O_E."""
    if model.ramified:
        return indicator(model, (0, 0, 0, 0))
    return indicator(model, (0, 0, n, 0))


def dual_order_indicator(model: FiniteModel, n: int = 1) -> FiniteWeilFunction:
    """1 on the dual lattice of the standard order."""
    if model.ramified:
        return indicator(model, (0, 0, -1, -1))
    return indicator(model, (0, -n, 0, 0))


def _check_phase(model: FiniteModel, exps: np.ndarray, fn, mask: np.ndarray) -> None:
    """Phases must not depend on the chosen coset representatives where the function lives."""
    for i, n in enumerate(model.shape):
        if not np.any(mask):
            return
        grids = model.grids()
        grids[i] = grids[i] + n
        if np.any((fn(*grids) != exps)[np.broadcast_to(mask, exps.shape)]):
            raise UnsupportedError("phase is not constant on the model's cosets")


def norm_phase(model: FiniteModel, sigma: int, L: int):
    """Exponents e with zeta_{p^L}^e = psi(sigma Nr x); returns (exps, required level)."""
    p = model.p
    E = model.norm_denominator()
    Q = model.quad.norm
    L = max(L, E)
    mod = p**E

    def fn(*g):
        num = np.zeros(model.shape, dtype=object if E > 8 else np.int64)
        for a in range(4):
            for b in range(a, 4):
                if Q[a, b]:
                    w = E - model.depths[a][0] - model.depths[b][0]
                    num = num + int(Q[a, b]) * g[a] * g[b] * p**w
        return ((sigma * num) % mod).astype(np.int64) * p ** (L - E)

    return fn, L


def weil_unipotent(M: FiniteWeilFunction, sigma: int) -> FiniteWeilFunction:
    """Multiply pointwise by psi(sigma Nr x)."""
    if int(sigma) != sigma:
        raise ValueError("sigma must be an integer")
    fn, L = norm_phase(M.model, int(sigma), M.L)
    M = M.at_level(L)
    exps = fn(*M.model.grids())
    _check_phase(M.model, exps, fn, M.support())
    return _rotate(M, exps)


def _rotate(M: FiniteWeilFunction, exps: np.ndarray) -> FiniteWeilFunction:
    P = M.model.p**M.L
    flat = M.coeffs.reshape(-1, P)
    idx = (np.arange(P)[None, :] - exps.reshape(-1, 1)) % P
    out = np.take_along_axis(flat, idx, axis=1).reshape(M.coeffs.shape)
    return FiniteWeilFunction(M.model, M.L, M.scale, out)


def weil_diag(M: FiniteWeilFunction, lam: int) -> FiniteWeilFunction:
    """x -> M(lam x) for a p-adic unit lam given by an integer representative."""
    p = M.model.p
    if lam % p == 0:
        raise UnsupportedError("only unit diagonal elements act on the finite model")
    idx = [(lam * np.arange(n)) % n for n in M.model.shape]
    return FiniteWeilFunction(M.model, M.L, M.scale, M.coeffs[np.ix_(*idx)])


def reflect(M: FiniteWeilFunction) -> FiniteWeilFunction:
    """x -> M(-x)."""
    idx = [(-np.arange(n)) % n for n in M.model.shape]
    return FiniteWeilFunction(M.model, M.L, M.scale, M.coeffs[np.ix_(*idx)])


def extend(M: FiniteWeilFunction, model: FiniteModel) -> FiniteWeilFunction:
    """View M on a larger model (deeper in both directions on every coordinate)."""
    if model == M.model:
        return M
    p = M.model.p
    idx, masks = [], []
    for (j, k), (J, K), n_new in zip(M.model.depths, model.depths, model.shape):
        if J < j or K < k:
            raise UnsupportedError("target model must contain the source model")
        u = np.arange(n_new)
        masks.append(u % p ** (J - j) == 0)
        idx.append((u // p ** (J - j)) % p ** (j + k))
    out = M.coeffs[np.ix_(*idx)]
    mask = np.ones(model.shape, dtype=bool)
    for i, m in enumerate(masks):
        sh = [1, 1, 1, 1]
        sh[i] = -1
        mask = mask & m.reshape(sh)
    out = np.where(mask[..., None], out, 0)
    return FiniteWeilFunction(model, M.L, M.scale, out)


def _pairing_exponents(src: FiniteModel, dst: FiniteModel, block, pol, L_min):
    """Exponent matrix for psi(<x, y>) with x on the dst block and y on the src block."""
    p = src.p
    E = max((dst.depths[i][0] + src.depths[l][0] for i in block for l in block if pol[i, l]), default=0)
    L = max(L_min, E)
    xs = list(itertools.product(*[range(dst.shape[i]) for i in block]))
    ys = list(itertools.product(*[range(src.shape[i]) for i in block]))
    X = np.array(xs, dtype=np.int64).reshape(len(xs), len(block))
    Y = np.array(ys, dtype=np.int64).reshape(len(ys), len(block))
    num = np.zeros((len(xs), len(ys)), dtype=np.int64)
    for a, i in enumerate(block):
        for b, l in enumerate(block):
            if pol[i, l]:
                w = E - dst.depths[i][0] - src.depths[l][0]
                num += int(pol[i, l]) * np.outer(X[:, a], Y[:, b]) * p**w
    return (num % p**E) * p ** (L - E), L


def weil_fourier(M: FiniteWeilFunction, target: FiniteModel | None = None) -> FiniteWeilFunction:
    """gamma times the Fourier transform for the self-dual measure.

    The result lives on the join of the input model and its dual (or on
    ``target`` when given), so repeated application stays on one model.
    """
    src = M.model
    quad = src.quad
    pol = quad.polar
    dual = src.dual()
    dst = target if target is not None else src.join(dual)
    if dst.join(dual) != dst:
        raise UnsupportedError("target model cannot hold the transform")
    p = src.p
    # work on the dual model, then extend
    blocks = quad.blocks()
    L = M.L
    mats = []
    for block in blocks:
        exps, L = _pairing_exponents(src, dual, block, pol, L)
        mats.append((block, exps))
    # all blocks share the final level
    mats = [(block, _pairing_exponents(src, dual, block, pol, L)[0]) for block, _ in mats]
    cur = M.at_level(L).coeffs
    P = p**L
    shape_cur = list(src.shape)
    for block, exps in mats:
        rest_axes = [a for a in range(4) if a not in block]
        perm = list(block) + rest_axes + [4]
        arr = np.transpose(cur, perm)
        n_in = math.prod(shape_cur[i] for i in block)
        rest_shape = arr.shape[len(block):-1]
        arr = arr.reshape(n_in, -1, P)
        n_out = exps.shape[0]
        acc = np.zeros((n_out, arr.shape[1], P), dtype=np.int64)
        base = np.arange(P)
        for y in range(n_in):
            vec = arr[y]
            if not vec.any():
                continue
            # roll each output row by its exponent: out[x, :, t] += vec[:, t - e]
            idx = (base[None, :] - exps[:, y][:, None]) % P
            acc += vec[:, idx].transpose(1, 0, 2)
        check_range(acc)
        out_block_shape = [dual.shape[i] for i in block]
        acc = acc.reshape(out_block_shape + list(rest_shape) + [P])
        inv = np.argsort(perm)
        cur = np.transpose(acc, inv)
        for i in block:
            shape_cur[i] = dual.shape[i]
    scale = M.scale + quad.half_val_det + sum(k for _, k in src.depths)
    out = FiniteWeilFunction(dual, L, scale, quad.gamma * cur)
    return extend(out, dst)


def inverse_fourier(M: FiniteWeilFunction) -> FiniteWeilFunction:
    return reflect(weil_fourier(M))


def weil_lower_unipotent(M: FiniteWeilFunction, s: int) -> FiniteWeilFunction:
    """Action of [[1, 0], [s, 1]] = -w u(-s) w."""
    model = M.model.join(M.model.dual())
    M = extend(M, model)
    return reflect(weil_fourier(weil_unipotent(weil_fourier(M), -s)))


def phase_function(model: FiniteModel, mask: np.ndarray, exps: np.ndarray, L: int, sign: int = 1,
                   scale: int = 0) -> FiniteWeilFunction:
    """sign * p^(-scale) * zeta_{p^L}^exps on mask, zero elsewhere."""
    P = model.p**L
    coeffs = np.zeros(model.shape + (P,), dtype=np.int64)
    mask = np.broadcast_to(mask, model.shape)
    exps = np.broadcast_to(exps, model.shape) % P
    sel = np.nonzero(mask)
    coeffs[sel + (exps[sel],)] = sign
    return FiniteWeilFunction(model, L, scale, coeffs)
