"""Orbits of 1_R under SL2(Z_p), their predicted closed forms, and the global catalog."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cyclotomic import Cyclotomic
from .local import (
    FiniteModel,
    FiniteWeilFunction,
    UnsupportedError,
    dual_order_indicator,
    inverse_fourier,
    is_prime,
    norm_phase,
    order_indicator,
    phase_function,
    quadratic_data,
    weil_diag,
    weil_fourier,
    weil_lower_unipotent,
    weil_unipotent,
)

GOLDEN_SCHEMA = 1


class OrbitGuardError(RuntimeError):
    """The closure grew past its size guard."""


def _units(m: int):
    return [u for u in range(1, max(m, 2)) if math.gcd(u, m) == 1] if m > 1 else [1]


def generators(model: FiniteModel):
    """(label, operator) pairs generating the SL2(Z_p) action on the model."""
    p = model.p
    modulus = p ** max(j + k for j, k in model.depths)
    gens = [(("u", 1), lambda f: weil_unipotent(f, 1)), (("w",), weil_fourier)]
    for lam in _units(modulus):
        if lam != 1:
            gens.append((("d", lam), lambda f, lam=lam: weil_diag(f, lam)))
    return gens


def apply_word(f: FiniteWeilFunction, word) -> FiniteWeilFunction:
    """Apply generator labels left to right (first label acts first)."""
    for op in word:
        if op[0] == "u":
            f = weil_unipotent(f, op[1])
        elif op[0] == "d":
            f = weil_diag(f, op[1])
        elif op[0] == "w":
            f = weil_fourier(f)
        elif op[0] == "w-":
            f = inverse_fourier(f)
        elif op[0] == "l":
            f = weil_lower_unipotent(f, op[1])
        else:
            raise ValueError(f"unknown generator {op!r}")
    return f


def inverse_word(word, p: int, modulus: int):
    out = []
    for op in reversed(word):
        if op[0] == "u":
            out.append(("u", -op[1]))
        elif op[0] == "d":
            out.append(("d", pow(op[1], -1, modulus)))
        elif op[0] == "w":
            out.append(("w-",))
        elif op[0] == "w-":
            out.append(("w",))
        elif op[0] == "l":
            out.append(("l", -op[1]))
    return out


def orbit_closure(seed: FiniteWeilFunction, p: int | None = None, n: int = 1, guard: int | None = None,
                  with_words: bool = False):
    """Saturate {seed} under the generators; returns a dict key -> function (or (function, word))."""
    p = seed.model.p if p is None else p
    guard = 10 * p ** (2 * n) if guard is None else guard
    gens = generators(seed.model)
    found = {seed.key(): (seed, ())}
    queue = deque([seed])
    while queue:
        f = queue.popleft()
        word = found[f.key()][1]
        for label, op in gens:
            g = op(f)
            if g.model != seed.model:
                raise UnsupportedError("orbit left the model; use a self-dual model such as FiniteModel.standard")
            k = g.key()
            if k not in found:
                found[k] = (g, word + (label,))
                if len(found) > guard:
                    raise OrbitGuardError(f"orbit exceeded {guard} elements")
                queue.append(g)
    if with_words:
        return found
    return {k: v[0] for k, v in found.items()}


def jmap(x, q: int):
    """(b, c) mod q for x = [[a, b/q], [c, d]] in the dual of the level-q Eichler order."""
    (a, b), (c, d) = [[Fraction(t) for t in row] for row in x]
    if any(t.denominator != 1 for t in (a, c, d)) or (b * q).denominator != 1:
        raise ValueError("x is not in the dual lattice of the standard Eichler order")
    return (int(b * q) % q, int(c) % q)


def nu(x, m: int, q: int) -> int:
    """nu_m(x) = -(j_1/m)(j_2/m) mod q/m for x with jmap(x) divisible by m."""
    if q % m:
        raise ValueError("m must divide q")
    j1, j2 = jmap(x, q)
    if j1 % m or j2 % m:
        raise ValueError("x does not lie in the sublattice cut out by m")
    mod = q // m
    return (-(j1 // m) * (j2 // m)) % mod if mod > 1 else 0


def _local_nu(model: FiniteModel, k: int, n: int, grids):
    """Integer representatives of nu_{p^k} on the split standard model."""
    p = model.p
    j1 = grids[1]  # b = u / p^n, so jmap_1 = u mod p^n
    j2 = grids[2]  # c = u mod p^n
    return -(j1 // p**k) * (j2 // p**k)


def predicted_orbit(p: int, n: int = 1, ramified: bool = False):
    """The closed-form orbit of 1_R on FiniteModel.standard(p, n, ramified), keyed like orbit_closure."""
    model = FiniteModel.standard(p, n if not ramified else 1, ramified)
    funcs = []
    if ramified:
        funcs.append(order_indicator(model))
        mask = dual_order_indicator(model).support()
        for t in range(p):
            fn, L = norm_phase(model, t, 0)
            funcs.append(phase_function(model, mask, fn(*model.grids()), L, sign=-1, scale=1))
    else:
        g = model.grids()
        full = np.ones(model.shape, dtype=bool)
        for k in range(1, n + 1):
            mask = full & (g[1] % p**k == 0) & (g[2] % p**k == 0)
            r = n - k
            nu_k = _local_nu(model, k, n, g)
            for u in _units(p**r):
                exps = (u * nu_k) % p**r if r else np.zeros_like(nu_k)
                funcs.append(phase_function(model, mask, exps, max(r, 0), scale=r))
        for t in range(p**n):
            fn, L = norm_phase(model, t, 0)
            funcs.append(phase_function(model, full, fn(*g), L, scale=n))
    out = {}
    for f in funcs:
        out[f.key()] = f
    if len(out) != len(funcs):
        raise AssertionError("predicted orbit contains repeated functions")
    return out


def orbit_index(p: int, n: int = 1, ramified: bool = False) -> int:
    return p + 1 if ramified else p**n + p ** (n - 1)


def local_orbit(p: int, n: int = 1, ramified: bool = False, with_words: bool = False):
    model = FiniteModel.standard(p, n if not ramified else 1, ramified)
    return orbit_closure(order_indicator(model, n), p, n if not ramified else 1, with_words=with_words)


def stabiliser_words(p: int, n: int = 1):
    """Generators of U_0(p^n): integral upper unipotent, unit diagonals, lower unipotent p^n."""
    modulus = p**n if n else p
    words = [(("u", 1),), (("l", p**n),)]
    words += [(("d", lam),) for lam in _units(modulus) if lam != 1]
    return words


def norm_character_sum(p: int, u: int) -> Cyclotomic:
    """sum over F_{p^2} of psi(u N(alpha) / p), with F_{p^2} realised as O_E / p."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if u % p == 0:
        raise ValueError("u must be a unit mod p")
    Q = quadratic_data(p, True).norm
    T, S = int(Q[0, 1]), int(Q[1, 1])
    vec = np.zeros(p, dtype=np.int64)
    for x0 in range(p):
        for x1 in range(p):
            nrm = x0 * x0 + T * x0 * x1 + S * x1 * x1
            vec[(u * nrm) % p] += 1
    return Cyclotomic.from_group_ring(p, 1, vec)


# ---------------------------------------------------------------- global catalog

def factorize(n: int) -> dict:
    out, d = {}, 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int):
    return sorted(d for d in range(1, n + 1) if n % d == 0)


def split_a(a: int, Q: int):
    """a = a1 a2 with a2 the largest divisor of a such that gcd(Q / a2, a) = 1."""
    a2 = max((d for d in divisors(a) if math.gcd(Q // d, a) == 1), default=1)
    return a // a2, a2


def rho_weight(a: int, Q: int) -> Fraction:
    out = Fraction(1)
    for p in factorize(math.gcd(Q // a, a)):
        out *= Fraction(p - 1, p)
    return out


@dataclass(frozen=True)
class OrbitEntry:
    a: int
    multiplicity: int
    coefficient: Fraction  # a (-1)^omega(D_B / gcd(a, D_B)) / (q D_B)
    u_modulus: int
    t_modulus: int


@dataclass(frozen=True)
class OrbitCatalog:
    q: int
    D_B: int
    entries: tuple

    @property
    def total(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    @property
    def index(self) -> int:
        Q = self.q * self.D_B
        out = Fraction(Q)
        for p in factorize(Q):
            out *= Fraction(p + 1, p)
        return int(out)

    def to_dict(self) -> dict:
        return {"q": self.q, "D_B": self.D_B, "index": self.index, "total": self.total,
                "entries": [{"a": e.a, "multiplicity": e.multiplicity, "coefficient": str(e.coefficient),
                             "u_modulus": e.u_modulus, "t_modulus": e.t_modulus} for e in self.entries]}


_LOCAL_CLASSES: dict = {}


def local_lattice_classes(p: int, n: int, ramified: bool) -> dict:
    """How many orbit elements live on each sublattice R^(p^k), from the brute-force closure."""
    key = (p, n, ramified)
    if key in _LOCAL_CLASSES:
        return _LOCAL_CLASSES[key]
    model = FiniteModel.standard(p, n, ramified)
    g = model.grids()
    if ramified:
        supports = {1: dual_order_indicator(model).support(), p: order_indicator(model).support()}
    else:
        full = np.ones(model.shape, dtype=bool)
        supports = {p**k: full & (g[1] % p**k == 0) & (g[2] % p**k == 0) for k in range(n + 1)}
    counts = {a: 0 for a in supports}
    for f in local_orbit(p, n, ramified).values():
        sup = f.support()
        hits = [a for a, s in supports.items() if np.array_equal(s, sup)]
        if len(hits) != 1:
            raise AssertionError("orbit element with unexpected support")
        counts[hits[0]] += 1
    _LOCAL_CLASSES[key] = counts
    return counts


def global_orbit(q: int, D_B: int = 1) -> OrbitCatalog:
    """Lattice classes of the SL2(Z^) orbit of 1_R for an Eichler order of level q."""
    if q < 1 or D_B < 1:
        raise ValueError("q and D_B must be positive")
    if math.gcd(q, D_B) != 1:
        raise ValueError("level and discriminant must be coprime")
    fD = factorize(D_B)
    if any(e > 1 for e in fD.values()):
        raise ValueError("D_B must be squarefree")
    Q = q * D_B
    local = {}
    for p, e in factorize(q).items():
        local[p] = local_lattice_classes(p, e, False)
    for p in fD:
        local[p] = local_lattice_classes(p, 1, True)
    entries = []
    for a in divisors(Q):
        mult = 1
        for p, table in local.items():
            mult *= table.get(p ** _vp(a, p), 0)
        formula = Fraction(Q, a) * rho_weight(a, Q)
        if formula != mult:
            raise AssertionError(f"local classification disagrees with the count formula at a={a}")
        a1, a2 = split_a(a, Q)
        sign = (-1) ** len(factorize(D_B // math.gcd(a, D_B)))
        entries.append(OrbitEntry(a, mult, Fraction(a * sign, Q), Q // a1, Q // a2))
    return OrbitCatalog(q, D_B, tuple(entries))


def _vp(n: int, p: int) -> int:
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


# ---------------------------------------------------------------- golden files

def orbit_to_json(p: int, n: int, ramified: bool, orbit: dict) -> str:
    funcs = sorted((f.to_dict() for f in orbit.values()), key=lambda d: json.dumps(d, sort_keys=True))
    model = next(iter(orbit.values())).model
    doc = {"schema": GOLDEN_SCHEMA, "p": p, "n": n, "ramified": ramified, "model": model.to_dict(),
           "orbit_size": len(funcs), "orbit": funcs}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def orbit_from_json(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("schema") != GOLDEN_SCHEMA:
        raise ValueError(f"unsupported golden schema {doc.get('schema')!r}")
    m = doc["model"]
    model = FiniteModel(m["p"], m["ramified"], tuple(tuple(d) for d in m["depths"]))
    out = {}
    for fd in doc["orbit"]:
        L = fd["level"]
        coeffs = np.zeros(model.shape + (model.p**L,), dtype=np.int64)
        for idx, vals in fd["entries"]:
            coeffs[tuple(idx)][:len(vals)] = vals
        f = FiniteWeilFunction(model, L, fd["scale"], coeffs)
        out[f.key()] = f
    return out
