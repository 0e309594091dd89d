import json
import math
from pathlib import Path

import numpy as np
import pytest
from oracles import delta_product_value, petersson_riemann, tau_product
from scipy import integrate

from theta_moments.bergman import (
    EventProfile,
    KernelSumParams,
    NodeError,
    ProfileGrid,
    bergman_constant_ratio,
    delta_star,
    elementary_theta_coeffs,
    event_profile,
    geometric_upper_bound,
    geometric_upper_bound_at,
    hecke_ratio,
    horocycle_l2_from_coeffs,
    kernel_sum,
    predicted_hecke_ratio,
    spectral_lower_bound,
    theta_coefficient,
    theta_horocycle_l2,
)
from theta_moments.lattice import OrderSpec, count_profile
from theta_moments.modular import delta_form, eval_modular, level1_cusp_form

GOLDEN = json.loads((Path(__file__).parent / "golden" / "bounds.json").read_text())
P12 = KernelSumParams(12, 1e-11)
TAU = tau_product(60)


def test_kernel_at_i_is_real_positive():
    s = kernel_sum(1, "i", "i", P12)
    assert s.real > 0 and abs(s.imag) < 1e-10


def test_kernel_hermitian():
    a = kernel_sum(2, "i", 0.1 + 1.2j, P12)
    b = kernel_sum(2, 0.1 + 1.2j, "i", P12)
    assert abs(a - b.conjugate()) < 1e-10


def test_kernel_modulus_gamma_invariant():
    w = 0.1 + 1.2j
    assert abs(abs(kernel_sum(1, 1j + 1, w, P12)) - abs(kernel_sum(1, 1j, w, P12))) < 1e-10
    assert abs(abs(kernel_sum(1, -1 / (0.2 + 0.9j), w, P12)) - abs(kernel_sum(1, 0.2 + 0.9j, w, P12))) < 1e-10


@pytest.mark.parametrize("n,expected", [(1, 1.0), (2, -0.75), (3, 252 / 243)])
def test_hecke_examples(n, expected):
    assert abs(hecke_ratio(n, 12, "i", "i") - expected) < 1e-9


def test_predicted_ratio_exact():
    assert predicted_hecke_ratio(2, 12) * 32 == -24


def test_theta_sequence_is_tau():
    s1 = kernel_sum(1, "i", "i", P12)
    got = [theta_coefficient(n, "i", "i", 12) / s1 for n in range(1, 7)]
    for g, t in zip(got, TAU[:6]):
        assert abs(g - t) < 1e-6 * abs(t)


def test_kappa_point_independence():
    rng = np.random.default_rng(7)
    vals = []
    for _ in range(10):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.4))
        w = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.4))
        vals.append(hecke_ratio(2, 12, z, w))
    assert max(abs(v - vals[0]) for v in vals) < 1e-8


def test_hecke_recursion_p3():
    k = {n: hecke_ratio(n, 12, "i", "i") for n in (3, 9)}
    assert abs(k[3] ** 2 - k[9] - 3) < 1e-8


def test_hecke_ratio_rejects_multi_dimensional_weight():
    with pytest.raises(ValueError):
        hecke_ratio(2, 24, "i", "i")


def test_node_at_weight_26():
    with pytest.raises(NodeError):
        hecke_ratio(2, 26, "i", "i")


def test_eichler_kernel_sum_differs_from_full():
    full = kernel_sum(1, "i", "i", P12)
    eich = kernel_sum(1, "i", "i", P12, order=OrderSpec.eichler_split(2))
    assert 0 < eich.real < full.real


def test_elementary_theta_basic():
    f = delta_form(80)
    z = complex(0.2, 0.95)
    c = elementary_theta_coeffs(f, z, 8)
    dz = complex(delta_product_value(z, 400))
    assert abs(c[0] - eval_modular(f, z)) == 0
    for n in range(1, 9):
        assert abs(c[n - 1] / (TAU[n - 1] * dz) - 1) < 1e-9
    shifted = elementary_theta_coeffs(f, z + 1, 8)
    for a, b in zip(c, shifted):
        assert abs(a - b) <= 1e-12 * abs(a)


def test_horocycle_parseval():
    z, m, tau2, N = "i", 12, 1.0, 10
    val = theta_horocycle_l2(z, m, tau2, N)
    coeffs = np.array([theta_coefficient(n, z, z, m) for n in range(1, N + 1)])
    n = np.arange(1, N + 1)

    def integrand(t):
        s = np.sum(coeffs * np.exp(2j * np.pi * n * complex(t, tau2)))
        return abs(s) ** 2

    direct, _ = integrate.quad(integrand, 0, 1, limit=400, epsabs=0, epsrel=1e-12)
    assert abs(direct / val - 1) < 1e-8
    assert theta_horocycle_l2(z, m, 2 * tau2, N) < val
    # the n = 1 term dominates at z = i
    first = abs(coeffs[0]) ** 2 * math.exp(-4 * math.pi * tau2)
    assert first / val > 0.99


def test_horocycle_single_coefficient():
    assert horocycle_l2_from_coeffs([0, 3.0, 0], 0.5) == pytest.approx(9 * math.exp(-4 * math.pi))


def test_horocycle_demands_enough_terms():
    with pytest.raises(ValueError):
        theta_horocycle_l2("i", 12, 0.02, 2)


def test_bergman_constant_hyperbolic():
    assert abs(bergman_constant_ratio("i", 12, "hyperbolic") - 1) < 1e-3
    prob = bergman_constant_ratio("i", 12, "probability")
    assert prob == pytest.approx(3 / math.pi, rel=1e-3)


def test_spectral_bound_against_independent_composition():
    val = spectral_lower_bound("i", 12)
    strip = sum(t * t * integrate.quad(lambda y: y**10 * math.exp(-4 * math.pi * n * y), math.sqrt(3) / 2,
                                       np.inf, epsrel=1e-13)[0] for n, t in enumerate(TAU, 1))
    ref = (8 * math.pi / 11) ** 2 * abs(delta_product_value(1j)) ** 4 * strip / petersson_riemann() ** 2
    assert abs(val / ref - 1) < 3e-4
    assert val == pytest.approx(float(GOLDEN["spectral_lower_bound_m12_i"]), rel=1e-9)


def test_spectral_bound_normalisation_cancels():
    f = level1_cusp_form(12, 80)
    for z in ("i", 0.3 + 0.9j, -0.4 + 1.7j):
        a = spectral_lower_bound(z, 12, f=f)
        b = spectral_lower_bound(z, 12, f=f.scaled(2))
        assert a > 0 and b == pytest.approx(a, rel=1e-10)


def test_geometric_bound_zero_profiles():
    grid = ProfileGrid((0.0, delta_star(12)), ((0, 0, 0), (0, 0, 0)))
    assert geometric_upper_bound("i", 12, 1, 1, grid) == 0.0
    empty = EventProfile(np.zeros(0), np.zeros(0, dtype=np.int64), 5, delta_star(12))
    assert geometric_upper_bound("i", 12, 1, 1, empty) == 0.0


@pytest.mark.parametrize("N", [5, 30])
def test_geometric_bound_constant_profile_closed_form(N):
    m, ds = 12, delta_star(12)
    grid = ProfileGrid((0.0, ds), (tuple([1] * N), tuple([1] * N)))
    H = sum(1 / n for n in range(1, min(N, m) + 1))
    tail = sum(math.exp(-n) / n for n in range(m + 1, N + 1))
    integral = math.sqrt(H) * (1 - (1 + ds) ** (-m / 2)) + math.sqrt(tail) * (1 - (1 + ds) ** (-m / 2))
    expected = math.gamma(m - 1) / (4 * math.pi) ** m * integral**2
    assert geometric_upper_bound("i", m, 1, 1, grid) == pytest.approx(expected, rel=1e-10)


def test_event_profile_steps_match_counts():
    m, N = 12, 8
    ev = event_profile(OrderSpec.full(), "i", N, delta_star(m))
    for d in (0.0, 0.3, 1.0, 4.5, 20.0, 60.0):
        steps = [int(np.count_nonzero((ev.n == n) & (ev.u <= d))) for n in range(1, N + 1)]
        assert steps == list(count_profile(OrderSpec.full(), "i", N, d, method="sweep").counts)


def test_event_and_grid_evaluators_agree():
    m, N = 12, 8
    ev = event_profile(OrderSpec.full(), "i", N, delta_star(m))
    breaks = np.unique(ev.u)
    deltas = (0.0,) + tuple(float(u) for u in breaks if u > 0)
    counts = tuple(tuple(int(np.count_nonzero((ev.n == n) & (ev.u <= d))) for n in range(1, N + 1)) for d in deltas)
    grid = ProfileGrid(deltas + (delta_star(m),), counts + (counts[-1],))
    assert geometric_upper_bound("i", m, 1, 1, ev) == pytest.approx(geometric_upper_bound("i", m, 1, 1, grid), rel=1e-12)


def test_geometric_bound_golden():
    val = geometric_upper_bound_at("i", 12)
    assert math.isfinite(val) and val > 0
    assert val == pytest.approx(float(GOLDEN["geometric_upper_bound_m12_i"]), rel=1e-9)


def test_geometric_bound_needs_cover():
    with pytest.raises(ValueError):
        geometric_upper_bound("i", 12, 1, 1, ProfileGrid((0.0, 0.5), ((1,), (1,))))
