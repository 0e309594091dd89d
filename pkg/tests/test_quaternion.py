import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import quat_box_count, quat_conj_count

from theta_moments.quaternion import (
    CartanParams,
    DivisionOrderModel,
    ImagQuadField,
    count_quat,
    division_bound_rhs,
    quat_norm,
    quat_profile,
    quat_u,
)

MODEL = DivisionOrderModel.default()
ID = CartanParams()
F19 = ImagQuadField(-19)


def test_norm_and_u_examples():
    assert quat_norm((1, 0), (0, 0), 6) == 1 and quat_u((1, 0), (0, 0), 6) == 0
    assert F19.norm(1, 1) == 7
    assert quat_norm((1, 1), (1, 0), 6) == 1 and quat_u((1, 1), (1, 0), 6) == 6
    assert quat_norm((2, 0), (0, 0), 6) == 4 and quat_u((2, 0), (0, 0), 6) == 0


def test_count_examples():
    assert count_quat(MODEL, ID, 1, 0) == 2
    assert count_quat(MODEL, ID, 4, 0) == 2
    assert count_quat(MODEL, ID, 1, 6) == 10


def test_default_primes_inert():
    # 2 and 3 are inert in Q(sqrt -19): no element of norm 2 or 3 and no solution of x^2 + x + 5 = 0 mod p
    assert F19.count_representations(2) == 0 and F19.count_representations(3) == 0
    for p in (2, 3):
        assert all((x * x + x + 5) % p for x in range(p))


@pytest.mark.parametrize("delta", [0.0, 0.5, 6.0])
def test_brute_force_equivalence(delta):
    got = quat_profile(MODEL, ID, 100, delta)
    assert got == [quat_box_count(n, delta) for n in range(1, 101)]


def test_b_zero_slice_is_norm_form_count():
    for n in range(1, 80):
        brute = sum(1 for x in range(-12, 13) for y in range(-12, 13) if x * x + x * y + 5 * y * y == n)
        assert count_quat(MODEL, ID, n, 0) == brute == F19.count_representations(n)


@settings(max_examples=40)
@given(st.integers(1, 60), st.floats(0, 8), st.floats(0, 8))
def test_monotone_and_even(n, d1, d2):
    lo, hi = sorted((d1, d2))
    a, b = count_quat(MODEL, ID, n, lo), count_quat(MODEL, ID, n, hi)
    assert a <= b and a % 2 == 0 and b % 2 == 0


@pytest.mark.parametrize("lam,theta", [(1.5, 0.0), (3.0, 0.7), (2.0, 2.0)])
@pytest.mark.parametrize("n", [1, 5, 7, 20])
@pytest.mark.parametrize("delta", [0.5, 2.0])
def test_conjugated_count_matches_matrix_oracle(lam, theta, n, delta):
    strict, loose = quat_conj_count(n, delta, lam, theta)
    got = count_quat(MODEL, CartanParams(lam, theta), n, delta)
    assert strict <= got <= loose


def test_conjugation_by_identity_agrees():
    for n in (1, 4, 7, 11):
        assert count_quat(MODEL, CartanParams(1.0 + 1e-15, 0.3), n, 2.0) == count_quat(MODEL, ID, n, 2.0)


def different_lattice_brute(n, delta, D_B=6):
    """Scan alpha, beta in O_E with alpha + beta in sqrt(-19) O_E, i.e. x + 10 y = 0 mod 19."""
    R = int(math.ceil(math.sqrt(3 * 19 * n * (1 + delta)))) + 1
    r = np.arange(-R, R + 1)
    X, Y = (t.ravel() for t in np.meshgrid(r, r, indexing="ij"))
    nr = X * X + X * Y + 5 * Y * Y
    total = 0
    cap = Fraction(repr(float(delta))) * n * 19
    for i in np.nonzero(D_B * nr <= float(cap) + 1)[0]:
        if D_B * int(nr[i]) > cap:
            continue
        hit = (nr == 19 * n + D_B * int(nr[i])) & ((X + X[i] + 10 * (Y + Y[i])) % 19 == 0)
        total += int(np.count_nonzero(hit))
    return total


@pytest.mark.parametrize("delta", [0.0, 1.0, 6.0])
def test_different_lattice_against_residue_oracle(delta):
    model = DivisionOrderModel.default("different")
    for n in range(1, 13):
        assert count_quat(model, ID, n, delta) == different_lattice_brute(n, delta)


def test_division_bound_examples():
    assert division_bound_rhs(1, 0, 1, -19) == pytest.approx(1444)
    assert division_bound_rhs(100, 0.01, 1, -19) == pytest.approx(324900)
    for lam in (1.3, 2.0, 7.5):
        for delta in (0.01, 0.5, 2.0):
            assert division_bound_rhs(50, delta, lam, -19) == pytest.approx(division_bound_rhs(50, delta, 1 / lam, -19),
                                                                             rel=1e-12)


def test_second_moment_trend_reported():
    Ns = [50, 100, 200]
    moments = [math.fsum(c * c for c in quat_profile(MODEL, ID, N, N ** -0.5)) for N in Ns]
    slope = np.polyfit(np.log(Ns), np.log(moments), 1)[0]
    print(f"quaternion second moments {dict(zip(Ns, moments))}, fitted exponent {slope:.3f}")
    assert all(m > 0 for m in moments) and math.isfinite(slope)


def test_field_validation():
    with pytest.raises(ValueError):
        ImagQuadField(-18)
    with pytest.raises(ValueError):
        DivisionOrderModel(F19, 4)
    with pytest.raises(ValueError):
        CartanParams(0.5)
    with pytest.raises(ValueError):
        count_quat(MODEL, ID, 0, 1.0)


def test_quat_u_is_exact():
    assert isinstance(quat_u((3, 1), (1, 0), 6), Fraction)
