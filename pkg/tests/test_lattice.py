import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import box_constrained, box_profile

from theta_moments.halfplane import Point, point_matrix
from theta_moments.lattice import (
    CountProfile,
    CountQuery,
    OrderSpec,
    count_norm_ball,
    count_profile,
    enumerate_constrained,
    second_moment,
    split_bound_rhs,
    u_exact,
)

FULL = OrderSpec.full()
I2 = np.eye(2)


def q(order, z, n, delta):
    return count_norm_ball(CountQuery(order, point_matrix(z), n, delta))


@pytest.mark.parametrize("order,bound,expected", [
    (FULL, 2.5, 33), (FULL, 0.5, 1), (OrderSpec.eichler_split(2), 1.5, 7),
])
def test_enumerate_constrained_examples(order, bound, expected):
    got = enumerate_constrained(order, I2, I2, bound)
    assert len(got) == expected == box_constrained(bound, order.level)


def test_enumerate_constrained_oracle_wider():
    for bound in (3.0, 4.0, 7.5):
        for lvl in (1, 3):
            assert len(enumerate_constrained(OrderSpec.eichler_split(lvl), I2, I2, bound)) == box_constrained(bound, lvl)


def test_count_examples():
    assert q(FULL, "i", 1, 0) == 4
    assert q(FULL, "i", 2, 0) == 4
    assert q(FULL, "i", 1, 0.25) == 20


def test_profile_examples():
    assert count_profile(FULL, "i", 2, 0).counts == (4, 4)
    assert count_profile(FULL, "i", 1, 0.25).counts == (20,)
    assert count_profile(OrderSpec.eichler_split(2), "i", 1, 0).counts == (2,)


def test_second_moment_examples():
    assert second_moment([4, 4], "uniform") == 32
    assert second_moment([4, 4], "reciprocal") == 24
    assert second_moment([20], "exp_tail", A=1) == pytest.approx(400 * math.exp(-1))


@pytest.mark.parametrize("args,expected", [((100, 0.01, 1, 0), 240), ((1, 0, 1, 0), 2), ((1e4, 1e-4, 5, 0), 25200)])
def test_split_bound_examples(args, expected):
    assert split_bound_rhs(*args) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("z", [1j, 2j, 0.3 + 0.8j])
@pytest.mark.parametrize("delta", [0.0, 0.1, 1.0])
def test_profile_matches_box_scan_small(z, delta):
    N = 40
    ref = box_profile(z, N, delta)
    for method in ("ellipsoid", "sweep"):
        assert list(count_profile(FULL, complex(z), N, delta, method=method).counts) == ref


def test_eichler_profile_matches_box_scan():
    for z in (1j, 0.3 + 0.8j):
        for lvl in (2, 3):
            ref = box_profile(z, 30, 0.5, q=lvl)
            assert list(count_profile(OrderSpec.eichler_split(lvl), complex(z), 30, 0.5).counts) == ref


def test_u_exact_rational_point():
    xi = np.array([[1, 1], [0, 1]])
    assert u_exact(xi, Point(0.0, 1.0)) == pytest.approx(0.25)


gamma_entries = st.integers(-3, 3)


@st.composite
def sl2z(draw):
    a, b = draw(gamma_entries), draw(gamma_entries)
    if math.gcd(a, b) != 1:
        a, b = 1, draw(gamma_entries)
    # extended Euclid for c, d with a d - b c = 1
    g, x, y = _egcd(a, b)
    c, d = -y, x
    k = draw(st.integers(-2, 2))
    return np.array([[a, b], [c + k * a, d + k * b]])


def _egcd(a, b):
    if b == 0:
        return (a, 1 if a >= 0 else -1, 0) if a else (0, 0, 1)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


@settings(max_examples=25)
@given(sl2z(), st.integers(1, 12), st.sampled_from([0.0, 0.3, 1.5]))
def test_gamma_invariance(gam, n, delta):
    assert round(np.linalg.det(gam)) == 1
    g = point_matrix(0.3 + 0.8j)
    base = count_norm_ball(CountQuery(FULL, g, n, delta))
    moved = gam.astype(float) @ g
    assert count_norm_ball(CountQuery(FULL, moved, n, delta)) == base


@settings(max_examples=25)
@given(st.integers(1, 20), st.floats(0, 2), st.floats(0, 2))
def test_monotone_in_delta(n, d1, d2):
    lo, hi = sorted((d1, d2))
    assert q(FULL, 0.3 + 0.8j, n, lo) <= q(FULL, 0.3 + 0.8j, n, hi)


@settings(max_examples=20)
@given(st.integers(1, 15), st.sampled_from([0.0, 0.25, 1.0]), st.sampled_from([1, 2, 3]))
def test_transpose_involution(n, delta, lvl):
    order = OrderSpec.eichler_split(lvl)
    g = point_matrix(0.3 + 0.8j)
    lhs = count_norm_ball(CountQuery(order, g, n, delta))
    # u(g^-1 xi g) = u((g^-1 xi g)^T), and xi^T runs over the transposed order
    rhs = count_norm_ball(CountQuery(order.transpose(), np.linalg.inv(g).T, n, delta))
    assert lhs == rhs


@pytest.mark.parametrize("a,b", [(1, 0), (1, 1), (2, 1), (3, 2), (5, 4)])
def test_lower_bound_witness(a, b):
    assert q(FULL, "i", a * a + b * b, 0) >= 4


def test_sums_of_two_squares_at_i():
    # at z = i and delta = 0 the ball is the scaled rotations a I + b w, i.e. r_2(n)
    r2 = lambda n: sum(1 for a in range(-n, n + 1) for b in range(-n, n + 1) if a * a + b * b == n)  # noqa: E731
    assert list(count_profile(FULL, "i", 30, 0).counts) == [r2(n) for n in range(1, 31)]


def test_threads_do_not_change_counts():
    one = count_profile(FULL, 0.3 + 0.8j, 60, 0.5, threads=1)
    many = count_profile(FULL, 0.3 + 0.8j, 60, 0.5, threads=3)
    assert one.counts == many.counts


def test_profile_validation():
    with pytest.raises(ValueError):
        count_profile(FULL, "i", 0, 0.1)
    with pytest.raises(ValueError):
        count_profile(FULL, "i", 3, -1)
    with pytest.raises(ValueError):
        CountQuery(FULL, np.diag([2.0, 1.0]), 1, 0)
    with pytest.raises(ValueError):
        OrderSpec.parse("maximal")
    assert OrderSpec.parse("eichler:5").label() == "eichler:5"
    assert isinstance(count_profile(FULL, "i", 1, 0), CountProfile)


def test_matrix_input_recovers_rational_point():
    # point_matrix(2i) . i comes back as 2.0000000000000004i; the delta = 0 boundary must still hold
    g = point_matrix(2j)
    for n in (4, 5, 8, 13):
        assert count_norm_ball(CountQuery(FULL, g, n, 0.0)) == count_profile(FULL, 2j, n, 0.0).counts[-1] == 4
