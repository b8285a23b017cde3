from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import qmc

from qmclab.sequences import (
    DirectionNumberError,
    DirectionNumberRecord,
    DyadicRational,
    digital_net_numerators,
    digital_point_numerators,
    halton_point,
    is_tmd_net,
    load_direction_numbers,
    radical_inverse,
    smallest_t,
    sobol_generator_set,
    sobol_point,
    van_der_corput_dyadic,
)

HEADER = "d       s       a       m_i"


def _net(records, d, m):
    gens = sobol_generator_set(records, d, m)
    return [tuple(DyadicRational(int(v), m) for v in row)
            for row in digital_net_numerators(gens, 1 << m)]


@pytest.mark.parametrize("i,b,expected", [
    (0, 2, Fraction(0)),
    (3, 2, Fraction(3, 4)),
    (5, 3, Fraction(7, 9)),
    (1, 2, Fraction(1, 2)),
    (6, 2, Fraction(3, 8)),
])
def test_radical_inverse_examples(i, b, expected):
    assert radical_inverse(i, b) == expected


def test_radical_inverse_rejects_base_one():
    with pytest.raises(ValueError):
        radical_inverse(3, 1)


@given(st.integers(0, 10**6), st.integers(2, 17))
def test_radical_inverse_in_unit_interval(i, b):
    x = radical_inverse(i, b)
    assert 0 <= x < 1
    # i < b^20, so at most 20 base-b digits
    assert (x * b**20).denominator == 1


@given(st.integers(0, 2**20 - 1))
def test_dyadic_vdc_matches_radical_inverse(i):
    assert van_der_corput_dyadic(i, 20).to_fraction() == radical_inverse(i, 2)


@given(st.integers(1, 12))
def test_vdc_prefix_is_permutation_of_grid(m):
    nums = sorted(van_der_corput_dyadic(i, m).numerator for i in range(1 << m))
    assert nums == list(range(1 << m))


def test_dyadic_rational_value_equality():
    assert DyadicRational(2, 3) == DyadicRational(1, 2)
    assert DyadicRational(1, 2) < DyadicRational(3, 3)
    assert hash(DyadicRational(2, 3)) == hash(DyadicRational(1, 2))
    with pytest.raises(ValueError):
        DyadicRational(4, 2)


@pytest.mark.parametrize("i,expected", [
    (1, (Fraction(1, 2), Fraction(1, 3))),
    (0, (Fraction(0), Fraction(0))),
    (5, (Fraction(5, 8), Fraction(7, 9))),
])
def test_halton_examples(i, expected):
    assert halton_point(i, [2, 3]) == expected


def test_halton_rejects_non_coprime_bases():
    with pytest.raises(ValueError):
        halton_point(1, [2, 4])


# -- direction numbers -------------------------------------------------------


def test_load_records_examples():
    recs = load_direction_numbers([HEADER, "2 1 0 1", "3 2 1 1 3"])
    assert recs == [DirectionNumberRecord(2, 1, 0, (1,)), DirectionNumberRecord(3, 2, 1, (1, 3))]


@pytest.mark.parametrize("bad,fragment", [
    ("2 1 0 2", "even"),
    ("2 1 0", "fields"),
    ("2 x 0 1", "integer"),
    ("3 2 1 1", "initial values"),
    ("3 2 1 1 5", "2^"),
    ("3 2 4 1 3", "a"),
])
def test_load_records_errors_report_line(bad, fragment):
    with pytest.raises(DirectionNumberError) as err:
        load_direction_numbers([HEADER, "2 1 0 1", bad])
    msg = str(err.value)
    assert "line 3" in msg
    assert fragment in msg


def test_packaged_fixture_covers_fifty_dimensions(records):
    assert [r.d for r in records] == list(range(2, 51))
    assert records[0] == DirectionNumberRecord(2, 1, 0, (1,))
    assert records[1] == DirectionNumberRecord(3, 2, 1, (1, 3))


def test_first_dimension_is_identity(records):
    gens = sobol_generator_set(records, 1, 4)
    assert np.array_equal(gens.matrix(0), np.eye(4, dtype=np.uint8))


@pytest.mark.parametrize("m", [1, 5, 17, 32])
def test_second_dimension_upper_unitriangular(records, m):
    C = sobol_generator_set(records, 2, m).matrix(1)
    assert np.array_equal(np.tril(C), np.eye(m, dtype=C.dtype))


def test_missing_dimension_raises(records):
    with pytest.raises(KeyError):
        sobol_generator_set(records, 60, 4)


def test_zero_index_maps_to_origin(records):
    gens = sobol_generator_set(records, 5, 10)
    assert digital_point_numerators(0, gens) == (0,) * 5


@given(st.integers(0, 1023))
def test_identity_generator_reproduces_vdc(i):
    gens = sobol_generator_set([], 1, 10)
    assert sobol_point(i, gens)[0].to_fraction() == radical_inverse(i, 2)


def test_first_eight_points_permute_grid(records):
    gens = sobol_generator_set(records, 2, 3)
    pts = digital_net_numerators(gens, 8)
    for j in range(2):
        assert sorted(pts[:, j].tolist()) == list(range(8))


@pytest.mark.parametrize("d", [2, 3, 4, 8, 50])
def test_points_match_scipy_gray_code_order(records, d):
    # scipy emits our point gray(i) = i ^ (i >> 1) at position i
    m = 10
    n = 1 << m
    ref = qmc.Sobol(d, scramble=False).random_base2(m)
    ours = digital_net_numerators(sobol_generator_set(records, d, m), n) / n
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    assert np.array_equal(ref, ours[gray].astype(float))


def test_high_precision_numerators_are_python_ints(records):
    gens = sobol_generator_set(records, 2, 80)
    pts = digital_net_numerators(gens, 4)
    assert pts.dtype == object
    assert int(pts[1, 0]) == 1 << 79


# -- net property ---------------------------------------------------------------


@pytest.mark.parametrize("m", range(1, 9))
def test_vdc_prefix_is_zero_net(m):
    pts = [(van_der_corput_dyadic(i, m),) for i in range(1 << m)]
    assert is_tmd_net(pts, 0, m, 1)


def test_sobol_2d_first_16_points_zero_net(records):
    assert is_tmd_net(_net(records, 2, 4), 0, 4, 2)


@pytest.mark.parametrize("m", [1, 3, 6])
def test_repeated_origin_is_not_net(m):
    pts = [(Fraction(0),)] * (1 << m)
    assert not is_tmd_net(pts, 0, m, 1)
    assert smallest_t(pts, m, 1) == m


def test_net_check_requires_b_to_the_m_points():
    with pytest.raises(ValueError):
        is_tmd_net([(Fraction(0),)] * 3, 0, 2, 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2))
def test_net_property_is_monotone_in_t(m, t):
    from qmclab.sequences import default_direction_numbers

    pts = _net(default_direction_numbers(), 3, m)
    if is_tmd_net(pts, t, m, 3):
        assert is_tmd_net(pts, min(t + 1, m), m, 3)


@pytest.mark.slow
def test_d4_m8_elementary_interval_overfull(records):
    # independent of is_tmd_net: count interval k=(0,2,3,1), c=0 directly
    m = 8
    pts = digital_net_numerators(sobol_generator_set(records, 4, m), 1 << m)
    k = (0, 2, 3, 1)
    inside = np.all([(pts[:, j] >> (m - k[j])) == 0 for j in range(4)], axis=0)
    assert inside.sum() == 8
    assert 1 << (m - sum(k)) == 4
