import random
from fractions import Fraction as Fr

import pytest

from semitoric.actions import K4, k4_act, k4_canonical, k4_mul, make_series
from semitoric.errors import UndecidableAtDegreeError


def test_spec_examples():
    # b is fixed by (0, 1)
    assert k4_act({(0, 1): Fr(1)}, (0, 1)) == {(0, 1): Fr(1)}
    # 0.3a * (1,0) = -0.3a + 0.5a = 0.2a
    out = k4_act({(1, 0): Fr(3, 10)}, (1, 0))
    assert out == {(1, 0): Fr(1, 5)}
    # identity element
    T = {(1, 0): Fr(1, 3), (0, 2): Fr(-2)}
    assert k4_act(T, (0, 0)) == make_series(T)[0]


def test_every_element_is_an_involution():
    T, _ = make_series({(1, 0): Fr(2, 7), (0, 1): Fr(3), (2, 1): Fr(-1, 4)})
    for j in K4:
        assert k4_act(k4_act(T, j), j) == T


def _random_series(rnd, degree=4):
    coeffs = {}
    for i in range(degree + 1):
        for jj in range(degree + 1 - i):
            if (i, jj) == (0, 0):
                continue
            if rnd.random() < 0.6:
                coeffs[(i, jj)] = Fr(rnd.randint(-9, 9), rnd.randint(1, 12))
    return make_series(coeffs)[0]


def test_right_action_law_random():
    rnd = random.Random(7)
    for _ in range(300):
        T = _random_series(rnd)
        for j1 in K4:
            for j2 in K4:
                assert k4_act(k4_act(T, j1), j2) == k4_act(T, k4_mul(j1, j2))


def test_a_coefficient_orbit():
    T = {(1, 0): Fr(3, 5), (0, 1): Fr(2), (2, 1): Fr(-1, 3)}
    orbit = sorted(k4_act(T, j).get((1, 0), Fr(0)) for j in K4)
    assert orbit == [Fr(1, 10), Fr(2, 5), Fr(3, 5), Fr(9, 10)]
    can, j = k4_canonical(T)
    assert can[(1, 0)] == Fr(1, 10)
    # the canonical representative's orbit contains the input
    assert any(k4_act(can, jj) == make_series(T)[0] for jj in K4)


def test_canonical_orbit_constant():
    rnd = random.Random(11)
    for _ in range(200):
        T = _random_series(rnd)
        if (4 * T.get((1, 0), Fr(0))) % 1 == 0:
            continue  # boundary cases exercised separately
        reps = [k4_canonical(k4_act(T, j))[0] for j in K4]
        assert all(r == reps[0] for r in reps)
        a = reps[0].get((1, 0), Fr(0))
        assert Fr(0) < a < Fr(1, 4)


def test_sign_rule_at_zero_a_coefficient():
    # C10 = 0 and the first relevant coefficient negative: flipped by (0,1)
    T = {(0, 2): Fr(-1, 2), (1, 1): Fr(5)}
    can, j = k4_canonical(T)
    assert can[(0, 2)] == Fr(1, 2)
    assert j in ((0, 1), (1, 1))
    # already-positive representative is fixed
    T2 = {(0, 2): Fr(1, 2), (1, 1): Fr(5)}
    can2, j2 = k4_canonical(T2)
    assert can2 == make_series(T2)[0]


def test_sign_rule_at_quarter():
    T = {(1, 0): Fr(1, 4), (3, 0): Fr(-2, 3)}
    can, _ = k4_canonical(T)
    assert can[(1, 0)] == Fr(1, 4)
    assert can[(3, 0)] == Fr(2, 3)


def test_undecidable_at_degree():
    # C10 = 0 and every even-b coefficient vanishes within the truncation
    T = {(0, 1): Fr(3), (1, 1): Fr(1, 2)}
    with pytest.raises(UndecidableAtDegreeError):
        k4_canonical(T)


def test_half_orbit_reduction():
    # a-coefficient 0.6 has orbit {0.6, 0.4, 0.1, 0.9}; the diagonal
    # subgroup alone reaches [0, 1/2)
    T = {(1, 0): Fr(3, 5), (0, 1): Fr(1)}
    flipped = k4_act(T, (1, 1))
    assert flipped[(1, 0)] == Fr(1, 10)
