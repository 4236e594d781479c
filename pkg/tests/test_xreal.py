import itertools
import math

import pytest
from hypothesis import given, strategies as st

from entroad.errors import DomainError
from entroad.xreal import (NEG_INF, POS_INF, ext_real, format_xr, parse_xr, xr_add, xr_combine, xr_sum,
                           xr_sup)

TAGGED = [NEG_INF, -2.5, 0.0, 1.0, 3.75, POS_INF]
xreals = st.one_of(st.floats(-1e6, 1e6, allow_nan=False), st.sampled_from([NEG_INF, POS_INF]))
# weights whose complement is exact; otherwise 1 - lam rounds to 1 and the projection case kicks in
lams = st.floats(0.0, 1.0).filter(lambda l: 1.0 - (1.0 - l) == l)


def close(a, b, tol=1e-12):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * (1 + abs(a) + abs(b))


def test_combine_examples():
    assert xr_combine(0.5, NEG_INF, POS_INF) == NEG_INF
    assert xr_combine(1.0, 3.0, NEG_INF) == 3.0
    assert xr_combine(0.25, 4.0, 8.0) == 7.0
    assert xr_combine(0.0, NEG_INF, 2.0) == 2.0
    assert xr_combine(0.3, 1.0, POS_INF) == POS_INF


def test_combine_rejects_bad_weight():
    for lam in (-0.1, 1.5, math.nan):
        with pytest.raises(DomainError):
            xr_combine(lam, 1.0, 2.0)


def test_nan_rejected():
    with pytest.raises(DomainError):
        ext_real(math.nan)
    with pytest.raises(DomainError):
        xr_add(math.nan, 1.0)


def test_add_examples():
    assert xr_add(POS_INF, NEG_INF) == NEG_INF
    assert xr_add(NEG_INF, POS_INF) == NEG_INF
    assert xr_add(2.5, POS_INF) == POS_INF
    for x in TAGGED:
        assert xr_add(0.0, x) == x


def test_add_monoid_on_all_tags():
    for a, b, c in itertools.product([NEG_INF, 1.5, POS_INF], repeat=3):
        assert xr_add(a, b) == xr_add(b, a)
        assert xr_add(xr_add(a, b), c) == xr_add(a, xr_add(b, c))
        assert xr_add(a, 0.0) == a
    assert xr_sum([]) == 0.0
    assert xr_sum([1.0, POS_INF, NEG_INF]) == NEG_INF


def test_sup_examples():
    assert xr_sup([]) == NEG_INF
    assert xr_sup([1.0, 2.0, NEG_INF]) == 2.0

    def stream():
        n = 0
        while True:
            yield POS_INF if n == 50 else float(n)
            n += 1

    assert xr_sup(stream()) == POS_INF


def test_format_round_trip():
    assert format_xr(POS_INF) == "+inf" and format_xr(NEG_INF) == "-inf"
    for x in TAGGED:
        assert parse_xr(format_xr(x)) == x


def test_combine_associativity_grid():
    grid = [0.0, 0.2, 0.5, 0.7, 1.0]
    for lam, mu in itertools.product(grid, repeat=2):
        lp = lam * mu
        if lp == 1.0:
            mup = 0.0
        else:
            mup = 1.0 - (1.0 - lam) / (1.0 - lp)
        for x, y, z in itertools.product(TAGGED[::2] + [TAGGED[-1]], repeat=3):
            lhs = xr_combine(lam, xr_combine(mu, x, y), z)
            rhs = xr_combine(lp, x, xr_combine(mup, y, z))
            assert close(lhs, rhs, 1e-12), (lam, mu, x, y, z, lhs, rhs)


@given(lams, xreals, xreals)
def test_combine_symmetry_and_idempotence(lam, x, y):
    assert close(xr_combine(lam, x, y), xr_combine(1.0 - lam, y, x))
    assert close(xr_combine(lam, x, x), x, 1e-12)


@given(st.lists(xreals), st.lists(xreals))
def test_sup_union(a, b):
    assert xr_sup(a + b) == max(xr_sup(a), xr_sup(b))


@given(xreals, xreals, xreals)
def test_add_laws(a, b, c):
    assert xr_add(a, b) == xr_add(b, a)
    assert close(xr_add(xr_add(a, b), c), xr_add(a, xr_add(b, c)), 1e-12)
