import math

import mpmath
import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from entroad.catalog import (CATALOG, bath_coupling, canonical, check_entry, gas_equalization, grand_canonical,
                             microcanonical, microcanonical_entry, two_tanks)
from entroad.errors import DomainError
from entroad.optimize import INFEASIBLE, UNBOUNDED, SolverConfig, legendre_transform
from entroad.system import ideal_gas
from entroad.xreal import NEG_INF, POS_INF

CFG = SolverConfig()


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2 * e[i])
    return g


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_entry_matches_reference(name):
    rows = check_entry(CATALOG[name](), CFG)
    assert rows and all(r.ok for r in rows), [(r.query, r.gap, r.argmax_gap, r.status) for r in rows]


def test_two_tanks_examples():
    e = two_tanks(1.0, 2.0)
    res = e.solve([3.0], CFG)
    assert res.argmax == pytest.approx([1.0, 2.0], abs=1e-4)
    sym = two_tanks(1.5, 1.5)
    for U in (0.7, 5.0):
        assert sym.solve([U], CFG).argmax == pytest.approx([U / 2, U / 2], abs=1e-4)
    diffs = [e.solve([U], CFG).value - 3.0 * math.log(U) for U in range(1, 11)]
    assert max(diffs) - min(diffs) <= 1e-6
    with pytest.raises(DomainError):
        two_tanks(0.0, 1.0)


def test_gas_equalization_temperatures_and_pressures():
    e = gas_equalization()
    res = e.solve(e.queries[0], CFG)
    x = res.argmax
    assert x[:3] == pytest.approx(x[3:], abs=1e-4)
    S1, S2 = e.systems[0].entropy, e.systems[1].entropy
    g1, g2 = fd_grad(lambda v: float(S1(v)), x[:3]), fd_grad(lambda v: float(S2(v)), x[3:])
    assert abs(g1[0] - g2[0]) <= 1e-3 * abs(g2[0])
    assert abs(g1[1] - g2[1]) <= 1e-3 * abs(g2[1])


def test_gas_equalization_unequal_masses():
    e = gas_equalization(m1=1.0, m2=3.0, U=3.0, V=2.0, N1=1.0, N2=2.0)
    rows = check_entry(e, CFG)
    assert all(r.ok for r in rows)


def test_bath_coupling_gas_matches_legendre():
    e = bath_coupling(T=2.0)
    for y in e.queries:
        v = e.solve(y, CFG).value
        assert v == pytest.approx(legendre_transform(ideal_gas(), 0.5, y), abs=1e-6)


def test_bath_coupling_tank_and_affine():
    assert bath_coupling(T=1.0, system="tank").solve([], CFG).value == pytest.approx(-1.0, abs=1e-8)
    # calculus oracle: sup of log U - U at U = 1
    orc = minimize_scalar(lambda u: -(math.log(u) - u), bounds=(1e-6, 10), method="bounded")
    assert -orc.fun == pytest.approx(-1.0, abs=1e-8)
    res = bath_coupling(T=1.0, system="affine", slope=2.0).solve([], CFG)
    assert res.value == POS_INF and res.status == UNBOUNDED
    res = bath_coupling(T=1.0, system="affine", slope=0.5).solve([], CFG)
    assert res.value == pytest.approx(0.0, abs=1e-8)


def test_bath_coupling_negative_temperature():
    assert bath_coupling(T=-1.0).solve([1.0, 1.0], CFG).value == POS_INF
    with pytest.raises(DomainError):
        bath_coupling(T=0.0)


def test_canonical_uniform_at_zero_beta():
    res = canonical(beta=0.0).solve([], CFG)
    assert res.argmax[:3] == pytest.approx([1 / 3] * 3, abs=1e-6)
    assert res.value == pytest.approx(math.log(3), abs=1e-8)


def test_canonical_two_level_high_precision():
    mpmath.mp.dps = 40
    Z = 1 + mpmath.e ** -1
    ref = [float(1 / Z), float(mpmath.e ** -1 / Z)]
    assert ref[0] == pytest.approx(0.7311, abs=1e-4)
    res = canonical(H=[0.0, 1.0], beta=1.0).solve([], CFG)
    assert res.argmax[:2] == pytest.approx(ref, abs=1e-6)
    assert res.value == pytest.approx(float(mpmath.log(Z)), abs=1e-8)
    # scalar oracle on the 1-simplex
    orc = minimize_scalar(lambda p: -(-p * math.log(p) - (1 - p) * math.log(1 - p) - (1 - p)),
                          bounds=(1e-9, 1 - 1e-9), method="bounded", options={"xatol": 1e-12})
    assert orc.x == pytest.approx(ref[0], abs=1e-6)


def test_canonical_argmax_constraints():
    H = np.array([0.0, 1.0, 2.0])
    res = canonical(H, beta=1.3).solve([], CFG)
    p, U = res.argmax[:3], res.argmax[3]
    assert abs(p.sum() - 1) <= 1e-10
    assert abs(p @ H + U) <= 1e-8


def test_grand_canonical_examples():
    mpmath.mp.dps = 40
    res = grand_canonical(H=[0, 1], M=[0, 1], beta=1.0, mu=1.0).solve([], CFG)
    w = [mpmath.mpf(1), mpmath.e ** -2]
    Z = sum(w)
    assert res.argmax[:2] == pytest.approx([float(v / Z) for v in w], abs=1e-6)
    assert res.value == pytest.approx(float(mpmath.log(Z)), abs=1e-8)
    p = res.argmax[:2]
    direct = -np.sum(p * np.log(p)) - p @ [0, 1] - 1.0 * (p @ [0, 1])
    assert direct == pytest.approx(res.value, abs=1e-8)


def test_grand_canonical_mu_zero_is_canonical():
    g = grand_canonical(H=[0, 1], M=[0, 1], beta=1.0, mu=0.0).solve([], CFG)
    c = canonical(H=[0, 1], beta=1.0).solve([], CFG)
    assert g.value == c.value
    assert np.array_equal(g.argmax[:2], c.argmax[:2])


def test_microcanonical_examples():
    v, p = microcanonical([1, 2, 2, 3], 2.0)
    assert v == math.log(2) and np.array_equal(p, [0, 0.5, 0.5, 0])
    v, p = microcanonical([1, 2, 2, 3], 5.0)
    assert v == NEG_INF and p is None
    v, p = microcanonical([4, 4, 4], 4.0)
    assert v == math.log(3)
    v, p = microcanonical([1, 2, 2, 3], 2.0, method="optimize")
    assert v == pytest.approx(math.log(2), abs=1e-8)
    assert p == pytest.approx([0, 0.5, 0.5, 0], abs=1e-6)
    assert microcanonical([1, 2, 2, 3], 5.0, method="optimize")[0] == NEG_INF


def test_microcanonical_tolerance_and_entry():
    v, _ = microcanonical([1.0, 2.0 + 1e-12, 2.0], 2.0)
    assert v == 0.0
    v, _ = microcanonical([1.0, 2.0 + 1e-12, 2.0], 2.0, tol_level=1e-9)
    assert v == pytest.approx(math.log(2))
    rows = check_entry(microcanonical_entry(), CFG)
    assert [r.status for r in rows][-1] == INFEASIBLE
