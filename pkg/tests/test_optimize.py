import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from entroad.convex import Orthant, Polyhedron, RealLine, Simplex, Singleton, product
from entroad.errors import ConvergenceError, DomainError, UnsupportedError
from entroad.optimize import (APPROACHED, ATTAINED, INFEASIBLE, UNBOUNDED, SolverConfig, brute_force,
                              brute_force_sup, legendre_transform, maximize, nested_sup, parallel_map, pushforward,
                              thread_count)
from entroad.relation import ConstraintSet, affine, compose, fiber, full, graph, identity
from entroad.system import (Affine, LogTank, Quadratic, Shannon, Sum, ThermostaticSystem, evaluate, ideal_gas,
                            shannon_system, sum_systems, tank)
from entroad.xreal import NEG_INF, POS_INF

CFG = SolverConfig()
E = Orthant(1)
MERGE = affine(product(E, E), E, A=[[1.0, 1.0]], B=[[-1.0]], c=[0.0])


def box(lo, hi):
    return Polyhedron(1, ineq=[([-1.0], -lo), ([1.0], hi)])


def two_tank_fn(C1=1.0, C2=2.0):
    return Sum(LogTank(C1), LogTank(C2))


def test_quadratic_interior_optimum():
    res = maximize(Quadratic([[1.0]], [1.0]), ConstraintSet.of_space(box(0.0, 3.0)), CFG)
    assert res.status == ATTAINED
    assert res.value == pytest.approx(0.0, abs=1e-8)
    assert res.argmax[0] == pytest.approx(1.0, abs=1e-6)


def test_two_tanks_against_scalar_oracle():
    f = two_tank_fn()
    res = maximize(f, fiber(MERGE, [3.0]), CFG)
    # independent 1-D oracle over U1 in (0, 3)
    orc = minimize_scalar(lambda u: -(math.log(u) + 2 * math.log(3 - u)), bounds=(1e-9, 3 - 1e-9),
                          method="bounded", options={"xatol": 1e-12})
    assert res.argmax == pytest.approx([orc.x, 3 - orc.x], abs=1e-5)
    assert res.argmax == pytest.approx([1.0, 2.0], abs=1e-5)
    assert res.value == pytest.approx(-orc.fun, abs=1e-8)


def test_empty_feasible_set():
    res = maximize(LogTank(1.0), ConstraintSet.of_space(Polyhedron(1, ineq=[([1.0], 0.0), ([-1.0], -1.0)])), CFG)
    assert res.value == NEG_INF and res.status == INFEASIBLE and res.argmax is None


def test_pushforward_infinities():
    up = pushforward(tank(1.0), full(E, Singleton()))
    res = up.entropy.solve([], CFG)
    assert res.value == POS_INF and res.status == UNBOUNDED
    assert res.certificate is not None and res.certificate[0] > 0
    inc = pushforward(tank(1.0), graph(E, RealLine(1), [[1.0]]))
    assert evaluate(inc, [-1.0]) == NEG_INF
    assert evaluate(inc, [0.0]) == NEG_INF
    assert evaluate(inc, [2.0]) == pytest.approx(math.log(2.0), abs=1e-9)


def test_pushforward_space_mismatch():
    with pytest.raises(DomainError):
        pushforward(tank(1.0), MERGE)


def test_identity_pushforward_preserves_entropy():
    S = shannon_system(2)
    P = pushforward(S, identity(S.space))
    for p in ([0.2, 0.3, 0.5], [1 / 3] * 3, [0.6, 0.4, 0.0]):
        assert evaluate(P, p) == pytest.approx(evaluate(S, p), abs=1e-8)


def test_approached_on_open_set():
    # sup of x over 0 < x < 1 is 1, not attained
    sp = Polyhedron(1, ineq=[([-1.0], 0.0, True), ([1.0], 1.0, True)])
    res = maximize(Affine([1.0]), ConstraintSet.of_space(sp), CFG)
    assert res.status == APPROACHED and res.argmax is None
    assert res.value == pytest.approx(1.0, abs=1e-6)


def test_unbounded_affine():
    res = maximize(Affine([1.0, 0.5]), ConstraintSet.of_space(RealLine(2)), CFG)
    assert res.value == POS_INF and res.status == UNBOUNDED
    d = res.certificate
    assert d @ [1.0, 0.5] > 0


def test_bounded_affine_on_unbounded_set():
    # constant on an unbounded set stays finite
    res = maximize(Affine([0.0]), ConstraintSet.of_space(E), CFG)
    assert res.value == pytest.approx(0.0, abs=1e-12) and res.status != UNBOUNDED


def test_convergence_error_carries_best():
    with pytest.raises(ConvergenceError) as info:
        maximize(two_tank_fn(), fiber(MERGE, [3.0]), SolverConfig(max_iters=2))
    assert info.value.best is not None
    assert np.isfinite(info.value.best.value)


def test_monotonicity_dropping_constraints():
    f = Sum(LogTank(1.0), LogTank(2.0))
    tight = affine(product(E, E), E, A=[[1.0, 1.0]], B=[[-1.0]], c=[0.0], G=[[1.0, 0.0]], H=[[0.0]], h=[0.5])
    for U in (1.0, 3.0, 6.0):
        a = maximize(f, fiber(tight, [U]), CFG).value
        b = maximize(f, fiber(MERGE, [U]), CFG).value
        assert b >= a - 1e-9
    assert maximize(f, ConstraintSet.of_space(product(E, E)), CFG).value >= b


def test_first_order_condition():
    f = Sum(LogTank(1.5), LogTank(2.5))
    U = 4.0
    x = maximize(f, fiber(MERGE, [U]), CFG).argmax
    d = np.array([1.0, -1.0]) / math.sqrt(2)  # null space of the merge constraint
    h = 1e-5
    g = (f(x + h * d) - f(x - h * d)) / (2 * h)
    assert abs(g) <= 1e-4


def test_brute_force_examples():
    f = two_tank_fn()
    fb = fiber(MERGE, [3.0])
    orc = brute_force(f, fb, SolverConfig(grid_resolution=10000))
    assert abs(orc.value - maximize(f, fb, CFG).value) <= 1e-3
    assert orc.argmax == pytest.approx([1.0, 2.0], abs=1e-3)
    empty = ConstraintSet.of_space(Polyhedron(1, ineq=[([1.0], 0.0), ([-1.0], -1.0)]))
    assert brute_force_sup(LogTank(1.0), empty, CFG) == NEG_INF
    assert brute_force_sup(Shannon(1), ConstraintSet.of_space(Simplex(1)), CFG) == pytest.approx(math.log(2), abs=1e-4)
    with pytest.raises(UnsupportedError):
        brute_force(Shannon(4), ConstraintSet.of_space(Simplex(4)), CFG)


def test_brute_force_unbounded():
    assert brute_force_sup(LogTank(1.0), ConstraintSet.of_space(E), CFG) == POS_INF


def test_oracle_bound_contains_gap():
    f = Sum(LogTank(1.0), LogTank(3.0))
    fb = fiber(MERGE, [2.0])
    orc = brute_force(f, fb, SolverConfig(grid_resolution=300))
    assert abs(orc.value - maximize(f, fb, CFG).value) <= orc.bound


def test_legendre_examples():
    assert legendre_transform(tank(1.0), 1.0) == pytest.approx(-1.0, abs=1e-8)
    lin = ThermostaticSystem(E, Affine([2.0]))
    assert legendre_transform(lin, 1.0) == POS_INF
    assert legendre_transform(lin, 2.0) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(DomainError):
        legendre_transform(ideal_gas(), 1.0, fixed=[1.0])


def test_legendre_matches_bath_pushforward():
    gas = ideal_gas()
    beta = 0.5
    from entroad.system import heat_bath
    joint = sum_systems(gas, heat_bath(1.0 / beta))
    # (U, V, N, Ub) -> (V, N) with U + Ub = 0
    R = affine(joint.space, Orthant(2), A=[[1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0]],
               B=[[0, 0], [-1, 0], [0, -1]], c=[0, 0, 0])
    P = pushforward(joint, R)
    for V in (0.5, 2.0):
        for N in (0.5, 1.5):
            assert evaluate(P, [V, N]) == pytest.approx(legendre_transform(gas, beta, [V, N]), abs=1e-6)


def test_nested_matches_lifted():
    S = sum_systems(tank(1.0), tank(2.0))
    Rp = graph(E, E, [[2.0]])
    lifted = pushforward(S, compose(MERGE, Rp))
    for z in (1.0, 4.0):
        assert nested_sup(S, MERGE, Rp, [z], CFG) == pytest.approx(evaluate(lifted, [z]), abs=1e-7)


def test_parallel_map_matches_sequential(monkeypatch):
    items = list(range(20))
    seq = [x * x for x in items]
    assert parallel_map(lambda x: x * x, items, threads=3) == seq
    monkeypatch.setenv("ENTROAD_THREADS", "0")
    assert thread_count() == 0
    assert parallel_map(lambda x: x * x, items) == seq
    monkeypatch.setenv("ENTROAD_THREADS", "-1")
    with pytest.raises(DomainError):
        thread_count()


def test_solver_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(tol_value=0.0)
    with pytest.raises(DomainError):
        SolverConfig(max_iters=0)


def test_repeat_solves_bit_identical():
    f = Sum(LogTank(1.0), LogTank(2.0))
    a = maximize(f, fiber(MERGE, [3.0]), CFG)
    b = maximize(f, fiber(MERGE, [3.0]), CFG)
    assert a.value == b.value and np.array_equal(a.argmax, b.argmax)
