import numpy as np
import pytest

from entroad.convex import BoundingBox, Orthant, Product, RealLine, Simplex, Singleton, product, sample
from entroad.errors import DomainError
from entroad.relation import affine, compose, fiber, full, graph, identity, member, rel_product
from entroad.optimize import feasible_point

E = Orthant(1)


def merge(k=2):
    src = Orthant(1)
    for _ in range(k - 1):
        src = Product(src, Orthant(1))
    return affine(src, E, A=[[1.0] * k], B=[[-1.0]], c=[0.0])


def test_member_examples():
    F = full(E, Singleton())
    assert member(F, [4.0], [])
    assert not member(F, [-4.0], [])
    assert member(merge(), [1.0, 2.0], [3.0])
    assert not member(merge(), [1.0, 2.0], [3.5])
    inc = graph(E, RealLine(1), [[1.0]])
    assert member(inc, [2.0], [2.0])
    assert not member(inc, [2.0], [2.5])
    assert not member(inc, [-1.0], [-1.0])
    with pytest.raises(DomainError):
        member(merge(), [1.0], [3.0])


def test_identity():
    X = Simplex(2)
    Id = identity(X)
    x = np.array([0.2, 0.3, 0.5])
    assert member(Id, x, x)
    assert not member(Id, x, [0.3, 0.2, 0.5])


def test_fiber_examples():
    fb = fiber(merge(), [3.0])
    assert fb.contains([1.0, 2.0]) and fb.contains([2.9, 0.1])
    assert not fb.contains([1.0, 1.0]) and not fb.contains([3.0, 0.0])
    inc = graph(E, RealLine(1), [[1.0]])
    assert feasible_point(fiber(inc, [-1.0]).system) is None
    whole = fiber(full(E, Singleton()), [])
    assert whole.contains([1e6]) and not whole.contains([0.0])
    with pytest.raises(DomainError):
        fiber(merge(), [-1.0])


def _points(space, seed, n, lo=0.05, hi=4.0):
    return sample(space, BoundingBox.cube(space.dim, lo, hi), seed, n)


def test_compose_identity_unit():
    R = merge()
    C = compose(identity(R.source), R)
    C2 = compose(R, identity(R.target))
    rng = np.random.default_rng(1)
    for x in _points(R.source, 2, 20):
        for y in (np.array([x.sum()]), np.array([x.sum() + rng.uniform(0.1, 1.0)])):
            assert member(C, x, y) == member(R, x, y) == member(C2, x, y)


def test_compose_graphs():
    X, Y, Z = RealLine(2), RealLine(2), RealLine(1)
    f = graph(X, Y, [[1.0, 2.0], [0.0, -1.0]], [1.0, 0.0])
    g = graph(Y, Z, [[3.0, 1.0]], [-2.0])
    gf = graph(X, Z, g.M @ f.M, g.M @ f.m + g.m)
    C = compose(f, g)
    rng = np.random.default_rng(4)
    for _ in range(15):
        x = rng.uniform(-3, 3, size=2)
        z = gf.apply(x)
        assert member(C, x, z) and member(gf, x, z)
        assert not member(C, x, z + 0.5)


def test_two_stage_merge_equals_one_stage():
    three = product(product(E, E), E)
    stage1 = rel_product(merge(), identity(E))  # (U1,U2,U3) -> (U12,U3)
    two = compose(stage1, merge())
    one = merge(3)
    rng = np.random.default_rng(7)
    agree = 0
    for x in _points(three, 8, 25):
        for y in (x.sum(), x.sum() * rng.uniform(0.5, 1.5)):
            assert member(two, x, [y]) == member(one, x, [y])
            agree += 1
    assert agree == 50


def test_rel_product():
    F = rel_product(full(E, Singleton()), full(E, Singleton()))
    assert member(F, [1.0, 2.0], [])
    assert not member(F, [1.0, -2.0], [])
    f = graph(RealLine(1), RealLine(1), [[2.0]])
    g = graph(RealLine(1), RealLine(1), [[-1.0]], [1.0])
    fg = graph(RealLine(2), RealLine(2), [[2.0, 0.0], [0.0, -1.0]], [0.0, 1.0])
    P = rel_product(f, g)
    for x in np.random.default_rng(0).uniform(-2, 2, size=(10, 2)):
        y = fg.apply(x)
        assert member(P, x, y) and member(fg, x, y)
        assert not member(P, x, y + [0.0, 0.1])


def test_membership_is_convex():
    R = affine(product(E, E), E, A=[[1.0, 1.0]], B=[[-1.0]], c=[0.0], G=[[1.0, -2.0]], H=[[0.0]], h=[1.0])
    pairs = []
    for x in _points(R.source, 13, 200):
        if member(R, x, [x.sum()]):
            pairs.append((x, np.array([x.sum()])))
    assert len(pairs) > 20
    for i in range(len(pairs) - 1):
        (x, y), (xp, yp) = pairs[i], pairs[i + 1]
        for lam in (0.1, 0.5, 0.9):
            assert member(R, lam * x + (1 - lam) * xp, lam * y + (1 - lam) * yp)


def test_compose_associative():
    A = graph(RealLine(1), RealLine(2), [[1.0], [2.0]])
    B = affine(RealLine(2), RealLine(1), A=[[1.0, -1.0]], B=[[-1.0]], c=[0.0], G=[[1.0, 0.0]], H=[[0.0]], h=[2.0])
    C = graph(RealLine(1), RealLine(1), [[3.0]], [1.0])
    left, right = compose(compose(A, B), C), compose(A, compose(B, C))
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.uniform(-3, 3, size=1)
        z = rng.choice([3.0 * (-x[0]) + 1.0, rng.uniform(-5, 5)])
        assert member(left, x, [z]) == member(right, x, [z])


def test_fiber_matches_member():
    R = affine(product(E, E), E, A=[[1.0, 2.0]], B=[[-1.0]], c=[0.0], G=[[1.0, 0.0]], H=[[0.0]], h=[1.5],
               strict=[True])
    y = np.array([3.0])
    fb = fiber(R, y)
    for x in _points(R.source, 3, 60, 0.0, 3.0):
        x = x.copy()
        x[1] = (3.0 - x[0]) / 2 if x[1] < 1.0 else x[1]
        assert fb.contains(x) == member(R, x, y)


def test_compose_space_mismatch():
    with pytest.raises(DomainError):
        compose(merge(), merge())
