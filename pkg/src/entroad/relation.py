"""Convex relations between state spaces.

A relation R from X to Y is a convex subset of X x Y, read as a constraint on
x parameterised by y. Bodies are affine systems, graphs of affine maps, the
full relation, products, and lazy composites. Composites are never projected;
their middle spaces become extra variables of whatever problem consumes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex import (TOL_MEMBERSHIP, ConvexSpace, Const, LinearSystem, Product, same_space)
from .errors import DomainError


class ConvexRelation:
    source: ConvexSpace
    target: ConvexSpace

    def lower(self, sys: LinearSystem, x, y) -> None:
        """Add the body constraints linking slots ``x`` and ``y`` to ``sys``.

        Space constraints of ``x`` and ``y`` are the caller's job; middle
        spaces of composites are added here.
        """
        raise NotImplementedError

    def member(self, x, y, tol: float = TOL_MEMBERSHIP) -> bool:
        return member(self, x, y, tol)

    def fiber(self, y) -> "ConstraintSet":
        return fiber(self, y)


@dataclass(frozen=True, eq=False)
class Affine(ConvexRelation):
    """``{(x, y) : A x + B y = c, G x + H y <= h}`` (rows of ``h`` may be strict)."""

    source: ConvexSpace
    target: ConvexSpace
    A: np.ndarray = None
    B: np.ndarray = None
    c: np.ndarray = None
    G: np.ndarray = None
    H: np.ndarray = None
    h: np.ndarray = None
    strict: np.ndarray = None

    def __post_init__(self):
        dx, dy = self.source.dim, self.target.dim
        n_eq = _count(self.c, self.A, self.B)
        n_in = _count(self.h, self.G, self.H)
        values = dict(
            A=_rows(self.A, n_eq, dx), B=_rows(self.B, n_eq, dy), c=_vec(self.c, n_eq),
            G=_rows(self.G, n_in, dx), H=_rows(self.H, n_in, dy), h=_vec(self.h, n_in),
            strict=np.broadcast_to(np.asarray(False if self.strict is None else self.strict, dtype=bool),
                                   (n_in,)).copy(),
        )
        for name, val in values.items():
            object.__setattr__(self, name, val)

    def lower(self, sys, x, y):
        if self.c.size:
            sys.add_matrix_eq([(x, self.A), (y, self.B)], self.c)
        if self.h.size:
            sys.add_matrix_ineq([(x, self.G), (y, self.H)], self.h, self.strict)


@dataclass(frozen=True, eq=False)
class Graph(ConvexRelation):
    """``{(x, M x + m)}``: the graph of an affine map."""

    source: ConvexSpace
    target: ConvexSpace
    M: np.ndarray = None
    m: np.ndarray = None

    def __post_init__(self):
        M = np.array(self.M, dtype=float).reshape(self.target.dim, self.source.dim)
        m = np.zeros(self.target.dim) if self.m is None else np.array(self.m, dtype=float).reshape(-1)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "m", m)

    def apply(self, x) -> np.ndarray:
        return self.M @ np.asarray(x, dtype=float) + self.m

    def lower(self, sys, x, y):
        if self.target.dim:
            sys.add_matrix_eq([(x, -self.M), (y, np.eye(self.target.dim))], self.m)


@dataclass(frozen=True, eq=False)
class Full(ConvexRelation):
    source: ConvexSpace
    target: ConvexSpace

    def lower(self, sys, x, y):
        pass


@dataclass(frozen=True, eq=False)
class Chain(ConvexRelation):
    """Lazy composite: first X -> Y, then Y -> Z."""

    first: ConvexRelation
    second: ConvexRelation

    def __post_init__(self):
        if not same_space(self.first.target, self.second.source):
            raise DomainError(f"cannot compose: {self.first.target!r} is not {self.second.source!r}")

    @property
    def source(self):
        return self.first.source

    @property
    def target(self):
        return self.second.target

    def lower(self, sys, x, y):
        mid_space = self.first.target
        mid = sys.new_vars(mid_space.dim)
        sys.add_space(mid_space, mid)
        self.first.lower(sys, x, mid)
        self.second.lower(sys, mid, y)


@dataclass(frozen=True, eq=False)
class Prod(ConvexRelation):
    """``Q x R`` from ``X x Y`` to ``X' x Y'``."""

    left: ConvexRelation
    right: ConvexRelation

    @property
    def source(self):
        return Product(self.left.source, self.right.source)

    @property
    def target(self):
        return Product(self.left.target, self.right.target)

    def lower(self, sys, x, y):
        kx, ky = self.left.source.dim, self.left.target.dim
        self.left.lower(sys, _part(x, 0, kx), _part(y, 0, ky))
        self.right.lower(sys, _part(x, kx, None), _part(y, ky, None))


def _count(*parts):
    for p in parts:
        if p is not None:
            return len(p)
    return 0


def _rows(M, n, cols):
    if M is None:
        return np.zeros((n, cols))
    return np.array(M, dtype=float).reshape(n, cols)


def _vec(v, n):
    if v is None:
        return np.zeros(n)
    return np.array(v, dtype=float).reshape(n)


def _part(slot, a, b):
    if isinstance(slot, Const):
        return Const(slot.value[a:b])
    return slot[a:b]


# Constructors ---------------------------------------------------------------

def identity(space: ConvexSpace) -> Graph:
    return Graph(space, space, np.eye(space.dim))


def graph(source: ConvexSpace, target: ConvexSpace, M, m=None) -> Graph:
    return Graph(source, target, M, m)


def full(source: ConvexSpace, target: ConvexSpace) -> Full:
    return Full(source, target)


def affine(source, target, A=None, B=None, c=None, G=None, H=None, h=None, strict=None) -> Affine:
    return Affine(source, target, A, B, c, G, H, h, strict)


def compose(R: ConvexRelation, Rp: ConvexRelation) -> Chain:
    """``Rp o R``: first R, then Rp."""
    return Chain(R, Rp)


def rel_product(R: ConvexRelation, Rp: ConvexRelation) -> Prod:
    return Prod(R, Rp)


def rel_product_of(rels) -> ConvexRelation:
    rels = list(rels)
    if not rels:
        from .convex import Singleton

        return identity(Singleton())
    out = rels[0]
    for r in rels[1:]:
        out = Prod(out, r)
    return out


# Fibers and membership ------------------------------------------------------

@dataclass
class ConstraintSet:
    """Linear constraints over ``n_primary`` state coordinates plus auxiliaries.

    Auxiliary variables come from the middle spaces of composite relations;
    the feasible states are the projection onto the primary coordinates.
    """

    system: LinearSystem
    n_primary: int
    space: ConvexSpace | None = None
    labels: list = field(default_factory=list)

    @property
    def n_aux(self) -> int:
        return self.system.n - self.n_primary

    @classmethod
    def of_space(cls, space: ConvexSpace) -> "ConstraintSet":
        sys = LinearSystem()
        x = sys.new_vars(space.dim)
        sys.add_space(space, x)
        return cls(sys, space.dim, space)

    def contains(self, x, tol: float = TOL_MEMBERSHIP) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n_primary:
            raise DomainError(f"constraint set has {self.n_primary} coordinates, got {x.size}")
        if self.n_aux == 0:
            A, b, G, h, strict = self.system.matrices()
            if A.shape[0] and np.any(np.abs(A @ x - b) > tol):
                return False
            if G.shape[0]:
                r = G @ x - h
                if np.any(r[~strict] > tol) or np.any(r[strict] >= 0.0):
                    return False
            return True
        from .optimize import feasible_point

        sys = self.system.copy()
        sys.add_matrix_eq([(np.arange(self.n_primary), np.eye(self.n_primary))], x)
        return feasible_point(sys, tol) is not None


def fiber(R: ConvexRelation, y) -> ConstraintSet:
    """The constraint set ``{x in X : (x, y) in R}``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != R.target.dim:
        raise DomainError(f"target point has {y.size} coordinates, expected {R.target.dim}")
    if not R.target.contains(y):
        raise DomainError(f"{y.tolist()} is outside the relation's target {R.target!r}")
    return _fiber_unchecked(R, y)


def _fiber_unchecked(R, y) -> ConstraintSet:
    sys = LinearSystem()
    x = sys.new_vars(R.source.dim)
    sys.add_space(R.source, x)
    R.lower(sys, x, Const(y))
    return ConstraintSet(sys, R.source.dim, R.source)


def member(R: ConvexRelation, x, y, tol: float = TOL_MEMBERSHIP) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != R.source.dim or y.size != R.target.dim:
        raise DomainError(f"member: expected ({R.source.dim}, {R.target.dim}) coordinates, "
                          f"got ({x.size}, {y.size})")
    if not (R.source.contains(x, tol) and R.target.contains(y, tol)):
        return False
    return _fiber_unchecked(R, y).contains(x, tol)
