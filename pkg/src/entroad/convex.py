"""Finite-dimensional convex state spaces and the linear constraint builder.

Every space is a convex subset of R^d given by linear equalities and (strict or
non-strict) linear inequalities. Products flatten to a single coordinate
vector, left factor first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, SamplingError

TOL_MEMBERSHIP = 1e-9
SAMPLE_RETRY_FACTOR = 1000


class LinearSystem:
    """Mutable builder for ``A v = b`` and ``G v <= h`` (some rows strict).

    Variables are allocated with :meth:`new_vars`. Constraint helpers take
    *slots*: either an integer index array naming variables, or a float array
    of constants, which is folded into the right-hand side.
    """

    def __init__(self):
        self.n = 0
        self._eq = []  # (dict idx->coef, rhs)
        self._ineq = []  # (dict idx->coef, rhs, strict)

    def new_vars(self, k: int) -> np.ndarray:
        idx = np.arange(self.n, self.n + k, dtype=np.intp)
        self.n += k
        return idx

    def _row(self, parts, rhs):
        coefs = {}
        rhs = float(rhs)
        for slot, coef in parts:
            coef = np.atleast_1d(np.asarray(coef, dtype=float))
            if isinstance(slot, Const):
                rhs -= float(coef @ slot.value)
                continue
            for j, c in zip(slot, coef):
                if c != 0.0:
                    coefs[int(j)] = coefs.get(int(j), 0.0) + float(c)
        return coefs, rhs

    def add_eq(self, parts, rhs) -> None:
        """Add ``sum(coef . slot) = rhs`` for ``parts = [(slot, coef), ...]``."""
        self._eq.append(self._row(parts, rhs))

    def add_ineq(self, parts, rhs, strict: bool = False) -> None:
        coefs, r = self._row(parts, rhs)
        self._ineq.append((coefs, r, bool(strict)))

    def add_matrix_eq(self, parts, rhs) -> None:
        """Add one equality per row of the stacked coefficient matrices."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        for k in range(rhs.size):
            self.add_eq([(slot, np.asarray(m, dtype=float)[k]) for slot, m in parts], rhs[k])

    def add_matrix_ineq(self, parts, rhs, strict) -> None:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        strict = np.broadcast_to(np.asarray(strict, dtype=bool), rhs.shape)
        for k in range(rhs.size):
            self.add_ineq([(slot, np.asarray(m, dtype=float)[k]) for slot, m in parts], rhs[k], strict[k])

    def add_space(self, space: "ConvexSpace", slot) -> None:
        c = space.constraints()
        if c.A.shape[0]:
            self.add_matrix_eq([(slot, c.A)], c.b)
        if c.G.shape[0]:
            self.add_matrix_ineq([(slot, c.G)], c.h, c.strict)

    def matrices(self):
        """Dense ``(A, b, G, h, strict)`` over the current variables."""
        A = np.zeros((len(self._eq), self.n))
        b = np.zeros(len(self._eq))
        for k, (coefs, rhs) in enumerate(self._eq):
            for j, c in coefs.items():
                A[k, j] = c
            b[k] = rhs
        G = np.zeros((len(self._ineq), self.n))
        h = np.zeros(len(self._ineq))
        strict = np.zeros(len(self._ineq), dtype=bool)
        for k, (coefs, rhs, s) in enumerate(self._ineq):
            for j, c in coefs.items():
                G[k, j] = c
            h[k] = rhs
            strict[k] = s
        return A, b, G, h, strict

    def copy(self) -> "LinearSystem":
        out = LinearSystem()
        out.n = self.n
        out._eq = [(dict(c), r) for c, r in self._eq]
        out._ineq = [(dict(c), r, s) for c, r, s in self._ineq]
        return out


@dataclass(frozen=True)
class Const:
    """A slot holding fixed coordinate values instead of variables."""

    value: np.ndarray

    def __init__(self, value):
        object.__setattr__(self, "value", np.atleast_1d(np.asarray(value, dtype=float)))

    def __len__(self):
        return self.value.size


@dataclass(frozen=True)
class Constraints:
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    strict: np.ndarray

    @staticmethod
    def empty(dim: int) -> "Constraints":
        return Constraints(np.zeros((0, dim)), np.zeros(0), np.zeros((0, dim)), np.zeros(0),
                           np.zeros(0, dtype=bool))

    def satisfied(self, x: np.ndarray, tol: float = TOL_MEMBERSHIP) -> bool:
        if self.A.shape[0] and np.any(np.abs(self.A @ x - self.b) > tol):
            return False
        if self.G.shape[0]:
            r = self.G @ x - self.h
            if np.any(r[~self.strict] > tol) or np.any(r[self.strict] >= 0.0):
                return False
        return True


def _block_diag(a: Constraints, b: Constraints) -> Constraints:
    da, db = a.A.shape[1], b.A.shape[1]

    def stack(M1, M2):
        out = np.zeros((M1.shape[0] + M2.shape[0], da + db))
        out[: M1.shape[0], :da] = M1
        out[M1.shape[0]:, da:] = M2
        return out

    return Constraints(stack(a.A, b.A), np.concatenate([a.b, b.b]), stack(a.G, b.G),
                       np.concatenate([a.h, b.h]), np.concatenate([a.strict, b.strict]))


@dataclass(frozen=True)
class BoundingBox:
    lo: tuple
    hi: tuple

    def __init__(self, lo, hi):
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != len(hi):
            raise DomainError("bounding box corners differ in length")
        if not all(np.isfinite(lo + hi)) or any(l > u for l, u in zip(lo, hi)):
            raise DomainError(f"bounding box must be finite with lo <= hi, got {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @staticmethod
    def cube(dim: int, lo: float, hi: float) -> "BoundingBox":
        return BoundingBox([lo] * dim, [hi] * dim)

    def split(self, k: int):
        return BoundingBox(self.lo[:k], self.hi[:k]), BoundingBox(self.lo[k:], self.hi[k:])


class ConvexSpace:
    """Base class. Subclasses fix ``dim`` and their defining constraints."""

    labels: tuple | None

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def constraints(self) -> Constraints:
        raise NotImplementedError

    def coord_names(self) -> list[str]:
        if self.labels is not None:
            return list(self.labels)
        return [f"x{i}" for i in range(self.dim)]

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            raise DomainError(f"{self!r} has ambient dimension {self.dim}, got a {x.size}-vector")
        return x

    def contains(self, x, tol: float = TOL_MEMBERSHIP) -> bool:
        x = self._check(x)
        if not np.all(np.isfinite(x)):
            return False
        return self.constraints().satisfied(x, tol)

    def combine(self, lam: float, x, y) -> np.ndarray:
        """Convex combination ``lam*x + (1-lam)*y`` of two member states."""
        lam = float(lam)
        if not 0.0 <= lam <= 1.0:
            raise DomainError(f"convex weight {lam!r} outside [0, 1]")
        x, y = self._check(x), self._check(y)
        if not (self.contains(x) and self.contains(y)):
            raise DomainError(f"combine: states must lie in {self!r}")
        if lam == 1.0:
            return x.copy()
        if lam == 0.0:
            return y.copy()
        return lam * x + (1.0 - lam) * y

    def leaves(self) -> tuple:
        """Atomic factors after flattening products and dropping the unit."""
        return (self,)

    def _sample_in(self, box: BoundingBox, rng, count: int) -> np.ndarray:
        return _sample_polyhedral(self, box, rng, count)


@dataclass(frozen=True)
class Polyhedron(ConvexSpace):
    """``{x : a.x = b for eq rows; a.x <= b (or <) for ineq rows}``.

    ``eq`` holds ``(coefficients, rhs)`` pairs, ``ineq`` holds
    ``(coefficients, rhs, strict)`` triples.
    """

    n: int
    eq: tuple = ()
    ineq: tuple = ()
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        eq = tuple((tuple(float(c) for c in a), float(r)) for a, r in self.eq)
        ineq = []
        for row in self.ineq:
            a, r = row[0], row[1]
            strict = bool(row[2]) if len(row) > 2 else False
            ineq.append((tuple(float(c) for c in a), float(r), strict))
        for a, *_ in list(eq) + ineq:
            if len(a) != self.n:
                raise DomainError(f"polyhedron row has {len(a)} coefficients, expected {self.n}")
        object.__setattr__(self, "eq", eq)
        object.__setattr__(self, "ineq", tuple(ineq))
        _check_labels(self)

    @property
    def dim(self) -> int:
        return self.n

    def constraints(self) -> Constraints:
        A = np.array([a for a, _ in self.eq], dtype=float).reshape(len(self.eq), self.n)
        b = np.array([r for _, r in self.eq], dtype=float)
        G = np.array([a for a, _, _ in self.ineq], dtype=float).reshape(len(self.ineq), self.n)
        h = np.array([r for _, r, _ in self.ineq], dtype=float)
        strict = np.array([s for *_, s in self.ineq], dtype=bool)
        return Constraints(A, b, G, h, strict)


@dataclass(frozen=True)
class Simplex(ConvexSpace):
    """Probability distributions on ``{0, ..., n}``; lives in R^(n+1)."""

    n: int
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("simplex index must be >= 0")
        _check_labels(self)

    @property
    def dim(self) -> int:
        return self.n + 1

    def constraints(self) -> Constraints:
        d = self.dim
        return Constraints(np.ones((1, d)), np.ones(1), -np.eye(d), np.zeros(d), np.zeros(d, dtype=bool))

    def _sample_in(self, box, rng, count):
        return _rejection(self, box, count, lambda k: rng.dirichlet(np.ones(self.dim), size=k))


@dataclass(frozen=True)
class Orthant(ConvexSpace):
    """The open positive orthant of R^n."""

    n: int
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        _check_labels(self)

    @property
    def dim(self) -> int:
        return self.n

    def constraints(self) -> Constraints:
        d = self.n
        return Constraints(np.zeros((0, d)), np.zeros(0), -np.eye(d), np.zeros(d), np.ones(d, dtype=bool))

    def leaves(self):
        return tuple(Orthant(1) for _ in range(self.n))


@dataclass(frozen=True)
class RealLine(ConvexSpace):
    """All of R^n."""

    n: int = 1
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        _check_labels(self)

    @property
    def dim(self) -> int:
        return self.n

    def constraints(self) -> Constraints:
        return Constraints.empty(self.n)

    def leaves(self):
        return tuple(RealLine(1) for _ in range(self.n))


@dataclass(frozen=True)
class Singleton(ConvexSpace):
    """The one-point space; it has no coordinates."""

    labels: tuple | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return 0

    def constraints(self) -> Constraints:
        return Constraints.empty(0)

    def leaves(self):
        return ()

    def _sample_in(self, box, rng, count):
        return np.zeros((count, 0))


@dataclass(frozen=True)
class Product(ConvexSpace):
    left: ConvexSpace
    right: ConvexSpace
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        _check_labels(self)

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    def constraints(self) -> Constraints:
        return _block_diag(self.left.constraints(), self.right.constraints())

    def coord_names(self):
        if self.labels is not None:
            return list(self.labels)
        if self.left.labels is None and self.right.labels is None:
            return super().coord_names()
        return self.left.coord_names() + self.right.coord_names()

    def contains(self, x, tol=TOL_MEMBERSHIP) -> bool:
        x = self._check(x)
        k = self.left.dim
        return self.left.contains(x[:k], tol) and self.right.contains(x[k:], tol)

    def leaves(self):
        return self.left.leaves() + self.right.leaves()

    def _sample_in(self, box, rng, count):
        bl, br = box.split(self.left.dim)
        return np.hstack([self.left._sample_in(bl, rng, count), self.right._sample_in(br, rng, count)])


def _check_labels(space):
    if space.labels is not None:
        labels = tuple(str(s) for s in space.labels)
        if len(labels) != space.dim:
            raise DomainError(f"{len(labels)} labels for a {space.dim}-dimensional space")
        object.__setattr__(space, "labels", labels)


def product(a: ConvexSpace, b: ConvexSpace) -> Product:
    return Product(a, b)


def product_of(spaces: Sequence[ConvexSpace]) -> ConvexSpace:
    """Left-nested product; the empty product is the singleton."""
    spaces = list(spaces)
    if not spaces:
        return Singleton()
    out = spaces[0]
    for s in spaces[1:]:
        out = Product(out, s)
    return out


def same_space(a: ConvexSpace, b: ConvexSpace) -> bool:
    """Equality up to associativity and unit of products."""
    return a.dim == b.dim and a.leaves() == b.leaves()


def contains(space: ConvexSpace, x, tol: float = TOL_MEMBERSHIP) -> bool:
    return space.contains(x, tol)


def combine(space: ConvexSpace, lam: float, x, y) -> np.ndarray:
    return space.combine(lam, x, y)


def sample(space: ConvexSpace, region: BoundingBox, seed: int, count: int) -> list[np.ndarray]:
    """Deterministic pseudo-random members of ``space`` inside ``region``.

    Rejection sampling; at most ``SAMPLE_RETRY_FACTOR * count`` candidates are
    drawn per atomic factor before a :class:`SamplingError` is raised.
    """
    if len(region.lo) != space.dim:
        raise DomainError(f"region has {len(region.lo)} coordinates, space has {space.dim}")
    rng = np.random.default_rng(seed)
    pts = space._sample_in(region, rng, count)
    return [p for p in pts]


def _rejection(space, box, count, draw) -> np.ndarray:
    lo, hi = np.array(box.lo), np.array(box.hi)
    out = []
    tries = 0
    cap = SAMPLE_RETRY_FACTOR * max(count, 1)
    while len(out) < count:
        if tries >= cap:
            raise SamplingError(f"could not sample {count} points of {space!r} inside the region "
                                f"after {cap} candidates")
        k = min(max(count - len(out), 16) * 4, cap - tries)
        cand = draw(k)
        tries += k
        for p in cand:
            if np.all(p >= lo) and np.all(p <= hi) and space.contains(p):
                out.append(p)
                if len(out) == count:
                    break
    return np.array(out, dtype=float).reshape(count, space.dim)


def _sample_polyhedral(space, box, rng, count) -> np.ndarray:
    c = space.constraints()
    d = space.dim
    lo, hi = np.array(box.lo), np.array(box.hi)
    if c.A.shape[0] == 0:
        return _rejection(space, box, count, lambda k: rng.uniform(lo, hi, size=(k, d)))
    # sample the affine hull of the equalities: x = x0 + N z
    from scipy.linalg import null_space
    from scipy.optimize import linprog

    res = linprog(np.zeros(d), A_eq=c.A, b_eq=c.b, bounds=list(zip(lo, hi)), method="highs")
    if res.status != 0:
        raise SamplingError(f"{space!r} does not meet the sampling region")
    x0 = res.x
    N = null_space(c.A)
    if N.shape[1] == 0:
        return _rejection(space, box, count, lambda k: np.tile(x0, (k, 1)))
    radius = float(np.linalg.norm(hi - lo))
    return _rejection(space, box, count,
                      lambda k: x0 + rng.uniform(-radius, radius, size=(k, N.shape[1])) @ N.T)
