"""Thermostatic systems: a convex state space paired with a concave entropy.

Entropy functions are small immutable objects that evaluate on arrays of
states (shape ``(..., dim)``) and return extended reals. Outside an entropy's
natural domain the formulas extend by -inf, which keeps them concave.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .convex import (ConvexSpace, Orthant, Polyhedron, Product, RealLine, Simplex, Singleton)
from .errors import DomainError
from .xreal import NEG_INF, ext_real, xr_add, xr_add_array

STOCHASTIC_TOL = 1e-12
DENSITY_TOL = 1e-9
JACOBI_OFFDIAG_TOL = 1e-12


def _xlogx(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)


def shannon(p) -> np.ndarray:
    """``-sum p_i log p_i`` along the last axis with ``0 log 0 = 0``.

    Distributions with a negative entry get -inf.
    """
    p = np.asarray(p, dtype=float)
    s = -np.sum(_xlogx(p), axis=-1)
    return np.where(np.all(p >= 0.0, axis=-1), s, NEG_INF)


class EntropyFn:
    """Base class for entropy formulas. ``dim`` is the expected state length."""

    dim: int

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class LogTank(EntropyFn):
    """``C log U``: a tank of incompressible liquid with heat capacity C."""

    C: float

    def __post_init__(self):
        if not self.C > 0:
            raise DomainError(f"heat capacity must be positive, got {self.C}")

    @property
    def dim(self):
        return 1

    def __call__(self, x):
        U = np.asarray(x, dtype=float)[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(U > 0.0, self.C * np.log(np.where(U > 0.0, U, 1.0)), NEG_INF)


@dataclass(frozen=True)
class SackurTetrode(EntropyFn):
    """Ideal monatomic gas in (U, V, N) with k = 1.

    ``S = N [log((V/N) (4 pi m U / (3 N h^2))^(3/2)) + 5/2]``
    """

    mass: float = 1.0
    planck: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.planck > 0):
            raise DomainError("mass and planck constant must be positive")

    @property
    def dim(self):
        return 3

    @property
    def offset(self) -> float:
        """Per-particle constant: ``1.5 log(4 pi m / (3 h^2)) + 2.5``."""
        return 1.5 * math.log(4.0 * math.pi * self.mass / (3.0 * self.planck ** 2)) + 2.5

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        U, V, N = x[..., 0], x[..., 1], x[..., 2]
        ok = (U > 0) & (V > 0) & (N > 0)
        U, V, N = (np.where(ok, t, 1.0) for t in (U, V, N))
        s = N * np.log(V) + 1.5 * N * np.log(U) - 2.5 * N * np.log(N) + self.offset * N
        return np.where(ok, s, NEG_INF)

    def gradient(self, x) -> np.ndarray:
        U, V, N = (float(t) for t in x)
        return np.array([1.5 * N / U, N / V,
                         math.log(V) + 1.5 * math.log(U) - 2.5 * math.log(N) - 2.5 + self.offset])

    def temperature(self, x) -> float:
        return 1.0 / self.gradient(x)[0]

    def pressure(self, x) -> float:
        g = self.gradient(x)
        return g[1] / g[0]


@dataclass(frozen=True)
class HeatBath(EntropyFn):
    """``U / T0``: net energy transferred to a reservoir at temperature T0."""

    T0: float

    def __post_init__(self):
        if self.T0 == 0 or not math.isfinite(self.T0):
            raise DomainError("heat bath temperature must be finite and nonzero")

    @property
    def dim(self):
        return 1

    def __call__(self, x):
        return np.asarray(x, dtype=float)[..., 0] / self.T0


@dataclass(frozen=True)
class Shannon(EntropyFn):
    n: int

    @property
    def dim(self):
        return self.n + 1

    def __call__(self, x):
        return shannon(x)


@dataclass(frozen=True)
class VonNeumann(EntropyFn):
    """Von Neumann entropy of a d x d density matrix in packed real coordinates.

    Layout: the d diagonal entries, then the real parts of the strict upper
    triangle (row-major), then their imaginary parts.
    """

    d: int

    @property
    def dim(self):
        return self.d * self.d

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim)
        out = np.array([von_neumann(row) for row in flat])
        return out.reshape(x.shape[:-1])

    def restrict_diagonal(self) -> "Shannon":
        """On diagonal density matrices this entropy is Shannon of the diagonal."""
        return Shannon(self.d - 1)


@dataclass(frozen=True)
class Affine(EntropyFn):
    a: tuple
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in np.atleast_1d(self.a)))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return len(self.a)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ np.array(self.a) + self.b


@dataclass(frozen=True, eq=False)
class Quadratic(EntropyFn):
    """``-(x - c)' Q (x - c) + b`` with ``Q`` positive semidefinite.

    Not a physical entropy; a smooth concave test objective for the optimizer.
    """

    Q: np.ndarray
    c: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if Q.shape != (c.size, c.size) or not np.allclose(Q, Q.T):
            raise DomainError("Quadratic needs a symmetric matrix matching the centre")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise DomainError("Quadratic matrix must be positive semidefinite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return self.c.size

    def __call__(self, x):
        d = np.asarray(x, dtype=float) - self.c
        return self.b - np.einsum("...i,ij,...j->...", d, self.Q, d)


@dataclass(frozen=True, eq=False)
class StochasticMap:
    """Column-stochastic matrix mapping the n-simplex into the m-simplex."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.size == 0:
            raise DomainError("a stochastic map needs a nonempty 2-d matrix")
        if np.any(M < 0) or np.any(np.abs(M.sum(axis=0) - 1.0) > STOCHASTIC_TOL):
            raise DomainError("stochastic map columns must be nonnegative and sum to 1")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def from_columns(cls, columns) -> "StochasticMap":
        return cls(np.array(columns, dtype=float).T)

    @classmethod
    def identity(cls, n: int) -> "StochasticMap":
        return cls(np.eye(n + 1))

    @property
    def outcomes(self) -> int:
        return self.matrix.shape[0]

    @property
    def inputs(self) -> int:
        return self.matrix.shape[1]

    def __call__(self, p):
        return np.asarray(p, dtype=float) @ self.matrix.T

    def __eq__(self, other):
        return isinstance(other, StochasticMap) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


@dataclass(frozen=True)
class Measurement(EntropyFn):
    """Minimum Shannon entropy of the outcome distributions of a measurement set."""

    maps: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise DomainError("a measurement entropy needs at least one measurement")
        if len({m.inputs for m in maps}) != 1:
            raise DomainError("all measurements must act on the same simplex")
        object.__setattr__(self, "maps", maps)

    @property
    def dim(self):
        return self.maps[0].inputs

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = np.stack([shannon(e(x)) for e in self.maps])
        # a negative input coordinate means x is outside the simplex
        return np.where(np.all(x >= 0.0, axis=-1), vals.min(axis=0), NEG_INF)


@dataclass(frozen=True)
class Sum(EntropyFn):
    """``(S + T)(x, y) = S(x) + T(y)`` on a product, with -inf dominant."""

    left: EntropyFn
    right: EntropyFn

    @property
    def dim(self):
        return self.left.dim + self.right.dim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.left.dim
        return xr_add_array(self.left(x[..., :k]), self.right(x[..., k:]))


@dataclass(frozen=True)
class Constant(EntropyFn):
    v: float
    n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "v", ext_real(self.v))

    @property
    def dim(self):
        return self.n

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.v)


@dataclass(frozen=True, eq=False)
class Pushforward(EntropyFn):
    """``y -> sup { S(x) : (x, y) in R }``, evaluated lazily by the optimizer.

    Results are memoised per (query point, solver config); the memo is
    guarded by a lock so a shared system can be evaluated from many threads.
    """

    inner: "ThermostaticSystem"
    rel: object
    _memo: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def dim(self):
        return self.rel.target.dim

    def solve(self, y, cfg=None):
        from .optimize import SolverConfig, solve_pushforward

        cfg = cfg or SolverConfig()
        y = np.asarray(y, dtype=float).reshape(-1)
        key = (y.tobytes(), cfg)
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = solve_pushforward(self.inner, self.rel, y, cfg)
        with self._lock:
            self._memo[key] = res
        return res

    def __call__(self, x, cfg=None):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim)
        out = np.array([self.solve(row, cfg).value for row in flat])
        return out.reshape(x.shape[:-1])


@dataclass(frozen=True)
class ThermostaticSystem:
    space: ConvexSpace
    entropy: EntropyFn
    name: str = "system"

    def __post_init__(self):
        if self.entropy.dim != self.space.dim:
            raise DomainError(f"{self.name}: entropy expects dimension {self.entropy.dim}, "
                              f"space has {self.space.dim}")

    def __call__(self, x, cfg=None):
        return evaluate(self, x, cfg)


def evaluate(sys: ThermostaticSystem, x, cfg=None) -> float:
    """Entropy of ``sys`` at state ``x``.

    States outside the space raise :class:`DomainError`, except for pushed-
    forward systems, where such a state has no preimage and gets -inf.
    """
    x = sys.space._check(x)
    if isinstance(sys.entropy, Pushforward):
        if not sys.space.contains(x):
            return NEG_INF
        return float(sys.entropy.solve(x, cfg).value)
    if not sys.space.contains(x):
        raise DomainError(f"{sys.name}: state {x.tolist()} is outside {sys.space!r}")
    return float(_evaluate_fn(sys.entropy, x, cfg))


def _evaluate_fn(fn: EntropyFn, x: np.ndarray, cfg) -> float:
    if isinstance(fn, Sum):
        k = fn.left.dim
        return xr_add(_evaluate_fn(fn.left, x[:k], cfg), _evaluate_fn(fn.right, x[k:], cfg))
    if isinstance(fn, Pushforward):
        return float(fn.solve(x, cfg).value)
    return float(fn(x))


def sum_systems(a: ThermostaticSystem, b: ThermostaticSystem) -> ThermostaticSystem:
    return ThermostaticSystem(Product(a.space, b.space), Sum(a.entropy, b.entropy), f"{a.name}+{b.name}")


def unit_system() -> ThermostaticSystem:
    """The constant 0 entropy on the one-point space."""
    return ThermostaticSystem(Singleton(), Constant(0.0), "unit")


# Standard systems -----------------------------------------------------------

def tank(C: float, name: str = "tank") -> ThermostaticSystem:
    return ThermostaticSystem(Orthant(1, labels=("U",)), LogTank(C), name)


def ideal_gas(mass: float = 1.0, planck: float = 1.0, name: str = "gas") -> ThermostaticSystem:
    return ThermostaticSystem(Orthant(3, labels=("U", "V", "N")), SackurTetrode(mass, planck), name)


def heat_bath(T0: float, name: str = "bath") -> ThermostaticSystem:
    return ThermostaticSystem(RealLine(1, labels=("U",)), HeatBath(T0), name)


def shannon_system(n: int, name: str = "shannon") -> ThermostaticSystem:
    return ThermostaticSystem(Simplex(n), Shannon(n), name)


def density_matrix_space(d: int) -> Polyhedron:
    """Trace-one Hermitian d x d matrices in packed coordinates.

    Positivity is not polyhedral; :func:`von_neumann` checks it on evaluation.
    """
    a = [1.0] * d + [0.0] * (d * d - d)
    return Polyhedron(d * d, eq=[(a, 1.0)])


def von_neumann_system(d: int, name: str = "density") -> ThermostaticSystem:
    return ThermostaticSystem(density_matrix_space(d), VonNeumann(d), name)


def measurement_system(maps: Sequence[StochasticMap], name: str = "gpt") -> ThermostaticSystem:
    m = Measurement(tuple(maps))
    return ThermostaticSystem(Simplex(m.dim - 1), m, name)


# Limits and measurements ----------------------------------------------------

def tank_bath_limit_gap(C: float, T: float, dU: float) -> float:
    """``|C log(CT + dU) - C log(CT) - dU/T|`` for the rescaled tank."""
    if not (C > 0 and T > 0):
        raise DomainError("C and T must be positive")
    if dU <= -C * T:
        raise DomainError(f"dU = {dU} leaves the tank domain (needs dU > {-C * T})")
    return abs(C * math.log1p(dU / (C * T)) - dU / T)


def measurement_entropy(maps: Sequence[StochasticMap], p) -> float:
    maps = list(maps)
    if not maps:
        raise DomainError("measurement set is empty")
    p = np.asarray(p, dtype=float)
    for e in maps:
        if e.inputs != p.size:
            raise DomainError(f"measurement expects {e.inputs} input outcomes, got {p.size}")
    return float(min(shannon(e(p)) for e in maps))


def coarse_grain(e: StochasticMap, M: Sequence[int], size: int | None = None) -> StochasticMap:
    """Compose ``e`` with the deterministic map sending outcome i to ``M[i]``."""
    M = [int(v) for v in M]
    if len(M) != e.outcomes:
        raise DomainError(f"coarse-graining needs one target per outcome ({e.outcomes}), got {len(M)}")
    size = max(M) + 1 if size is None else int(size)
    if any(v < 0 or v >= size for v in M):
        raise DomainError(f"coarse-graining targets must lie in 0..{size - 1}")
    F = np.zeros((size, e.inputs))
    for i, target in enumerate(M):
        F[target] += e.matrix[i]
    return StochasticMap(F)


# Density matrices -----------------------------------------------------------

def decode_density(coords) -> np.ndarray:
    x = np.asarray(coords, dtype=float).reshape(-1)
    d = math.isqrt(x.size)
    if d * d != x.size or d == 0:
        raise DomainError(f"packed density matrix needs a square length, got {x.size}")
    rho = np.diag(x[:d]).astype(complex)
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    rho[iu] = x[d:d + k] + 1j * x[d + k:]
    rho[(iu[1], iu[0])] = x[d:d + k] - 1j * x[d + k:]
    return rho


def encode_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    iu = np.triu_indices(rho.shape[0], 1)
    return np.concatenate([rho.diagonal().real, rho[iu].real, rho[iu].imag])


def jacobi_eigenvalues(S: np.ndarray, tol: float = JACOBI_OFFDIAG_TOL, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) <= 1e-150 * (abs(A[p, p]) + abs(A[q, q])):
                    A[p, q] = A[q, p] = 0.0  # below any eigenvalue resolution; theta would overflow
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))


def von_neumann(rho_coords) -> float:
    """``-Tr(rho log rho)`` for a packed density matrix."""
    rho = decode_density(rho_coords)
    d = rho.shape[0]
    if abs(rho.trace().real - 1.0) > DENSITY_TOL:
        raise DomainError(f"density matrix trace is {rho.trace().real}, expected 1")
    # real symmetric embedding doubles every eigenvalue
    emb = np.block([[rho.real, -rho.imag], [rho.imag, rho.real]])
    lam = jacobi_eigenvalues(emb)[::2]
    if lam[0] < -DENSITY_TOL:
        raise DomainError(f"density matrix is not positive semidefinite (eigenvalue {lam[0]:.3e})")
    lam = np.clip(lam, 0.0, None)
    assert lam.size == d
    return float(-np.sum(_xlogx(lam)))
