"""Worked examples as composed systems with closed-form references.

Each entry pairs an operation and its input systems with a reference
evaluator computed from closed forms at double precision. ``check_entry``
runs the engine at the entry's query points and compares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .convex import Orthant, Product, RealLine, Simplex, Singleton
from .errors import DomainError
from .operad import Operation, act, tensor
from .optimize import ATTAINED, INFEASIBLE, MaxResult, SolverConfig, maximize
from .relation import ConstraintSet, affine, fiber, graph
from .system import Affine, SackurTetrode, ThermostaticSystem, heat_bath, ideal_gas, shannon_system, tank
from .xreal import NEG_INF, POS_INF

VALUE_TOL = 1e-6
ARGMAX_TOL = 1e-4


@dataclass
class CatalogEntry:
    name: str
    op: Operation | None
    systems: list
    reference: Callable  # y -> (value, argmax or None)
    queries: list
    params: dict = field(default_factory=dict)
    engine: Callable | None = None  # y, cfg -> MaxResult; defaults to solving act(op, systems)
    feasible: Callable | None = None  # y -> ConstraintSet when op is None

    def system(self) -> ThermostaticSystem:
        return act(self.op, self.systems)

    @property
    def dim(self) -> int:
        """Ambient dimension of the maximisation (the operation's source)."""
        if self.op is None:
            return self.systems[0].space.dim
        return self.op.source.dim

    def problem(self, y):
        """(objective, feasible set) of the maximisation behind query ``y``."""
        y = np.asarray(y, dtype=float)
        if self.op is None:
            return self.systems[0].entropy, self.feasible(y)
        return tensor(self.systems).entropy, fiber(self.op.rel, y)

    def solve(self, y, cfg: SolverConfig | None = None) -> MaxResult:
        if self.engine is not None:
            return self.engine(np.asarray(y, dtype=float), cfg or SolverConfig())
        return self.system().entropy.solve(y, cfg)


def _beta(T, beta):
    if (T is None) == (beta is None):
        raise DomainError("give exactly one of T and beta")
    if beta is None:
        T = float(T)
        if T == 0 or not math.isfinite(T):
            raise DomainError(f"temperature must be finite and nonzero, got {T}")
        return 1.0 / T
    beta = float(beta)
    if not math.isfinite(beta):
        raise DomainError(f"beta must be finite, got {beta}")
    return beta


def _bath(beta, name="bath"):
    """Reservoir with entropy beta*U; beta = 0 is the infinitely hot bath."""
    if beta == 0.0:
        return ThermostaticSystem(RealLine(1, labels=("U",)), Affine([0.0]), name)
    return heat_bath(1.0 / beta, name)


# Two tanks --------------------------------------------------------------------

def two_tanks(C1: float = 1.0, C2: float = 2.0) -> CatalogEntry:
    C1, C2 = float(C1), float(C2)
    if not (C1 > 0 and C2 > 0):
        raise DomainError("heat capacities must be positive")
    X = Orthant(1, labels=("U",))
    rel = graph(Product(X, X), X, [[1.0, 1.0]])
    op = Operation((X, X), X, rel)
    C = C1 + C2

    def reference(y):
        U = float(y[0])
        value = C * math.log(U) + C1 * math.log(C1 / C) + C2 * math.log(C2 / C)
        return value, np.array([C1 * U / C, C2 * U / C])

    return CatalogEntry("two_tanks", op, [tank(C1, "tank1"), tank(C2, "tank2")], reference,
                        [[float(u)] for u in range(1, 11)], {"C1": C1, "C2": C2})


# Gas equalisation --------------------------------------------------------------

def gas_equalization(m1: float = 1.0, m2: float = 1.0, U: float = 2.0, V: float = 2.0,
                     N1: float = 1.0, N2: float = 1.0) -> CatalogEntry:
    """Two gases sharing energy and volume through a movable, conducting wall."""
    X = Orthant(3, labels=("U", "V", "N"))
    Y = Orthant(4, labels=("U", "V", "N1", "N2"))
    M = [[1, 0, 0, 1, 0, 0],
         [0, 1, 0, 0, 1, 0],
         [0, 0, 1, 0, 0, 0],
         [0, 0, 0, 0, 0, 1]]
    op = Operation((X, X), Y, graph(Product(X, X), Y, M))
    gases = [ideal_gas(m1, name="gas1"), ideal_gas(m2, name="gas2")]

    def reference(y):
        Ut, Vt, n1, n2 = (float(v) for v in y)
        # equal temperature 1.5 N/U and equal pressure N/V put U_i, V_i in proportion to N_i
        w1, w2 = n1 / (n1 + n2), n2 / (n1 + n2)
        x = np.array([w1 * Ut, w1 * Vt, n1, w2 * Ut, w2 * Vt, n2])
        value = float(gases[0].entropy(x[:3]) + gases[1].entropy(x[3:]))
        return value, x

    return CatalogEntry("gas_equalization", op, gases, reference, [[U, V, N1, N2]],
                        {"m1": m1, "m2": m2, "U": U, "V": V, "N1": N1, "N2": N2})


# Heat-bath coupling -------------------------------------------------------------

def bath_coupling(T: float = 1.0, system: str = "gas", C: float = 1.0, slope: float = 2.0,
                  mass: float = 1.0) -> CatalogEntry:
    """A system exchanging energy with a reservoir: the Legendre transform of its entropy."""
    T = float(T)
    beta = _beta(T, None)
    B = RealLine(1, labels=("U",))
    bath = heat_bath(T)
    if system == "gas":
        X = Orthant(3, labels=("U", "V", "N"))
        Y = Orthant(2, labels=("V", "N"))
        rel = affine(Product(X, B), Y, A=[[1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0]],
                     B=[[0, 0], [-1, 0], [0, -1]], c=[0, 0, 0])
        sysx = ideal_gas(mass)
        offset = SackurTetrode(mass).offset
        queries = [[float(v), float(n)] for v in (1, 2, 3) for n in (1, 2, 3)]

        def reference(y):
            V, N = float(y[0]), float(y[1])
            if beta <= 0:
                return POS_INF, None
            Us = 1.5 * N / beta
            value = N * math.log(V) + 1.5 * N * math.log(Us) - 2.5 * N * math.log(N) + offset * N - beta * Us
            return value, np.array([Us, V, N, -Us])
    elif system in ("tank", "affine"):
        X = Orthant(1, labels=("U",))
        Y = Singleton()
        rel = affine(Product(X, B), Y, A=[[1, 1]], c=[0])
        queries = [[]]
        if system == "tank":
            sysx = tank(C)

            def reference(y):
                if beta <= 0:
                    return POS_INF, None
                Us = C / beta
                return C * math.log(Us) - C, np.array([Us, -Us])
        else:
            sysx = ThermostaticSystem(X, Affine([slope]), "affine")

            def reference(y):
                # sup over U > 0 of (slope - beta) U
                if slope > beta:
                    return POS_INF, None
                return 0.0, None
    else:
        raise DomainError(f"unknown coupled system {system!r}; use gas, tank or affine")
    op = Operation((X, B), Y, rel)
    return CatalogEntry("bath_coupling", op, [sysx, bath], reference, queries,
                        {"T": T, "system": system, "C": C, "slope": slope, "mass": mass})


# Ensembles ----------------------------------------------------------------------

def _levels(H, name="H"):
    H = np.atleast_1d(np.asarray(H, dtype=float))
    if H.ndim != 1 or H.size == 0 or not np.all(np.isfinite(H)):
        raise DomainError(f"{name} must be a non-empty list of finite energies")
    return H


def canonical(H=(0.0, 1.0, 2.0), T: float | None = None, beta: float | None = None) -> CatalogEntry:
    """Shannon entropy of a distribution coupled to a heat bath through its mean energy."""
    H = _levels(H)
    if T is None and beta is None:
        T = 1.0
    b = _beta(T, beta)
    n = H.size - 1
    P = Simplex(n)
    B = RealLine(1, labels=("U",))
    rel = affine(Product(P, B), Singleton(), A=[list(H) + [1.0]], c=[0.0])
    op = Operation((P, B), Singleton(), rel)

    def reference(y):
        logw = -b * H
        logZ = float(logsumexp(logw))
        p = np.exp(logw - logZ)
        return logZ, np.r_[p, -float(p @ H)]

    return CatalogEntry("canonical", op, [shannon_system(n), _bath(b)], reference, [[]],
                        {"H": H.tolist(), "beta": b})


def grand_canonical(H=(0.0, 1.0), M=(0.0, 1.0), T: float | None = None, mu: float = 0.0,
                    beta: float | None = None) -> CatalogEntry:
    """Shannon entropy coupled to an energy bath and a particle bath."""
    H, M = _levels(H), _levels(M, "M")
    if H.size != M.size:
        raise DomainError("H and M must have the same length")
    if T is None and beta is None:
        T = 1.0
    b = _beta(T, beta)
    mu = float(mu)
    n = H.size - 1
    P = Simplex(n)
    B = RealLine(1, labels=("U",))
    Np = RealLine(1, labels=("N",))
    rel = affine(product_3(P, B, Np), Singleton(),
                 A=[list(H) + [1.0, 0.0], list(M) + [0.0, 1.0]], c=[0.0, 0.0])
    op = Operation((P, B, Np), Singleton(), rel)
    particles = ThermostaticSystem(Np, Affine([b * mu]), "particle_bath")

    def reference(y):
        logw = -b * (H + mu * M)
        logZ = float(logsumexp(logw))
        p = np.exp(logw - logZ)
        return logZ, np.r_[p, -float(p @ H), -float(p @ M)]

    return CatalogEntry("grand_canonical", op, [shannon_system(n), _bath(b), particles], reference, [[]],
                        {"H": H.tolist(), "M": M.tolist(), "beta": b, "mu": mu})


def product_3(a, b, c):
    return Product(Product(a, b), c)


def microcanonical(H=(1.0, 2.0, 2.0, 3.0), U: float = 2.0, tol_level: float = 0.0,
                   method: str = "closed_form", cfg: SolverConfig | None = None):
    """Entropy at exact energy U: uniform over the levels equal to U.

    Returns ``(value, argmax)``; the argmax is None when no level matches.
    """
    H = _levels(H)
    U = float(U)
    if tol_level < 0:
        raise DomainError("tol_level must be >= 0")
    on = np.abs(H - U) <= tol_level if tol_level > 0 else H == U
    k = int(on.sum())
    if method == "closed_form":
        if k == 0:
            return NEG_INF, None
        return math.log(k), np.where(on, 1.0 / k, 0.0)
    if method != "optimize":
        raise DomainError(f"unknown method {method!r}; use closed_form or optimize")
    res = _micro_solve(H, on, cfg or SolverConfig())
    return res.value, res.argmax


def _micro_set(H, on) -> ConstraintSet:
    """The sub-simplex with p_i = 0 off the level set."""
    n = H.size - 1
    cs = ConstraintSet.of_space(Simplex(n))
    off = np.flatnonzero(~on)
    if off.size:
        cs.system.add_matrix_eq([(np.arange(n + 1)[off], np.eye(off.size))], np.zeros(off.size))
    return cs


def _micro_solve(H, on, cfg) -> MaxResult:
    return maximize(shannon_system(H.size - 1).entropy, _micro_set(H, on), cfg)


def microcanonical_entry(H=(1.0, 2.0, 2.0, 3.0), U: float | None = None, tol_level: float = 0.0) -> CatalogEntry:
    """Catalog wrapper: engine is the sub-simplex maximisation, reference the count formula."""
    H = _levels(H)
    if U is None:
        levels = sorted(set(H.tolist()))
        queries = [[u] for u in levels] + [[max(levels) + 2.0]]
    else:
        queries = [[float(U)]]

    def reference(y):
        return microcanonical(H, y[0], tol_level)

    def on(y):
        return np.abs(H - y[0]) <= tol_level if tol_level > 0 else H == y[0]

    return CatalogEntry("microcanonical", None, [shannon_system(H.size - 1)], reference, queries,
                        {"H": H.tolist(), "U": U, "tol_level": tol_level},
                        engine=lambda y, cfg: _micro_solve(H, on(y), cfg), feasible=lambda y: _micro_set(H, on(y)))


CATALOG = {
    "two_tanks": two_tanks,
    "gas_equalization": gas_equalization,
    "bath_coupling": bath_coupling,
    "canonical": canonical,
    "grand_canonical": grand_canonical,
    "microcanonical": microcanonical_entry,
}


# Checking -----------------------------------------------------------------------

@dataclass
class CheckRow:
    query: list
    reference: float
    engine: float
    gap: float
    argmax_gap: float | None
    status: str
    ok: bool


def _gap(a, b):
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return POS_INF
    return abs(a - b)


def check_entry(entry: CatalogEntry, cfg: SolverConfig | None = None,
                value_tol: float = VALUE_TOL, argmax_tol: float = ARGMAX_TOL) -> list[CheckRow]:
    cfg = cfg or SolverConfig()
    rows = []
    for y in entry.queries:
        ref, ref_arg = entry.reference(np.asarray(y, dtype=float))
        res = entry.solve(y, cfg)
        gap = _gap(res.value, ref)
        agap = None
        if ref_arg is not None and res.status == ATTAINED and res.argmax is not None:
            agap = float(np.max(np.abs(res.argmax - ref_arg)))
        ok = gap <= value_tol and (agap is None or agap <= argmax_tol)
        if ref == NEG_INF:
            ok = ok and res.status == INFEASIBLE
        rows.append(CheckRow(list(y), ref, res.value, gap, agap, res.status, ok))
    return rows
