"""Entropy maximisation: pushforwards, Legendre transforms and oracles."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..convex import Const, same_space
from ..errors import DomainError
from ..relation import ConstraintSet
from ..system import EntropyFn, Pushforward, ThermostaticSystem
from ..xreal import NEG_INF
from .program import Program, lower_entropy
from .solver import (APPROACHED, ATTAINED, INFEASIBLE, UNBOUNDED, MaxResult, SolverConfig,
                     feasible_point, solve)

__all__ = [
    "MaxResult", "SolverConfig", "Program", "ATTAINED", "APPROACHED", "UNBOUNDED", "INFEASIBLE",
    "maximize", "pushforward", "solve_pushforward", "legendre_transform", "feasible_point",
    "parallel_map", "thread_count", "brute_force", "brute_force_sup", "nested_sup", "OracleResult",
]


def maximize(f: EntropyFn, feasible: ConstraintSet, cfg: SolverConfig | None = None) -> MaxResult:
    """Supremum of ``f`` over the primary coordinates of ``feasible``."""
    cfg = cfg or SolverConfig()
    if f.dim != feasible.n_primary:
        raise DomainError(f"objective has dimension {f.dim}, feasible set {feasible.n_primary}")
    prog = Program.from_constraints(feasible)
    lower_entropy(prog, f, np.arange(feasible.n_primary))
    return solve(prog, cfg)


def solve_pushforward(inner: ThermostaticSystem, rel, y, cfg: SolverConfig | None = None) -> MaxResult:
    """``sup { S(x) : (x, y) in rel }`` as one lifted program."""
    cfg = cfg or SolverConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    if not rel.target.contains(y, cfg.tol_membership):
        return MaxResult(NEG_INF, INFEASIBLE)
    prog = Program()
    x = prog.new_vars(inner.space.dim)
    prog.n_primary = x.size
    prog.add_space(inner.space, x)
    rel.lower(prog, x, Const(y))
    lower_entropy(prog, inner.entropy, x)
    return solve(prog, cfg)


def pushforward(sys: ThermostaticSystem, R) -> ThermostaticSystem:
    """Coarse-grain ``sys`` along ``R``: the entropy of y is the sup over its fiber."""
    if not same_space(sys.space, R.source):
        raise DomainError(f"pushforward: system lives on {sys.space!r}, relation starts at {R.source!r}")
    return ThermostaticSystem(R.target, Pushforward(sys, R), f"push({sys.name})")


def legendre_transform(sys: ThermostaticSystem, beta: float, fixed=(), cfg: SolverConfig | None = None) -> float:
    """``sup_U S(U, fixed) - beta U``; the energy is coordinate 0."""
    cfg = cfg or SolverConfig()
    beta = float(beta)
    if not np.isfinite(beta):
        raise DomainError(f"beta must be finite, got {beta}")
    fixed = np.atleast_1d(np.asarray(fixed, dtype=float))
    d = sys.space.dim
    if fixed.size != d - 1:
        raise DomainError(f"{sys.name}: expected {d - 1} fixed coordinates, got {fixed.size}")
    prog = Program()
    x = prog.new_vars(d)
    prog.n_primary = d
    prog.add_space(sys.space, x)
    if d > 1:
        prog.add_matrix_eq([(x[1:], np.eye(d - 1))], fixed)
    lower_entropy(prog, sys.entropy, x)
    prog.add_linear(x[:1], [-beta])
    return solve(prog, cfg).value


# Parallel map ----------------------------------------------------------------

def thread_count() -> int:
    """Worker cap from ENTROAD_THREADS; 0 (or unset on one core) means sequential."""
    raw = os.environ.get("ENTROAD_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"ENTROAD_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise DomainError("ENTROAD_THREADS must be >= 0")
    return n


def parallel_map(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly on threads; order always matches ``items``."""
    items = list(items)
    n = thread_count() if threads is None else threads
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


from .oracle import OracleResult, brute_force, brute_force_sup, nested_sup  # noqa: E402
