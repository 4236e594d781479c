"""Randomised law suites.

Each suite draws small seeded instances and compares two routes that should
agree: lifted composite vs iterated and nested pushforwards (functoriality),
pushforward of a sum vs sum of pushforwards (laxator), permuted vs plain
operations (equivariance), and the barrier solver vs the grid oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convex import BoundingBox, Orthant, Polyhedron, Product, Simplex, Singleton, sample
from .operad import Operation, act, permute_op, permute_systems
from .optimize import SolverConfig, brute_force, maximize, nested_sup, pushforward
from .relation import compose, fiber, full, graph, rel_product
from .system import Affine, LogTank, Shannon, Sum, ThermostaticSystem, evaluate, sum_systems
from .xreal import NEG_INF, POS_INF, xr_add, xr_combine

LAW_TOL = 1e-6
SUITES = ("convex", "functoriality", "laxator", "equivariance", "oracle")


@dataclass
class SuiteReport:
    name: str
    trials: int
    failures: int
    worst: float

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        return (f"{self.name:<14} trials={self.trials:<4d} passed={self.trials - self.failures:<4d} "
                f"failed={self.failures:<4d} worst_gap={self.worst:.3e}")


def xr_gap(a: float, b: float) -> float:
    """Distance on the extended reals: 0 for equal infinities, inf for mismatches."""
    if math.isnan(a) or math.isnan(b):
        return POS_INF
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return POS_INF
    return abs(a - b)


def _rng(seed, suite, trial):
    return np.random.default_rng([int(seed), SUITES.index(suite), int(trial)])


# Random instances --------------------------------------------------------------

def random_system(rng, dim: int | None = None) -> ThermostaticSystem:
    """Orthant with log-tank or affine entropies, or a simplex with Shannon entropy."""
    k = int(dim if dim is not None else rng.integers(1, 4))
    if rng.random() < 0.35 and k >= 2:
        return ThermostaticSystem(Simplex(k - 1), Shannon(k - 1), f"shannon{k}")
    fn = None
    for _ in range(k):
        if rng.random() < 0.75:
            part = LogTank(float(rng.uniform(0.5, 3.0)))
        else:
            part = Affine([float(rng.uniform(-1.0, 1.0))])
        fn = part if fn is None else Sum(fn, part)
    return ThermostaticSystem(Orthant(k), fn, f"orthant{k}")


def random_graph(rng, source, m: int):
    """Graph of a positive matrix into the positive orthant of R^m."""
    M = rng.uniform(0.2, 2.0, size=(m, source.dim)).round(3)
    return graph(source, Orthant(m), M)


def _sample_source(space, rng, count=1):
    box = BoundingBox.cube(space.dim, 0.0 if isinstance(space, Simplex) else 0.1, 1.0 if isinstance(space, Simplex) else 3.0)
    return sample(space, box, int(rng.integers(2 ** 31)), count)


# Convex axioms -----------------------------------------------------------------

def _convex_trial(rng) -> float:
    spaces = [Orthant(2), Simplex(2), Product(Orthant(1), Simplex(1)),
              Polyhedron(2, ineq=[([1.0, 1.0], 2.0), ([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0)])]
    space = spaces[int(rng.integers(len(spaces)))]
    x, y, z = _sample_source(space, rng, 3)
    lam, mu = rng.uniform(0.05, 0.95, size=2)
    gap = 0.0
    c = space.combine
    gap = max(gap, np.max(np.abs(c(1.0, x, y) - x), initial=0.0))
    gap = max(gap, np.max(np.abs(c(lam, x, x) - x), initial=0.0))
    gap = max(gap, np.max(np.abs(c(lam, x, y) - c(1.0 - lam, y, x)), initial=0.0))
    nu = lam + (1.0 - lam) * mu
    lhs = c(lam, x, c(mu, y, z))
    rhs = c(nu, c(lam / nu, x, y), z)
    gap = max(gap, np.max(np.abs(lhs - rhs), initial=0.0))
    # the extended reals: same laws, with infinities absorbing
    vals = [float(v) for v in rng.normal(size=3)] + [POS_INF, NEG_INF]
    a, b, d = (vals[int(i)] for i in rng.integers(len(vals), size=3))
    gap = max(gap, xr_gap(xr_combine(1.0, a, b), a))
    gap = max(gap, xr_gap(xr_combine(lam, a, a), a))
    gap = max(gap, xr_gap(xr_combine(lam, a, b), xr_combine(1.0 - lam, b, a)))
    gap = max(gap, xr_gap(xr_combine(lam, a, xr_combine(mu, b, d)),
                          xr_combine(nu, xr_combine(lam / nu, a, b), d)))
    return float(gap)


# Functoriality -----------------------------------------------------------------

@dataclass
class FunctorInstance:
    system: ThermostaticSystem
    R: object
    Rp: object
    targets: list


def functoriality_instance(rng, n_targets: int = 5) -> FunctorInstance:
    """Random S, R: X -> Y, R': Y -> Z with outer fibers of dimension <= 1."""
    S = random_system(rng)
    m = int(rng.integers(1, 3))
    R = random_graph(rng, S.space, m)
    mz = max(m - int(rng.integers(0, 2)), 1)
    Rp = random_graph(rng, R.target, mz)
    xs = _sample_source(S.space, rng, n_targets)
    targets = [Rp.apply(R.apply(x)) for x in xs]
    if isinstance(S.space, Simplex) and n_targets > 1:
        targets[-1] = targets[-1] * 10.0  # beyond the image of the simplex: -inf on every route
    return FunctorInstance(S, R, Rp, targets)


def functoriality_gaps(inst: FunctorInstance, cfg: SolverConfig, nested: bool = True) -> list[float]:
    chain = pushforward(inst.system, compose(inst.R, inst.Rp))
    iterated = pushforward(pushforward(inst.system, inst.R), inst.Rp)
    gaps = []
    for z in inst.targets:
        a = evaluate(chain, z, cfg)
        b = evaluate(iterated, z, cfg)
        g = xr_gap(a, b)
        if nested:
            g = max(g, xr_gap(a, nested_sup(inst.system, inst.R, inst.Rp, z, cfg)))
        gaps.append(g)
    return gaps


def _functoriality_trial(rng, cfg) -> float:
    inst = functoriality_instance(rng, n_targets=2)
    return max(functoriality_gaps(inst, cfg))


# Laxator -----------------------------------------------------------------------

@dataclass
class LaxatorInstance:
    S: ThermostaticSystem
    T: ThermostaticSystem
    Q: object
    R: object
    targets: list  # (x', y') pairs


def laxator_instance(rng, n_targets: int = 3) -> LaxatorInstance:
    """Random pair of pushforwards; about a third carry +inf and -inf sides."""
    S, T = random_system(rng), random_system(rng)
    kind = rng.random()
    if kind < 0.3:
        # +inf on the left (unbounded tank), -inf on the right (target out of reach)
        S = ThermostaticSystem(Orthant(1), LogTank(float(rng.uniform(0.5, 2.0))), "tank")
        Q = full(S.space, Singleton())
        R = random_graph(rng, T.space, 1)
        ys = [R.apply(x) for x in _sample_source(T.space, rng, n_targets)]
        if isinstance(T.space, Simplex):
            ys = [-y for y in ys[:1]] + [100.0 * y for y in ys[1:]]
        else:
            ys = [-y for y in ys]
        targets = [(np.zeros(0), y) for y in ys]
    else:
        Q = random_graph(rng, S.space, int(rng.integers(1, 3)))
        R = random_graph(rng, T.space, int(rng.integers(1, 3)))
        xs = _sample_source(S.space, rng, n_targets)
        ys = _sample_source(T.space, rng, n_targets)
        targets = [(Q.apply(x), R.apply(y)) for x, y in zip(xs, ys)]
    return LaxatorInstance(S, T, Q, R, targets)


def laxator_gaps(inst: LaxatorInstance, cfg: SolverConfig, add: Callable = xr_add) -> list[float]:
    joint = pushforward(sum_systems(inst.S, inst.T), rel_product(inst.Q, inst.R))
    left, right = pushforward(inst.S, inst.Q), pushforward(inst.T, inst.R)
    gaps = []
    for xp, yp in inst.targets:
        a = evaluate(joint, np.r_[xp, yp], cfg)
        b = add(evaluate(left, xp, cfg), evaluate(right, yp, cfg))
        gaps.append(xr_gap(a, b))
    return gaps


def _laxator_trial(rng, cfg, add) -> float:
    return max(laxator_gaps(laxator_instance(rng, 2), cfg, add))


# Equivariance ------------------------------------------------------------------

def _equivariance_trial(rng, cfg) -> float:
    n = int(rng.integers(2, 4))
    systems = [random_system(rng, int(rng.integers(1, 3))) for _ in range(n)]
    inputs = [s.space for s in systems]
    src = inputs[0]
    for x in inputs[1:]:
        src = Product(src, x)
    m = int(rng.integers(1, 3))
    rel = random_graph(rng, src, m)
    op = Operation(tuple(inputs), rel.target, rel)
    sigma = [int(i) for i in rng.permutation(n)]
    plain = act(op, systems)
    permuted = act(permute_op(op, sigma), permute_systems(systems, sigma))
    xs = [_sample_source(x, rng, 1)[0] for x in inputs]
    y = rel.apply(np.concatenate(xs))
    return xr_gap(evaluate(plain, y, cfg), evaluate(permuted, y, cfg))


# Oracle agreement --------------------------------------------------------------

def oracle_gap(entropy, feasible, cfg: SolverConfig, box=None) -> tuple[float, float]:
    """(|maximize - grid|, allowed bound); a status mismatch on infinities gives inf."""
    res = maximize(entropy, feasible, cfg)
    orc = brute_force(entropy, feasible, cfg, box)
    g = xr_gap(res.value, orc.value)
    if math.isinf(res.value) or math.isinf(orc.value):
        return g, 0.0
    return g, orc.bound + cfg.tol_value


def _oracle_trial(rng, cfg) -> float:
    S = random_system(rng, int(rng.integers(2, 4)))
    R = random_graph(rng, S.space, 1)
    y = R.apply(_sample_source(S.space, rng, 1)[0])
    g, bound = oracle_gap(S.entropy, fiber(R, y), cfg)
    return 0.0 if g <= bound else g


# Runner ------------------------------------------------------------------------

def run_laws(seed: int = 0, trials: int = 100, cfg: SolverConfig | None = None,
             add: Callable = xr_add, suites=SUITES, tol: float = LAW_TOL) -> list[SuiteReport]:
    cfg = cfg or SolverConfig()
    oracle_cfg = SolverConfig(tol_value=cfg.tol_value, tol_membership=cfg.tol_membership,
                              max_iters=cfg.max_iters, unbounded_threshold=cfg.unbounded_threshold,
                              grid_resolution=min(cfg.grid_resolution, 2001), seed=cfg.seed)
    trial_fns = {
        "convex": lambda r: _convex_trial(r),
        "functoriality": lambda r: _functoriality_trial(r, cfg),
        "laxator": lambda r: _laxator_trial(r, cfg, add),
        "equivariance": lambda r: _equivariance_trial(r, cfg),
        "oracle": lambda r: _oracle_trial(r, oracle_cfg),
    }
    reports = []
    for name in suites:
        worst, failures = 0.0, 0
        for t in range(trials):
            gap = trial_fns[name](_rng(seed, name, t))
            worst = max(worst, gap)
            failures += not gap <= tol
        reports.append(SuiteReport(name, trials, failures, worst))
    return reports


# Concavity ---------------------------------------------------------------------

def concavity_gap(sys: ThermostaticSystem, box: BoundingBox, seed: int = 0, triples: int = 1000,
                  cfg: SolverConfig | None = None) -> float:
    """Worst violation of ``S(c_l(x, y)) >= c_l(S(x), S(y))`` on seeded triples.

    Points are drawn from ``sys.space`` inside ``box``; returns 0 when none.
    """
    rng = np.random.default_rng(seed)
    if sys.space.dim == 0:
        pts = [np.zeros(0)] * (2 * triples)
    else:
        pts = sample(sys.space, box, seed, 2 * triples)
    lams = rng.uniform(0.0, 1.0, size=triples)
    worst = 0.0
    for i in range(triples):
        x, y, lam = pts[2 * i], pts[2 * i + 1], float(lams[i])
        mid = sys.space.combine(lam, x, y)
        lhs = evaluate(sys, mid, cfg)
        rhs = xr_combine(lam, evaluate(sys, x, cfg), evaluate(sys, y, cfg))
        if rhs == NEG_INF or lhs == POS_INF:
            continue
        if lhs == NEG_INF or rhs == POS_INF:
            return POS_INF
        worst = max(worst, rhs - lhs)
    return float(worst)


__all__ = ["SuiteReport", "run_laws", "concavity_gap", "xr_gap", "oracle_gap", "functoriality_instance",
           "functoriality_gaps", "laxator_instance", "laxator_gaps", "random_system", "random_graph",
           "SUITES", "LAW_TOL"]
