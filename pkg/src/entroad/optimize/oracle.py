"""Independent checks for the optimizer.

``brute_force`` evaluates the entropy formula on a regular grid over the
affine hull of a feasible set; it shares nothing with the barrier solver
beyond the constraint matrices. ``nested_sup`` computes an iterated
pushforward by golden-section search over a one-dimensional outer fiber,
as a cross-check for the lifted treatment of composite relations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr
from scipy.optimize import linprog

from ..convex import LinearSystem, Const
from ..errors import UnsupportedError
from ..relation import fiber
from ..system import Pushforward, ThermostaticSystem
from ..xreal import NEG_INF, POS_INF
from .solver import SolverConfig

MAX_ORACLE_DIM = 4
GRID_BUDGET = 2_000_000
COARSE_RESOLUTION = 65
DECADES = 13
GOLDEN_STEPS = 80
ROUNDING = 1e-12
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OracleResult:
    value: float
    argmax: np.ndarray | None
    spacing: float
    lipschitz: float

    @property
    def bound(self) -> float:
        """Agreement bound ``2 * spacing * L`` for a concave maximum."""
        return 2.0 * self.spacing * self.lipschitz


def _hull(A, b, n):
    """Split coordinates into free and dependent ones (QR with pivoting)."""
    if A.shape[0] == 0:
        return np.arange(n), np.zeros(0, dtype=int), True
    _, R, piv = qr(A, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R))
    r = int(np.sum(diag > 1e-10 * max(diag.max(initial=0.0), 1.0)))
    dep, free = np.sort(piv[:r]), np.sort(piv[r:])
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    ok = np.max(np.abs(A @ x - b), initial=0.0) <= 1e-9 * (1.0 + np.abs(b).max(initial=0.0))
    return free, dep, ok


def _lp_bounds(A, b, G, h, j, n):
    """Range of coordinate j over the closure of the polyhedron; None if empty."""
    out = []
    for sign in (1.0, -1.0):
        c = np.zeros(n)
        c[j] = sign
        res = linprog(c, A_ub=G if G.shape[0] else None, b_ub=h if G.shape[0] else None,
                      A_eq=A if A.shape[0] else None, b_eq=b if A.shape[0] else None,
                      bounds=[(None, None)] * n, method="highs")
        if res.status == 2:
            return None
        if res.status == 3:
            out.append(-math.inf if sign > 0 else math.inf)
        elif res.status == 0:
            out.append(sign * res.fun)
        else:
            raise RuntimeError(f"bounding LP failed: {res.message}")
    return out[0], out[1]


class _Grid:
    def __init__(self, f, feasible, cfg, box):
        self.f = f
        self.cfg = cfg
        self.n = feasible.n_primary
        self.cs = feasible
        A, b, G, h, strict = feasible.system.matrices()
        self.full = (A, b, G, h, strict)
        self.aux = feasible.n_aux > 0
        if self.aux:
            self.free, self.dep, self.ok = np.arange(self.n), np.zeros(0, dtype=int), True
            self.A = np.zeros((0, self.n))
            self.b = np.zeros(0)
        else:
            self.A, self.b, self.G, self.h, self.strict = A, b, G, h, strict
            self.free, self.dep, self.ok = _hull(A, b, self.n)
        self.box = box

    def points(self, axes):
        k = len(axes)
        if k == 0:
            z = np.zeros((1, 0))
        else:
            mesh = np.meshgrid(*axes, indexing="ij")
            z = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        x = np.zeros((z.shape[0], self.n))
        x[:, self.free] = z
        if self.dep.size:
            Ad, Af = self.A[:, self.dep], self.A[:, self.free]
            rhs = self.b[:, None] - Af @ z.T
            sol, *_ = np.linalg.lstsq(Ad, rhs, rcond=None)
            # back-substitution noise on coordinates pinned to 0 would read as negative
            scale = 1.0 + np.abs(self.b).max(initial=0.0) + np.abs(z).max(initial=0.0)
            sol[np.abs(sol) <= ROUNDING * scale] = 0.0
            x[:, self.dep] = sol.T
        return x

    def member(self, x):
        tol = self.cfg.tol_membership
        if self.aux:
            return np.array([self.cs.contains(p, tol) for p in x], dtype=bool)
        ok = np.ones(x.shape[0], dtype=bool)
        if self.A.shape[0]:
            ok &= np.all(np.abs(x @ self.A.T - self.b) <= tol * (1.0 + np.abs(self.b)), axis=1)
        if self.G.shape[0]:
            r = x @ self.G.T - self.h
            ok &= np.all(np.where(self.strict, r < 0.0, r <= tol), axis=1)
        if self.box is not None:
            lo, hi = np.array(self.box.lo), np.array(self.box.hi)
            ok &= np.all((x >= lo - tol) & (x <= hi + tol), axis=1)
        return ok

    def evaluate(self, lo, hi, res):
        k = self.free.size
        axes = [np.linspace(lo[i], hi[i], res) for i in range(k)]
        x = self.points(axes)
        vals = np.full(x.shape[0], NEG_INF)
        ok = self.member(x)
        if ok.any():
            with np.errstate(all="ignore"):
                v = np.asarray(self.f(x[ok]), dtype=float)
            vals[ok] = np.where(np.isnan(v), NEG_INF, v)
        return axes, x, vals


def _free_bounds(g: _Grid):
    A, b, G, h, _ = g.full
    n_all = A.shape[1]
    lo, hi = [], []
    for j in g.free:
        bnd = _lp_bounds(A, b, G, h, j, n_all)
        if bnd is None:
            return None, None
        l, u = bnd
        if g.box is not None:
            l, u = max(l, g.box.lo[j]), min(u, g.box.hi[j])
        lo.append(l)
        hi.append(u)
    return np.array(lo, dtype=float), np.array(hi, dtype=float)


def _resolution(cfg, k):
    res = int(cfg.grid_resolution)
    if k > 0:
        res = min(res, int(GRID_BUDGET ** (1.0 / k)))
    return max(res, 2)


def _scan(g: _Grid, lo, hi, res) -> OracleResult:
    axes, x, vals = g.evaluate(lo, hi, res)
    k = len(axes)
    best = int(np.argmax(vals))
    value = float(vals[best])
    if value == NEG_INF:
        return OracleResult(NEG_INF, None, 0.0, 0.0)
    steps = np.array([(hi[i] - lo[i]) / (res - 1) for i in range(k)])
    spacing = float(steps.max(initial=0.0))
    lip = 0.0
    if k:
        grid = vals.reshape((res,) * k)
        pos = np.unravel_index(best, grid.shape)
        xg = x.reshape((res,) * k + (g.n,))
        # full 3^k stencil: near a sharp corner of the set the axis neighbours can be
        # infeasible while a diagonal one still sees the steep direction
        for off in itertools.product((-1, 0, 1), repeat=k):
            q = tuple(int(p) + o for p, o in zip(pos, off))
            if not any(off) or not all(0 <= c < res for c in q) or not np.isfinite(grid[q]):
                continue
            dist = float(np.linalg.norm(xg[q] - xg[pos]))
            if dist > 0.0:
                lip = max(lip, abs(grid[q] - value) / dist)
                spacing = max(spacing, dist)
    return OracleResult(value, x[best].copy(), spacing, lip)


def brute_force(f, feasible, cfg: SolverConfig | None = None, box=None) -> OracleResult:
    """Grid maximum of ``f`` over ``feasible``.

    The grid covers the free coordinates of the affine hull, spanning ``box``
    or the LP bounds of the set. Sets unbounded in some free direction are
    probed decade by decade; ascent that is still going at 1e12 reports +inf.
    """
    cfg = cfg or SolverConfig()
    if feasible.n_primary > MAX_ORACLE_DIM:
        raise UnsupportedError(f"grid oracle refuses dimension {feasible.n_primary} > {MAX_ORACLE_DIM}")
    g = _Grid(f, feasible, cfg, box)
    if not g.ok:
        return OracleResult(NEG_INF, None, 0.0, 0.0)
    lo, hi = _free_bounds(g)
    if lo is None or np.any(lo > hi):
        return OracleResult(NEG_INF, None, 0.0, 0.0)
    k = g.free.size
    res = _resolution(cfg, k)
    if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
        return _scan(g, lo, hi, res)
    return _expanding(g, lo, hi, res)


def _expanding(g: _Grid, lo, hi, res) -> OracleResult:
    A, b, G, h, _ = g.full
    n_all = A.shape[1]
    sol = linprog(np.zeros(n_all), A_ub=G if G.shape[0] else None, b_ub=h if G.shape[0] else None,
                  A_eq=A if A.shape[0] else None, b_eq=b if A.shape[0] else None,
                  bounds=[(None, None)] * n_all, method="highs")
    centre = sol.x[g.free]
    coarse = min(res, COARSE_RESOLUTION)
    history = []
    thr = g.cfg.unbounded_threshold
    for j in range(DECADES):
        R = 10.0 ** j
        l, u = np.maximum(lo, centre - R), np.minimum(hi, centre + R)
        v = _scan(g, l, u, coarse).value
        if v > thr:
            return OracleResult(POS_INF, None, 0.0, 0.0)
        history.append(v)
        if j >= 2 and all(history[i] <= history[i - 1] + 1e-12 * (1.0 + abs(history[i - 1]))
                          for i in (j, j - 1)):
            R = 10.0 ** (int(np.argmax(history)) + 1)
            l, u = np.maximum(lo, centre - R), np.minimum(hi, centre + R)
            return _scan(g, l, u, res)
    return OracleResult(POS_INF, None, 0.0, 0.0)


def brute_force_sup(f, feasible, cfg: SolverConfig | None = None, box=None) -> float:
    return brute_force(f, feasible, cfg, box).value


# Nested pushforward ------------------------------------------------------------

def nested_sup(sys: ThermostaticSystem, R, Rp, z, cfg: SolverConfig | None = None) -> float:
    """``Rp_*(R_* S)(z)`` with the outer sup done by golden-section search.

    The outer fiber must have an affine hull of dimension at most one.
    """
    cfg = cfg or SolverConfig()
    z = np.asarray(z, dtype=float).reshape(-1)
    if not Rp.target.contains(z, cfg.tol_membership):
        return NEG_INF
    outer = fiber(Rp, z)
    if outer.n_aux:
        raise UnsupportedError("nested_sup needs an outer relation without composite middles")
    inner = Pushforward(sys, R)
    A, b, _, _, _ = outer.system.matrices()
    free, dep, ok = _hull(A, b, outer.n_primary)
    if not ok:
        return NEG_INF
    if free.size > 1:
        raise UnsupportedError(f"outer fiber has {free.size} free coordinates; nested_sup handles one")

    def point(t):
        y = np.zeros(outer.n_primary)
        y[free] = t
        if dep.size:
            rhs = b - A[:, free] @ np.atleast_1d(t)
            y[dep] = np.linalg.lstsq(A[:, dep], rhs, rcond=None)[0]
        return y

    def g(t):
        y = point(t)
        if not outer.contains(y, cfg.tol_membership):
            return NEG_INF
        return float(inner.solve(y, cfg).value)

    if free.size == 0:
        return g(np.zeros(0))

    # range of the free coordinate over pairs (x, y) with (x, y) in R and y in the outer fiber
    lifted = LinearSystem()
    x = lifted.new_vars(sys.space.dim)
    y = lifted.new_vars(R.target.dim)
    lifted.add_space(sys.space, x)
    lifted.add_space(R.target, y)
    R.lower(lifted, x, y)
    Rp.lower(lifted, y, Const(z))
    La, lb, LG, lh, _ = lifted.matrices()
    j = int(y[free[0]])
    bnd = _lp_bounds(La, lb, LG, lh, j, lifted.n)
    if bnd is None:
        return NEG_INF
    lo, hi = bnd
    if lo > hi:
        return NEG_INF
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi, early = _bracket(g, lo, hi, La, lb, LG, lh, j, lifted.n, cfg)
        if early is not None:
            return early
    return _golden(g, lo, hi)


def _bracket(g, lo, hi, A, b, G, h, j, n, cfg):
    """Finite interval containing the maximiser of the concave ``g`` on ``[lo, hi]``."""
    c = np.zeros(n)
    sol = linprog(c, A_ub=G if G.shape[0] else None, b_ub=h if G.shape[0] else None,
                  A_eq=A if A.shape[0] else None, b_eq=b if A.shape[0] else None,
                  bounds=[(None, None)] * n, method="highs")
    t0 = float(sol.x[j])
    if math.isfinite(lo) and math.isfinite(hi):
        return lo, hi, None
    ends = []
    for sign, end in ((-1.0, lo), (1.0, hi)):
        if math.isfinite(end):
            ends.append(end)
            continue
        s = 1.0
        prev = g(t0)
        while True:
            cur = g(t0 + sign * s)
            if cur == POS_INF or cur > cfg.unbounded_threshold:
                return lo, hi, POS_INF
            if cur < prev:
                break
            if s > cfg.unbounded_threshold:
                return lo, hi, POS_INF
            prev = cur
            s *= 2.0
        ends.append(t0 + sign * s)
    return ends[0], ends[1], None


def _golden(g, lo, hi) -> float:
    best = max(g(lo), g(hi))
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(GOLDEN_STEPS):
        if gc == POS_INF or gd == POS_INF:
            return POS_INF
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _INVPHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INVPHI * (b - a)
            gd = g(d)
        best = max(best, gc, gd)
        if b - a <= 1e-13 * (1.0 + abs(a) + abs(b)):
            break
    return max(best, gc, gd)
