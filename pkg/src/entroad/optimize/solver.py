"""Concave maximisation over polyhedra.

Pipeline: presolve (drop free singleton columns and duplicate rows), reduce
equalities to a null-space parameterisation, find a strictly interior point
with a phase-one LP (HiGHS), then run a log-barrier Newton method on the
reduced variables. Unbounded ascent is caught when the iterate or the
objective crosses ``unbounded_threshold``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from ..errors import ConvergenceError, DomainError
from ..xreal import NEG_INF, POS_INF

ATTAINED = "attained"
APPROACHED = "approached"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

INTERIOR_MARGIN = 1e-7
NEWTON_TOL = 1e-9
PHI_RTOL = 1e-13
BARRIER_GROWTH = 10.0
ACTIVE_TOL = 1e-6
BOX_FACTOR = 10.0


@dataclass(frozen=True)
class SolverConfig:
    tol_value: float = 1e-8
    tol_membership: float = 1e-9
    tol_strict: float = 1e-9
    max_iters: int = 10000
    unbounded_threshold: float = 1e12
    grid_resolution: int = 10000
    seed: int = 0

    def __post_init__(self):
        for name in ("tol_value", "tol_membership", "tol_strict", "unbounded_threshold"):
            if not getattr(self, name) > 0:
                raise DomainError(f"solver setting {name} must be positive")
        if self.max_iters < 1 or self.grid_resolution < 2:
            raise DomainError("max_iters must be >= 1 and grid_resolution >= 2")


@dataclass
class MaxResult:
    value: float
    status: str
    argmax: np.ndarray | None = None
    iterations: int = 0
    certificate: np.ndarray | None = None
    lifted: np.ndarray | None = field(default=None, repr=False)

    @property
    def attained(self) -> bool:
        return self.status == ATTAINED


# Presolve -------------------------------------------------------------------

@dataclass
class _Reduced:
    keep: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    strict: np.ndarray
    eliminated: list  # (var, row coefficients over all vars, rhs) in elimination order
    fixed_free: list  # vars in no row and no term, set to 0


def _presolve(prog, A, b, G, h, strict) -> _Reduced:
    n = prog.n
    in_term = np.zeros(n, dtype=bool)
    for t in prog.terms:
        in_term[t.idx] = True
    for t, s in prog.epigraph:
        in_term[t.idx] = True
        in_term[s] = True
    for j in prog.linear:
        in_term[j] = True

    # duplicate inequality rows: keep one, strict wins
    if G.shape[0]:
        seen = {}
        rows = []
        for i in range(G.shape[0]):
            key = (G[i].tobytes(), h[i])
            if key in seen:
                strict[seen[key]] |= strict[i]
            else:
                seen[key] = i
                rows.append(i)
        G, h, strict = G[rows], h[rows], strict[rows]

    in_ineq = np.any(G != 0, axis=0) if G.shape[0] else np.zeros(n, dtype=bool)
    alive_rows = np.ones(A.shape[0], dtype=bool)
    alive_vars = np.ones(n, dtype=bool)
    eliminated = []
    changed = True
    while changed:
        changed = False
        nz = (A != 0) & alive_rows[:, None]
        counts = nz.sum(axis=0)
        for j in range(n):
            if not alive_vars[j] or in_term[j] or in_ineq[j] or counts[j] != 1:
                continue
            r = int(np.flatnonzero(nz[:, j])[0])
            eliminated.append((j, A[r].copy(), b[r]))
            alive_rows[r] = False
            alive_vars[j] = False
            changed = True
            break
    fixed_free = []
    nz = (A != 0) & alive_rows[:, None]
    for j in range(n):
        if alive_vars[j] and not in_term[j] and not in_ineq[j] and not nz[:, j].any():
            alive_vars[j] = False
            fixed_free.append(j)
    keep = np.flatnonzero(alive_vars)
    return _Reduced(keep, A[alive_rows][:, keep], b[alive_rows], G[:, keep], h, strict,
                    eliminated, fixed_free)


def _postsolve(red: _Reduced, n: int, v_keep: np.ndarray) -> np.ndarray:
    v = np.zeros(n)
    v[red.keep] = v_keep
    for j, row, rhs in reversed(red.eliminated):
        rest = row @ v - row[j] * v[j]
        v[j] = (rhs - rest) / row[j]
    return v


# Phase one ------------------------------------------------------------------

@dataclass
class _Interior:
    v0: np.ndarray
    N: np.ndarray
    Gz: np.ndarray
    hz: np.ndarray
    rows: np.ndarray  # indices into the presolved G of the rows still active


def _affine_hull(A, b, n, tol):
    if A.shape[0] == 0:
        return np.zeros(n), np.eye(n)
    v0, *_ = np.linalg.lstsq(A, b, rcond=None)
    scale = 1.0 + np.abs(b).max() + np.abs(A).max() * (1.0 + np.abs(v0).max())
    if np.max(np.abs(A @ v0 - b)) > tol * scale:
        return None, None
    N = null_space(A)
    N[np.abs(N) < 1e-14] = 0.0
    return v0, N


def find_interior(A, b, G, h, strict, cfg: SolverConfig):
    """Strictly interior point of the relative interior, or ``None`` if empty.

    Inequalities that hold with equality on the whole set are moved into the
    equalities (a strict one makes the set empty).
    """
    n = A.shape[1]
    A, b = A.copy(), b.copy()
    active = np.arange(G.shape[0])
    tol = cfg.tol_membership
    while True:
        v0, N = _affine_hull(A, b, n, tol)
        if v0 is None:
            return None
        Gz = G[active] @ N
        hz = h[active] - G[active] @ v0
        norms = np.abs(G[active]).max(axis=1) if active.size else np.zeros(0)
        const = np.abs(Gz).max(axis=1, initial=0.0) <= 1e-12 * np.maximum(norms, 1.0) if active.size else \
            np.zeros(0, dtype=bool)
        for i in np.flatnonzero(const):
            if hz[i] < -tol or (strict[active[i]] and hz[i] <= cfg.tol_strict):
                return None
        active, Gz, hz = active[~const], Gz[~const], hz[~const]
        if active.size == 0 or N.shape[1] == 0:
            if active.size and (np.any(hz < -tol) or np.any(hz[strict[active]] <= cfg.tol_strict)):
                return None
            return _Interior(v0, N, Gz, hz, active)
        if hz.min() > INTERIOR_MARGIN:
            return _Interior(v0, N, Gz, hz, active)
        k = N.shape[1]
        res = linprog(np.r_[np.zeros(k), -1.0], A_ub=np.hstack([Gz, np.ones((active.size, 1))]), b_ub=hz,
                      bounds=[(None, None)] * k + [(None, 1.0)], method="highs")
        if res.status != 0:
            raise ConvergenceError(f"phase-one LP failed: {res.message}")
        t = res.x[-1]
        # any positive margin is a genuine interior point, however thin the set
        if t > 1e-12 * (1.0 + np.abs(hz).max()):
            z0 = res.x[:k]
            return _Interior(v0 + N @ z0, N, Gz, hz - Gz @ z0, active)
        if t < -tol:
            return None
        lam = np.abs(res.ineqlin.marginals)
        tight = lam > 1e-9 * max(lam.max(), 1e-300)
        if not tight.any():
            return None
        moved = active[tight]
        if np.any(strict[moved]):
            return None
        A = np.vstack([A, G[moved]])
        b = np.r_[b, h[moved]]
        active = active[~tight]


def feasible_point(sys, tol: float = 1e-9):
    """A point satisfying the linear system (strict rows strictly), or ``None``."""
    A, b, G, h, strict = sys.matrices()
    cfg = SolverConfig(tol_membership=tol)
    if sys.n == 0:
        ok = (not A.shape[0] or np.all(np.abs(b) <= tol)) and \
             (not G.shape[0] or (np.all(h >= -tol) and np.all(h[strict] > 0)))
        return np.zeros(0) if ok else None
    it = find_interior(A, b, G, h, strict, cfg)
    return None if it is None else it.v0


# Barrier method -------------------------------------------------------------

class _Objective:
    """Objective, gradient and Hessian in reduced coordinates ``v = v0 + N z``."""

    def __init__(self, prog, red, c_lin, interior):
        self.N = interior.N
        self.v0 = interior.v0
        self.c = c_lin
        self.cz = self.N.T @ c_lin
        pos = {int(j): k for k, j in enumerate(red.keep)}
        self.terms = [(t, np.array([pos[int(j)] for j in t.idx])) for t in prog.terms]
        self.epi = [(t, np.array([pos[int(j)] for j in t.idx]), pos[s]) for t, s in prog.epigraph]
        self.Nt = [self.N[ix] for _, ix in self.terms]
        self.Ne = [(self.N[ix], self.N[s]) for _, ix, s in self.epi]

    def v(self, z):
        return self.v0 + self.N @ z

    def value(self, v):
        f = float(self.c @ v)
        for t, ix in self.terms:
            f += t.value(v[ix])
        return f

    def epi_slacks(self, v):
        return np.array([t.value(v[ix]) - v[s] for t, ix, s in self.epi])

    def derivs(self, v):
        k = self.N.shape[1]
        f = float(self.c @ v)
        g = self.cz.copy()
        H = np.zeros((k, k))
        for (t, ix), Nt in zip(self.terms, self.Nt):
            ft, gt, Ht = t.local(v[ix])
            f += ft
            g += Nt.T @ gt
            H += Nt.T @ Ht @ Nt
        return f, g, H

    def epi_derivs(self, v):
        out = []
        for (t, ix, s), (Nt, Ns) in zip(self.epi, self.Ne):
            ft, gt, Ht = t.local(v[ix])
            out.append((ft - v[s], Nt.T @ gt - Ns, Nt.T @ Ht @ Nt))
        return out


def _barrier(obj, Gz, hz, t, z):
    """Barrier value at z, or +inf outside the domain."""
    v = obj.v(z)
    if Gz.shape[0]:
        s = hz - Gz @ z
        if np.any(s <= 0):
            return math.inf, None
        phi = -np.sum(np.log(s))
    else:
        phi = 0.0
    if obj.epi:
        e = obj.epi_slacks(v)
        if np.any(~(e > 0)):
            return math.inf, None
        phi -= np.sum(np.log(e))
    f = obj.value(v)
    if not math.isfinite(f):
        return math.inf, None
    return -t * f + phi, f


def solve(prog, cfg: SolverConfig) -> MaxResult:
    """Maximise the program's objective; see module docstring."""
    n = prog.n
    if prog.const == NEG_INF:
        return MaxResult(NEG_INF, INFEASIBLE)
    A, b, G, h, strict = prog.matrices()
    red = _presolve(prog, A, b, G, h, strict)
    k_keep = red.keep.size
    interior = find_interior(red.A, red.b, red.G, red.h, red.strict, cfg) if k_keep else \
        _trivial_interior(red, cfg)
    if interior is None:
        return MaxResult(NEG_INF, INFEASIBLE)
    if prog.const == POS_INF:
        v = _postsolve(red, n, interior.v0)
        return MaxResult(POS_INF, UNBOUNDED, lifted=v)
    c_lin = prog.linear_vector()[red.keep]
    obj = _Objective(prog, red, c_lin, interior)
    if obj.epi:
        # start the epigraph variables strictly below every concave constraint
        v0 = interior.v0
        for t, ix, s in obj.epi:
            v0[s] = min(v0[s], min(tt.value(v0[ii]) for tt, ii, ss in obj.epi if ss == s) - 1.0)
    return _barrier_solve(prog, red, obj, interior, cfg)


def _trivial_interior(red, cfg):
    # every variable was presolved away; the remaining rows are constants
    if red.G.shape[0]:
        if np.any(red.h < -cfg.tol_membership) or np.any(red.h[red.strict] <= cfg.tol_strict):
            return None
    return _Interior(np.zeros(0), np.zeros((0, 0)), np.zeros((red.G.shape[0], 0)), red.h, np.arange(red.G.shape[0]))


def _finish(prog, red, obj, z, f, status, iters, cfg, certificate=None) -> MaxResult:
    v = _postsolve(red, prog.n, obj.v(z))
    value = f + prog.const
    argmax = v[:prog.n_primary].copy() if status == ATTAINED else None
    return MaxResult(value, status, argmax, iters, certificate, v)


def _barrier_solve(prog, red, obj, interior, cfg) -> MaxResult:
    Gz, hz = interior.Gz, interior.hz
    k = interior.N.shape[1]
    m = Gz.shape[0] + len(obj.epi)
    z = np.zeros(k)
    v_start = obj.v(z)
    if k == 0:
        f = obj.value(v_start)
        return _finish(prog, red, obj, z, f, _status(red, obj, z, interior), 0, cfg)

    thr = cfg.unbounded_threshold
    gap_target = cfg.tol_value * 1e-2
    # A far box keeps the barrier bounded along directions where the objective
    # is flat; rays that still gain value trip the unbounded test first.
    box = BOX_FACTOR * thr
    Gz = np.vstack([Gz, np.eye(k), -np.eye(k)])
    hz = np.r_[hz, np.full(2 * k, box)]
    m += 2 * k
    t = 1.0
    iters = 0
    best = (z.copy(), obj.value(v_start))
    while True:
        # centering
        while True:
            iters += 1
            if iters > cfg.max_iters:
                zb, fb = best
                raise ConvergenceError(f"no convergence after {cfg.max_iters} iterations",
                                       _finish(prog, red, obj, zb, fb, APPROACHED, iters, cfg))
            v = obj.v(z)
            f, g, H = obj.derivs(v)
            g = -t * g
            H = -t * H
            if Gz.shape[0]:
                s = hz - Gz @ z
                Gs = Gz / s[:, None]
                g += Gs.sum(axis=0)
                H += Gs.T @ Gs
            for e, ge, He in obj.epi_derivs(v):
                g -= ge / e
                H += np.outer(ge, ge) / (e * e) - He / e
            d, ray = _direction(H, g)
            phi0, _ = _barrier(obj, Gz, hz, t, z)
            slope = float(g @ d)
            # phi/t is what matters; below this decrement the change in f is rounding noise
            if not ray and -slope / 2.0 <= max(NEWTON_TOL, PHI_RTOL * (1.0 + abs(phi0))):
                break
            step, phi1, f1 = _line_search(obj, Gz, hz, t, z, d, phi0, slope, ray, thr, v_start)
            if step is None:
                break
            z_new = z + step * d
            if np.array_equal(z_new, z):
                break
            z = z_new
            v = obj.v(z)
            if f1 > best[1]:
                best = (z.copy(), f1)
            dist = float(np.linalg.norm(v - v_start))
            if (f1 > thr or dist > thr) and _still_rising(obj, v_start, v, f1):
                cert = (v - v_start) / dist if dist > 0 else None
                vfull = _postsolve(red, prog.n, v)
                return MaxResult(POS_INF, UNBOUNDED, None, iters, cert, vfull)
        if m == 0 or m / t <= gap_target:
            break
        t *= BARRIER_GROWTH
    f = obj.value(obj.v(z))
    return _finish(prog, red, obj, z, f, _status(red, obj, z, interior), iters, cfg)


def _still_rising(obj, v_start, v, f):
    """Whether the objective still increases along the segment's far half."""
    f_mid = obj.value(0.5 * (v_start + v))
    return f - f_mid > 1e-9 * (1.0 + abs(f))


def _direction(H, g):
    lam, Q = np.linalg.eigh(H)
    top = max(lam.max(initial=0.0), 0.0)
    flat = lam <= 1e-13 * top if top > 0 else np.ones(lam.size, dtype=bool)
    gq = Q.T @ g
    if flat.any() and np.linalg.norm(gq[flat]) > 1e-9 * (1.0 + np.linalg.norm(g)):
        d = -Q[:, flat] @ gq[flat]
        return d / np.linalg.norm(d), True
    keep = ~flat
    return -Q[:, keep] @ (gq[keep] / lam[keep]), False


def _line_search(obj, Gz, hz, t, z, d, phi0, slope, ray, thr, v_start):
    """Backtracking (Armijo); ray directions also expand while improving."""
    if ray:
        step = 1.0 + float(np.linalg.norm(z))
        best = None
        for _ in range(200):
            phi, f = _barrier(obj, Gz, hz, t, z + step * d)
            if phi < phi0 + 1e-4 * step * slope:
                best = (step, phi, f)
                if f > thr or float(np.linalg.norm(obj.v(z + step * d) - v_start)) > thr:
                    return best
                step *= 2.0
            elif best is not None:
                return best
            else:
                step *= 0.5
                if step < 1e-14:
                    return None, None, None
        return best if best is not None else (None, None, None)
    step = 1.0
    for _ in range(80):
        phi, f = _barrier(obj, Gz, hz, t, z + step * d)
        if phi <= phi0 + 0.25 * step * slope:
            return step, phi, f
        step *= 0.5
    return None, None, None


def _status(red, obj, z, interior) -> str:
    """Attained unless a strict inequality is numerically active."""
    if not interior.rows.size:
        return ATTAINED
    s = interior.hz - interior.Gz @ z
    st = red.strict[interior.rows]
    h = np.abs(red.h[interior.rows])
    if np.any(st & (s <= ACTIVE_TOL * (1.0 + h))):
        return APPROACHED
    return ATTAINED
