"""Lowering of entropies and relations into one polyhedral program.

A :class:`Program` is a :class:`LinearSystem` plus a concave objective made of
a linear part, a constant and a list of smooth concave terms. Pushed-forward
entropies are lifted: their source states become extra variables and their
relation becomes extra constraints, so nested suprema collapse into a single
maximisation.
"""

from __future__ import annotations

import math

import numpy as np

from ..convex import LinearSystem
from ..errors import UnsupportedError
from ..system import (Affine, Constant, EntropyFn, HeatBath, LogTank, Measurement, Pushforward, Quadratic,
                      SackurTetrode, Shannon, Sum, VonNeumann)
from ..xreal import xr_add

_TINY = 1e-300
_ROUNDING = 1e-12  # null-space reconstruction noise on coordinates pinned to 0


class LogTerm:
    """``C log v[i]``."""

    def __init__(self, idx, C):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.C = float(C)

    def value(self, u):
        return self.C * math.log(u[0]) if u[0] > 0 else -math.inf

    def local(self, u):
        U = u[0]
        return (self.C * math.log(U), np.array([self.C / U]), np.array([[-self.C / (U * U)]]))


class SackurTerm:
    """``N log V + 1.5 N log U - 2.5 N log N + k N`` on ``(U, V, N)``."""

    def __init__(self, idx, offset):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.k = float(offset)

    def value(self, u):
        U, V, N = u
        if U <= 0 or V <= 0 or N <= 0:
            return -math.inf
        return N * math.log(V) + 1.5 * N * math.log(U) - 2.5 * N * math.log(N) + self.k * N

    def local(self, u):
        U, V, N = u
        lU, lV, lN = math.log(U), math.log(V), math.log(N)
        f = N * lV + 1.5 * N * lU - 2.5 * N * lN + self.k * N
        g = np.array([1.5 * N / U, N / V, lV + 1.5 * lU - 2.5 * lN - 2.5 + self.k])
        H = np.array([[-1.5 * N / U ** 2, 0.0, 1.5 / U],
                      [0.0, -N / V ** 2, 1.0 / V],
                      [1.5 / U, 1.0 / V, -2.5 / N]])
        return f, g, H


class ShannonTerm:
    """``-sum q log q`` with ``q = W v[idx]``."""

    def __init__(self, idx, W=None):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.W = np.eye(self.idx.size) if W is None else np.asarray(W, dtype=float)

    def value(self, u):
        q = self.W @ u
        if np.any(q < -_ROUNDING):
            return -math.inf
        q = np.maximum(q, 0.0)
        qs = np.where(q > 0, q, 1.0)
        return float(-np.sum(np.where(q > 0, q * np.log(qs), 0.0)))

    def local(self, u):
        q = self.W @ u
        qs = np.maximum(q, _TINY)
        lq = np.log(qs)
        f = float(-np.sum(np.where(q > 0, q * lq, 0.0)))
        g = self.W.T @ (-(lq + 1.0))
        H = -(self.W.T * (1.0 / qs)) @ self.W
        return f, g, H


class QuadTerm:
    """``b - (v[idx] - c)' Q (v[idx] - c)``."""

    def __init__(self, idx, Q, c, b):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.Q, self.c, self.b = Q, c, b

    def value(self, u):
        d = u - self.c
        return self.b - float(d @ self.Q @ d)

    def local(self, u):
        d = u - self.c
        Qd = self.Q @ d
        return self.b - float(d @ Qd), -2.0 * Qd, -2.0 * self.Q


class Program(LinearSystem):
    def __init__(self):
        super().__init__()
        self.terms = []
        self.epigraph = []  # (ShannonTerm, s index): term(v) - v[s] > 0
        self.linear = {}
        self.const = 0.0
        self.n_primary = 0

    def add_linear(self, idx, coef):
        for j, c in zip(np.atleast_1d(idx), np.atleast_1d(coef)):
            if c != 0.0:
                self.linear[int(j)] = self.linear.get(int(j), 0.0) + float(c)

    def linear_vector(self) -> np.ndarray:
        c = np.zeros(self.n)
        for j, v in self.linear.items():
            c[j] = v
        return c

    def lower_entropy(self, fn: EntropyFn, idx) -> None:
        lower_entropy(self, fn, idx)

    @classmethod
    def from_constraints(cls, cs) -> "Program":
        prog = cls()
        src = cs.system
        prog.n = src.n
        prog._eq = [(dict(c), r) for c, r in src._eq]
        prog._ineq = [(dict(c), r, s) for c, r, s in src._ineq]
        prog.n_primary = cs.n_primary
        return prog


def lower_entropy(prog: Program, fn: EntropyFn, idx) -> None:
    idx = np.asarray(idx, dtype=np.intp)
    if isinstance(fn, Sum):
        k = fn.left.dim
        lower_entropy(prog, fn.left, idx[:k])
        lower_entropy(prog, fn.right, idx[k:])
    elif isinstance(fn, LogTank):
        prog.terms.append(LogTerm(idx, fn.C))
        prog.add_ineq([(idx, [-1.0])], 0.0, strict=True)
    elif isinstance(fn, SackurTetrode):
        prog.terms.append(SackurTerm(idx, fn.offset))
        for j in range(3):
            prog.add_ineq([(idx[j:j + 1], [-1.0])], 0.0, strict=True)
    elif isinstance(fn, HeatBath):
        prog.add_linear(idx, [1.0 / fn.T0])
    elif isinstance(fn, Affine):
        prog.add_linear(idx, fn.a)
        prog.const = xr_add(prog.const, fn.b)
    elif isinstance(fn, Shannon):
        prog.terms.append(ShannonTerm(idx))
        prog.add_matrix_ineq([(idx, -np.eye(idx.size))], np.zeros(idx.size), False)
    elif isinstance(fn, Measurement):
        s = prog.new_vars(1)
        prog.add_linear(s, [1.0])
        for e in fn.maps:
            prog.epigraph.append((ShannonTerm(idx, e.matrix), int(s[0])))
            prog.add_matrix_ineq([(idx, -e.matrix)], np.zeros(e.outcomes), False)
    elif isinstance(fn, Quadratic):
        prog.terms.append(QuadTerm(idx, fn.Q, fn.c, fn.b))
    elif isinstance(fn, Constant):
        prog.const = xr_add(prog.const, fn.v)
    elif isinstance(fn, Pushforward):
        inner = fn.inner
        w = prog.new_vars(inner.space.dim)
        prog.add_space(inner.space, w)
        fn.rel.lower(prog, w, idx)
        lower_entropy(prog, inner.entropy, w)
    elif isinstance(fn, VonNeumann):
        raise UnsupportedError("von Neumann entropy can be evaluated but not maximised; "
                               "restrict to diagonal states and use Shannon entropy instead")
    else:
        raise UnsupportedError(f"no lowering for entropy {type(fn).__name__}")
