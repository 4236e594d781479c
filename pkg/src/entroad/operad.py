"""The operad of convex relations and its entropy algebra.

An n-ary operation is a convex relation from the left-nested product of its
input spaces to an output space. The algebra ``act`` sums the input
entropies and pushes the sum forward along the relation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .convex import ConvexSpace, product_of, same_space
from .errors import DomainError
from .optimize import pushforward
from .relation import ConvexRelation, Graph, compose, identity, rel_product_of
from .system import ThermostaticSystem, sum_systems, unit_system


@dataclass(frozen=True, eq=False)
class Operation:
    inputs: tuple
    output: ConvexSpace
    rel: ConvexRelation

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        src = product_of(self.inputs)
        if not same_space(self.rel.source, src):
            raise DomainError(f"operation relation starts at {self.rel.source!r}, inputs give {src!r}")
        if not same_space(self.rel.target, self.output):
            raise DomainError(f"operation relation ends at {self.rel.target!r}, output is {self.output!r}")

    @property
    def arity(self) -> int:
        return len(self.inputs)

    @property
    def source(self) -> ConvexSpace:
        return product_of(self.inputs)


def operation(inputs: Sequence[ConvexSpace], output: ConvexSpace, rel: ConvexRelation) -> Operation:
    return Operation(tuple(inputs), output, rel)


def identity_op(space: ConvexSpace) -> Operation:
    return Operation((space,), space, identity(space))


def op_compose(g: Operation, fs: Sequence[Operation]) -> Operation:
    """Plug ``fs[i]`` into input i of ``g``."""
    fs = list(fs)
    if len(fs) != g.arity:
        raise DomainError(f"op_compose: g has {g.arity} inputs, got {len(fs)} operations")
    for i, (f, x) in enumerate(zip(fs, g.inputs)):
        if not same_space(f.output, x):
            raise DomainError(f"op_compose: slot {i} expects {x!r}, operation {i} outputs {f.output!r}")
    inputs = tuple(x for f in fs for x in f.inputs)
    rel = compose(rel_product_of([f.rel for f in fs]), g.rel)
    return Operation(inputs, g.output, rel)


def _check_perm(sigma, n):
    sigma = [int(s) for s in sigma]
    if sorted(sigma) != list(range(n)):
        raise DomainError(f"{sigma} is not a permutation of 0..{n - 1}")
    return sigma


def block_permutation(inputs: Sequence[ConvexSpace], sigma) -> Graph:
    """Graph from the product of reordered inputs back to the original product.

    Reordered input i is original input ``sigma[i]``.
    """
    inputs = list(inputs)
    sigma = _check_perm(sigma, len(inputs))
    offs = np.cumsum([0] + [x.dim for x in inputs])
    new = [inputs[s] for s in sigma]
    d = int(offs[-1])
    M = np.zeros((d, d))
    col = 0
    for s in sigma:
        for k in range(inputs[s].dim):
            M[offs[s] + k, col] = 1.0
            col += 1
    return Graph(product_of(new), product_of(inputs), M)


def permute_op(op: Operation, sigma) -> Operation:
    """Reorder the inputs of ``op``: new input i is old input ``sigma[i]``."""
    if len(list(sigma)) != op.arity:
        raise DomainError(f"permutation of length {len(list(sigma))} for an operation of arity {op.arity}")
    P = block_permutation(op.inputs, sigma)
    inputs = tuple(op.inputs[s] for s in sigma)
    return Operation(inputs, op.output, compose(P, op.rel))


def permute_systems(systems: Sequence[ThermostaticSystem], sigma) -> list:
    sigma = _check_perm(sigma, len(systems))
    return [systems[s] for s in sigma]


def tensor(systems: Sequence[ThermostaticSystem]) -> ThermostaticSystem:
    """Left-nested sum of systems; the empty sum is the unit system."""
    systems = list(systems)
    if not systems:
        return unit_system()
    out = systems[0]
    for s in systems[1:]:
        out = sum_systems(out, s)
    return out


def act(op: Operation, systems: Sequence[ThermostaticSystem]) -> ThermostaticSystem:
    """The entropy algebra: sum the systems, then push forward along ``op.rel``."""
    systems = list(systems)
    if len(systems) != op.arity:
        raise DomainError(f"act: operation takes {op.arity} systems, got {len(systems)}")
    for i, (s, x) in enumerate(zip(systems, op.inputs)):
        if not same_space(s.space, x):
            raise DomainError(f"act: system {i} ({s.name}) lives on {s.space!r}, slot expects {x!r}")
    return pushforward(tensor(systems), op.rel)
