"""JSON documents: named spaces, systems and relations plus a composition tree.

Declarations may reference names declared earlier in their own section (and
any space). Everything is resolved and type-checked in :func:`load` before
the caller runs a single solve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import convex, relation
from .convex import ConvexSpace, product_of, same_space
from .errors import DomainError, ValidationError
from .operad import Operation, act
from .optimize import SolverConfig, pushforward
from .system import (Affine, Constant, HeatBath, LogTank, Measurement, Pushforward, Quadratic, SackurTetrode, Shannon,
                     StochasticMap, ThermostaticSystem, VonNeumann, density_matrix_space)
from .xreal import format_xr, parse_xr

SECTIONS = ("solver", "spaces", "systems", "relations", "compose", "queries")


@dataclass
class Document:
    solver: SolverConfig
    spaces: dict
    systems: dict
    relations: dict
    compose: object  # system name or {"op": name, "children": [...]}
    queries: list
    raw: dict = field(repr=False, default_factory=dict)
    root: ThermostaticSystem | None = None
    argmax_names: list = field(default_factory=list)

    @property
    def target(self) -> ConvexSpace:
        return self.root.space


def _num(v, where):
    if isinstance(v, str):
        try:
            return parse_xr(v)
        except (ValueError, DomainError):
            raise ValidationError(f"{where}: {v!r} is not a number") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _vec(v, where):
    if not isinstance(v, list):
        raise ValidationError(f"{where}: expected a list of numbers")
    return [_num(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _mat(v, where):
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise ValidationError(f"{where}: expected a list of rows")
    return [_vec(r, f"{where}[{i}]") for i, r in enumerate(v)]


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{where}: expected an integer, got {v!r}")
    return v


def _keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ValidationError(f"{where}: unknown keys {sorted(extra)}")


# Solver -------------------------------------------------------------------------

def _solver(raw) -> SolverConfig:
    names = [f.name for f in fields(SolverConfig)]
    _keys(raw, names, "solver")
    kw = {}
    for k, v in raw.items():
        kw[k] = _int(v, f"solver.{k}") if k in ("max_iters", "grid_resolution", "seed") else _num(v, f"solver.{k}")
    try:
        return SolverConfig(**kw)
    except DomainError as exc:
        raise ValidationError(f"solver: {exc}") from None


def _solver_dict(cfg: SolverConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(SolverConfig)}


# Spaces -------------------------------------------------------------------------

def _kind(d, where):
    if not isinstance(d, dict) or "kind" not in d:
        raise ValidationError(f"{where}: needs a 'kind'")
    return d["kind"]


def _rows(rows, where, with_strict):
    """Rows ``{"a": [...], "b": x}`` (plus "strict") of a polyhedron."""
    if not isinstance(rows, list):
        raise ValidationError(f"{where}: expected a list of rows")
    out = []
    for i, r in enumerate(rows):
        w = f"{where}[{i}]"
        _keys(r, ("a", "b", "strict") if with_strict else ("a", "b"), w)
        strict = r.get("strict", False)
        if not isinstance(strict, bool):
            raise ValidationError(f"{w}.strict: expected true or false")
        row = (_vec(r.get("a"), f"{w}.a"), _num(r.get("b"), f"{w}.b"))
        out.append(row + (strict,) if with_strict else row)
    return out


def _space(name, d, spaces) -> tuple[ConvexSpace, dict]:
    where = f"spaces.{name}"
    kind = _kind(d, where)
    labels = d.get("labels")
    if labels is not None and (not isinstance(labels, list) or not all(isinstance(s, str) for s in labels)):
        raise ValidationError(f"{where}.labels: expected a list of strings")
    lab = tuple(labels) if labels is not None else None
    try:
        if kind in ("orthant", "realline", "simplex"):
            _keys(d, ("kind", "n", "labels"), where)
            n = _int(d.get("n", 1), f"{where}.n")
            cls = {"orthant": convex.Orthant, "realline": convex.RealLine, "simplex": convex.Simplex}[kind]
            sp = cls(n, labels=lab)
            norm = {"kind": kind, "n": n}
        elif kind == "point":
            _keys(d, ("kind",), where)
            sp, norm = convex.Singleton(), {"kind": kind}
        elif kind == "polyhedron":
            _keys(d, ("kind", "dim", "eq", "ineq", "labels"), where)
            n = _int(d.get("dim"), f"{where}.dim")
            eq = _rows(d.get("eq", []), f"{where}.eq", False)
            ineq = _rows(d.get("ineq", []), f"{where}.ineq", True)
            sp = convex.Polyhedron(n, tuple(eq), tuple(ineq), labels=lab)
            norm = {"kind": kind, "dim": n, "eq": [{"a": a, "b": b} for a, b in eq],
                    "ineq": [{"a": a, "b": b, "strict": st} for a, b, st in ineq]}
        elif kind == "product":
            _keys(d, ("kind", "factors", "labels"), where)
            facs = d.get("factors")
            if not isinstance(facs, list) or not all(isinstance(f, str) for f in facs):
                raise ValidationError(f"{where}.factors: expected a list of space names")
            sp = _space_ref(facs, spaces, where)
            if lab is not None:
                if not isinstance(sp, convex.Product):
                    raise ValidationError(f"{where}.labels: a product needs at least two factors to carry labels")
                sp = convex.Product(sp.left, sp.right, labels=lab)
            norm = {"kind": kind, "factors": list(facs)}
        else:
            raise ValidationError(f"{where}: unknown space kind {kind!r}")
    except DomainError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    if labels is not None:
        norm["labels"] = list(labels)
    return sp, norm


def _space_ref(ref, spaces, where) -> ConvexSpace:
    """A space name, or a list of names meaning their left-nested product."""
    if isinstance(ref, str):
        if ref not in spaces:
            raise ValidationError(f"{where}: unknown space {ref!r}")
        return spaces[ref]
    if isinstance(ref, list):
        return product_of([_space_ref(r, spaces, f"{where}[{i}]") for i, r in enumerate(ref)])
    raise ValidationError(f"{where}: expected a space name or list of names")


# Entropies and systems ----------------------------------------------------------

def _default_space(norm):
    kind = norm["kind"]
    if kind == "log_tank":
        return convex.Orthant(1, labels=("U",))
    if kind == "sackur_tetrode":
        return convex.Orthant(3, labels=("U", "V", "N"))
    if kind == "heat_bath":
        return convex.RealLine(1, labels=("U",))
    if kind == "shannon":
        return convex.Simplex(norm["n"])
    if kind == "von_neumann":
        return density_matrix_space(norm["d"])
    if kind == "measurement":
        return convex.Simplex(len(norm["maps"][0]) - 1)
    return None


def _entropy(d, where):
    kind = _kind(d, where)
    try:
        if kind == "log_tank":
            _keys(d, ("kind", "C"), where)
            C = _num(d.get("C", 1.0), f"{where}.C")
            return LogTank(C), {"kind": kind, "C": C}
        if kind == "sackur_tetrode":
            _keys(d, ("kind", "mass", "planck"), where)
            m, h = _num(d.get("mass", 1.0), f"{where}.mass"), _num(d.get("planck", 1.0), f"{where}.planck")
            return SackurTetrode(m, h), {"kind": kind, "mass": m, "planck": h}
        if kind == "heat_bath":
            _keys(d, ("kind", "T"), where)
            T = _num(d.get("T"), f"{where}.T")
            return HeatBath(T), {"kind": kind, "T": T}
        if kind == "shannon":
            _keys(d, ("kind", "n"), where)
            n = _int(d.get("n"), f"{where}.n")
            return Shannon(n), {"kind": kind, "n": n}
        if kind == "von_neumann":
            _keys(d, ("kind", "d"), where)
            dd = _int(d.get("d"), f"{where}.d")
            return VonNeumann(dd), {"kind": kind, "d": dd}
        if kind == "affine":
            _keys(d, ("kind", "a", "b"), where)
            a, b = _vec(d.get("a"), f"{where}.a"), _num(d.get("b", 0.0), f"{where}.b")
            return Affine(a, b), {"kind": kind, "a": a, "b": b}
        if kind == "constant":
            _keys(d, ("kind", "value"), where)
            v = _num(d.get("value", 0.0), f"{where}.value")
            return v, {"kind": kind, "value": v}
        if kind == "quadratic":
            _keys(d, ("kind", "Q", "c", "b"), where)
            Q, c, b = _mat(d.get("Q"), f"{where}.Q"), _vec(d.get("c"), f"{where}.c"), _num(d.get("b", 0.0), f"{where}.b")
            return Quadratic(Q, c, b), {"kind": kind, "Q": Q, "c": c, "b": b}
        if kind == "measurement":
            _keys(d, ("kind", "maps"), where)
            maps = d.get("maps")
            if not isinstance(maps, list) or not maps:
                raise ValidationError(f"{where}.maps: expected a non-empty list of column-major matrices")
            ms = [_mat(m, f"{where}.maps[{i}]") for i, m in enumerate(maps)]
            return (Measurement(tuple(StochasticMap.from_columns(m) for m in ms)),
                    {"kind": kind, "maps": ms})
    except DomainError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    raise ValidationError(f"{where}: unknown entropy kind {kind!r}")


def _system(name, d, spaces):
    where = f"systems.{name}"
    _keys(d, ("space", "entropy"), where)
    fn, norm = _entropy(d.get("entropy"), f"{where}.entropy")
    out = {"entropy": norm}
    if "space" in d:
        sp = _space_ref(d["space"], spaces, f"{where}.space")
        out["space"] = d["space"]
    else:
        sp = _default_space(norm)
        if sp is None:
            raise ValidationError(f"{where}: entropy kind {norm['kind']!r} needs an explicit space")
    if norm["kind"] == "constant":
        fn = Constant(fn, sp.dim)
    try:
        return ThermostaticSystem(sp, fn, name), out
    except DomainError as exc:
        raise ValidationError(f"{where}: {exc}") from None


# Relations ----------------------------------------------------------------------

def _rel_rows(rows, where, dx, dy, with_strict):
    """Rows ``{"a": [...], "b": [...], "c": x}`` meaning ``a.x + b.y = c`` (or <=, <)."""
    if not isinstance(rows, list):
        raise ValidationError(f"{where}: expected a list of rows")
    A, B, c, strict = [], [], [], []
    for i, r in enumerate(rows):
        w = f"{where}[{i}]"
        _keys(r, ("a", "b", "c", "strict") if with_strict else ("a", "b", "c"), w)
        a = _vec(r.get("a", [0.0] * dx), f"{w}.a")
        b = _vec(r.get("b", [0.0] * dy), f"{w}.b")
        if len(a) != dx or len(b) != dy:
            raise ValidationError(f"{w}: expected {dx} source and {dy} target coefficients, got {len(a)} and {len(b)}")
        st = r.get("strict", False)
        if not isinstance(st, bool):
            raise ValidationError(f"{w}.strict: expected true or false")
        A.append(a)
        B.append(b)
        c.append(_num(r.get("c", 0.0), f"{w}.c"))
        strict.append(st)
    return A, B, c, strict


def _relation(name, d, spaces):
    where = f"relations.{name}"
    kind = _kind(d, where)

    def ref(key):
        return _space_ref(d.get(key), spaces, f"{where}.{key}")

    try:
        if kind == "graph":
            _keys(d, ("kind", "source", "target", "M", "m"), where)
            M = _mat(d.get("M"), f"{where}.M")
            m = _vec(d["m"], f"{where}.m") if "m" in d else None
            src, tgt = ref("source"), ref("target")
            if len(M) != tgt.dim or any(len(r) != src.dim for r in M):
                raise ValidationError(f"{where}.M: expected a {tgt.dim}x{src.dim} matrix")
            if m is not None and len(m) != tgt.dim:
                raise ValidationError(f"{where}.m: expected {tgt.dim} entries")
            r = relation.graph(src, tgt, M if M else np.zeros((tgt.dim, src.dim)), m)
            norm = {"kind": kind, "source": d["source"], "target": d["target"], "M": M}
            if m is not None:
                norm["m"] = m
        elif kind == "affine":
            _keys(d, ("kind", "source", "target", "eq", "ineq"), where)
            src, tgt = ref("source"), ref("target")
            A, B, c, _ = _rel_rows(d.get("eq", []), f"{where}.eq", src.dim, tgt.dim, False)
            G, H, h, strict = _rel_rows(d.get("ineq", []), f"{where}.ineq", src.dim, tgt.dim, True)
            r = relation.affine(src, tgt, A=A or None, B=B or None, c=c or None,
                                G=G or None, H=H or None, h=h or None, strict=strict or None)
            norm = {"kind": kind, "source": d["source"], "target": d["target"],
                    "eq": [{"a": a, "b": b, "c": cc} for a, b, cc in zip(A, B, c)],
                    "ineq": [{"a": a, "b": b, "c": cc, "strict": st} for a, b, cc, st in zip(G, H, h, strict)]}
        elif kind == "full":
            _keys(d, ("kind", "source", "target"), where)
            r = relation.full(ref("source"), ref("target"))
            norm = {"kind": kind, "source": d["source"], "target": d["target"]}
        elif kind == "identity":
            _keys(d, ("kind", "space"), where)
            r = relation.identity(ref("space"))
            norm = {"kind": kind, "space": d["space"]}
        else:
            raise ValidationError(f"{where}: unknown relation kind {kind!r}")
    except DomainError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    return r, norm


# Composition tree ---------------------------------------------------------------

def _tree(node, systems, rels, where):
    """Build the composed system; returns (system, argmax column names)."""
    if isinstance(node, str):
        if node not in systems:
            raise ValidationError(f"{where}: unknown system {node!r}")
        s = systems[node]
        return s, [f"{node}.{c}" for c in s.space.coord_names()]
    _keys(node, ("op", "children"), where)
    op_name = node.get("op")
    if op_name not in rels:
        raise ValidationError(f"{where}.op: unknown relation {op_name!r}")
    kids = node.get("children")
    if not isinstance(kids, list):
        raise ValidationError(f"{where}.children: expected a list")
    built = [_tree(k, systems, rels, f"{where}.children[{i}]") for i, k in enumerate(kids)]
    rel = rels[op_name]
    inputs = tuple(s.space for s, _ in built)
    if not same_space(rel.source, product_of(inputs)):
        raise ValidationError(f"{where}: relation {op_name!r} starts at {rel.source!r} but the children "
                              f"give {product_of(inputs)!r}")
    try:
        sys = act(Operation(inputs, rel.target, rel), [s for s, _ in built])
    except DomainError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    return sys, [name for _, names in built for name in names]


def _normal_tree(node):
    if isinstance(node, str):
        return node
    return {"op": node["op"], "children": [_normal_tree(k) for k in node["children"]]}


# Loading ------------------------------------------------------------------------

def _section(raw, key):
    d = raw.get(key, {})
    if not isinstance(d, dict):
        raise ValidationError(f"{key}: expected an object of named declarations")
    return d


def load(raw: dict) -> Document:
    """Resolve and type-check a parsed document."""
    if not isinstance(raw, dict):
        raise ValidationError("document: expected a JSON object")
    _keys(raw, SECTIONS, "document")
    cfg = _solver(raw.get("solver", {}))
    spaces, norm_spaces = {}, {}
    for name, d in _section(raw, "spaces").items():
        spaces[name], norm_spaces[name] = _space(name, d, spaces)
    systems, norm_systems = {}, {}
    for name, d in _section(raw, "systems").items():
        systems[name], norm_systems[name] = _system(name, d, spaces)
    rels, norm_rels = {}, {}
    for name, d in _section(raw, "relations").items():
        rels[name], norm_rels[name] = _relation(name, d, spaces)
    if "compose" not in raw:
        raise ValidationError("compose: missing composition tree")
    root, argnames = _tree(raw["compose"], systems, rels, "compose")
    if not isinstance(root.entropy, Pushforward):
        # a bare system: evaluate through the identity so every query runs the same path
        root = pushforward(root, relation.identity(root.space))
    queries = raw.get("queries", [])
    if not isinstance(queries, list):
        raise ValidationError("queries: expected a list")
    points = []
    for i, q in enumerate(queries):
        _keys(q, ("point",), f"queries[{i}]")
        p = _vec(q.get("point"), f"queries[{i}].point")
        if len(p) != root.space.dim:
            raise ValidationError(f"queries[{i}].point: expected {root.space.dim} coordinates, got {len(p)}")
        if any(math.isnan(v) or math.isinf(v) for v in p):
            raise ValidationError(f"queries[{i}].point: coordinates must be finite")
        points.append(p)
    normal = {"solver": _solver_dict(cfg), "spaces": norm_spaces, "systems": norm_systems,
              "relations": norm_rels, "compose": _normal_tree(raw["compose"]),
              "queries": [{"point": p} for p in points]}
    return Document(cfg, spaces, systems, rels, raw["compose"], points, normal, root, argnames)


def load_path(path: str) -> Document:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return load(raw)


def dumps_normalized(doc: Document) -> str:
    return json.dumps(_jsonable(doc.raw), indent=2, sort_keys=True) + "\n"


def _jsonable(v):
    """Infinite floats become "+inf"/"-inf" so the output stays strict JSON."""
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and math.isinf(v):
        return format_xr(v)
    return v
