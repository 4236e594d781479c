"""Command line front end.

    entroad eval DOC [--format csv|table] [--dump-normalized]
    entroad sweep DOC --axis NAME=LO:HI:STEPS ... [--format csv|table]
    entroad laws [--seed N] [--trials N]
    entroad catalog run NAME [--param K=V ...] | entroad catalog list

Exit status: 0 ok, 1 validation error, 2 solver failure, 3 law or
tolerance breach.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import itertools
import sys

import numpy as np

from .catalog import CATALOG, check_entry
from .document import dumps_normalized, load_path
from .errors import ConvergenceError, DomainError, EntroadError, UnsupportedError, ValidationError
from .laws import run_laws
from .optimize import SolverConfig, parallel_map
from .xreal import format_xr

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_BREACH = 0, 1, 2, 3


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_xr(float(v))
    return str(v)


def emit(header, rows, fmt, out) -> None:
    """Write rows as CSV or as an aligned plain-text table."""
    cells = [[_fmt(c) for c in r] for r in rows]
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(cells)
        return
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
    out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    out.write("  ".join("-" * w for w in widths) + "\n")
    for r in cells:
        out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


# eval / sweep -----------------------------------------------------------------

def _header(doc):
    return doc.target.coord_names() + ["entropy", "status"] + doc.argmax_names


def _row(doc, point):
    """One output row; solver failures become a status instead of an exception."""
    res = doc.root.entropy.solve(np.asarray(point, dtype=float), doc.solver)
    arg = list(res.argmax) if res.argmax is not None else [None] * len(doc.argmax_names)
    return list(point) + [res.value, res.status] + arg


def _safe_row(doc, point):
    try:
        return _row(doc, point), None
    except ConvergenceError as exc:
        return list(point) + [None, "error: did not converge"] + [None] * len(doc.argmax_names), exc
    except (UnsupportedError, DomainError) as exc:
        return list(point) + [None, f"error: {exc}"] + [None] * len(doc.argmax_names), exc


def cmd_eval(args, out) -> int:
    doc = load_path(args.doc)
    if args.dump_normalized:
        out.write(dumps_normalized(doc))
        return EXIT_OK
    rows = []
    for i, p in enumerate(doc.queries):
        try:
            rows.append(_row(doc, p))
        except ConvergenceError as exc:
            sys.stderr.write(f"queries[{i}]: {exc}\n")
            return EXIT_SOLVER
        except UnsupportedError as exc:
            sys.stderr.write(f"queries[{i}]: {exc}\n")
            return EXIT_SOLVER
    emit(_header(doc), rows, args.format, out)
    return EXIT_OK


def parse_axis(text: str):
    """``name=lo:hi:steps`` into (name, values)."""
    name, sep, bounds = text.partition("=")
    parts = bounds.split(":")
    if not sep or not name or len(parts) != 3:
        raise ValidationError(f"--axis {text!r}: expected NAME=LO:HI:STEPS")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError:
        raise ValidationError(f"--axis {text!r}: LO and HI must be numbers and STEPS an integer") from None
    if steps < 0 or not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValidationError(f"--axis {text!r}: need finite bounds and STEPS >= 0")
    if steps == 1:
        return name, np.array([lo])
    return name, np.linspace(lo, hi, steps)


def sweep_points(doc, axes):
    """Grid points in row-major order over the axes (first axis slowest)."""
    names = doc.target.coord_names()
    idx = []
    for name, _ in axes:
        if name not in names:
            raise ValidationError(f"--axis {name}: target coordinates are {names}")
        if names.index(name) in idx:
            raise ValidationError(f"--axis {name}: given twice")
        idx.append(names.index(name))
    missing = [n for i, n in enumerate(names) if i not in idx]
    if missing and not doc.queries:
        raise ValidationError(f"sweep: coordinates {missing} have no axis and the document has no "
                              f"query to take them from")
    base = np.array(doc.queries[0] if doc.queries else [0.0] * len(names), dtype=float)
    pts = []
    for combo in itertools.product(*[vals for _, vals in axes]):
        p = base.copy()
        p[idx] = combo
        pts.append([float(v) for v in p])
    return pts


def cmd_sweep(args, out) -> int:
    doc = load_path(args.doc)
    if args.dump_normalized:
        out.write(dumps_normalized(doc))
        return EXIT_OK
    axes = [parse_axis(a) for a in args.axis]
    pts = sweep_points(doc, axes)
    results = parallel_map(lambda p: _safe_row(doc, p), pts)
    emit(_header(doc), [r for r, _ in results], args.format, out)
    return EXIT_SOLVER if any(e is not None for _, e in results) else EXIT_OK


# laws ---------------------------------------------------------------------------

def cmd_laws(args, out) -> int:
    if args.trials < 1:
        raise ValidationError("--trials must be >= 1")
    reports = run_laws(args.seed, args.trials)
    out.write(f"laws seed={args.seed} trials={args.trials}\n")
    for r in reports:
        out.write(r.line() + "\n")
    ok = all(r.ok for r in reports)
    out.write("result: " + ("PASS" if ok else "FAIL") + "\n")
    return EXIT_OK if ok else EXIT_BREACH


# catalog --------------------------------------------------------------------------

def parse_param(text: str):
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise ValidationError(f"--param {text!r}: expected KEY=VALUE")
    if "," in val:
        try:
            return key, [float(v) for v in val.split(",") if v]
        except ValueError:
            raise ValidationError(f"--param {text!r}: list entries must be numbers") from None
    try:
        return key, float(val)
    except ValueError:
        return key, val


def cmd_catalog(args, out) -> int:
    if args.action == "list":
        for name, fn in CATALOG.items():
            params = ", ".join(p for p in inspect.signature(fn).parameters)
            out.write(f"{name}({params})\n")
        return EXIT_OK
    if args.name not in CATALOG:
        raise ValidationError(f"catalog: unknown entry {args.name!r}; choose from {sorted(CATALOG)}")
    fn = CATALOG[args.name]
    params = dict(parse_param(p) for p in args.param)
    allowed = inspect.signature(fn).parameters
    for k in params:
        if k not in allowed:
            raise ValidationError(f"catalog {args.name}: unknown parameter {k!r}; known: {list(allowed)}")
    try:
        entry = fn(**params)
    except (DomainError, TypeError) as exc:
        raise ValidationError(f"catalog {args.name}: {exc}") from None
    rows = check_entry(entry, SolverConfig())
    table = [[" ".join(_fmt(v) for v in r.query), r.reference, r.engine, r.gap,
              r.argmax_gap, r.status, "ok" if r.ok else "BREACH"] for r in rows]
    emit(["query", "reference", "engine", "gap", "argmax_gap", "status", "check"], table, args.format, out)
    return EXIT_OK if all(r.ok for r in rows) else EXIT_BREACH


# entry point ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entroad", description="Compositional thermostatics engine.")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp):
        sp.add_argument("--format", choices=("csv", "table"), default="csv")

    e = sub.add_parser("eval", help="evaluate the composed system at the document's query points")
    e.add_argument("doc")
    fmt(e)
    e.add_argument("--dump-normalized", action="store_true", help="print the normalised document and exit")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="evaluate on a grid of target points")
    s.add_argument("doc")
    s.add_argument("--axis", action="append", default=[], metavar="NAME=LO:HI:STEPS")
    fmt(s)
    s.add_argument("--dump-normalized", action="store_true")
    s.set_defaults(func=cmd_sweep)

    la = sub.add_parser("laws", help="run the randomised law suites")
    la.add_argument("--seed", type=int, default=0)
    la.add_argument("--trials", type=int, default=100)
    la.set_defaults(func=cmd_laws)

    c = sub.add_parser("catalog", help="reproduce a worked example against its closed form")
    c.add_argument("action", choices=("run", "list"))
    c.add_argument("name", nargs="?")
    c.add_argument("--param", action="append", default=[], metavar="K=V")
    fmt(c)
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "catalog" and args.action == "run" and not args.name:
        sys.stderr.write("catalog run: missing entry name\n")
        return EXIT_VALIDATION
    try:
        return args.func(args, out)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_SOLVER
    except EntroadError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_SOLVER


def run(argv) -> tuple[int, str]:
    """Run the CLI in-process; returns (exit status, captured stdout)."""
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
