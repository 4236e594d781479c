"""Extended reals [-inf, +inf] with -inf dominant addition and convex structure.

Values are plain Python floats (or float arrays). ``math.inf`` and ``-math.inf``
stand for the two infinite elements; NaN is never a valid extended real.

Addition and convex combination differ from IEEE arithmetic in exactly one
place: whenever +inf meets -inf, the result is -inf.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .errors import DomainError

ExtReal = float

POS_INF: ExtReal = math.inf
NEG_INF: ExtReal = -math.inf


def ext_real(value) -> ExtReal:
    """Coerce ``value`` to an extended real, rejecting NaN."""
    x = float(value)
    if math.isnan(x):
        raise DomainError("NaN is not an extended real")
    return x


def is_finite(x: ExtReal) -> bool:
    return math.isfinite(x)


def xr_combine(lam: float, a: ExtReal, b: ExtReal) -> ExtReal:
    """Convex combination ``c_lam(a, b)``.

    For 0 < lam < 1 any -inf operand wins, then any +inf operand.
    lam = 1 and lam = 0 project onto ``a`` and ``b`` so that 0 * inf never
    gets evaluated.
    """
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"convex weight {lam!r} outside [0, 1]")
    a, b = ext_real(a), ext_real(b)
    if lam == 1.0:
        return a
    if lam == 0.0:
        return b
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    if a == POS_INF or b == POS_INF:
        return POS_INF
    return lam * a + (1.0 - lam) * b


def xr_add(a: ExtReal, b: ExtReal) -> ExtReal:
    a, b = ext_real(a), ext_real(b)
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    return a + b


def xr_sum(values: Iterable[ExtReal]) -> ExtReal:
    total = 0.0
    for v in values:
        total = xr_add(total, v)
    return total


def xr_sup(values: Iterable[ExtReal]) -> ExtReal:
    """Least upper bound; the empty collection gives -inf.

    Stops consuming the iterable as soon as +inf shows up, so it is safe on
    unbounded generators that contain +inf.
    """
    best = NEG_INF
    for v in values:
        v = ext_real(v)
        if v == POS_INF:
            return POS_INF
        if v > best:
            best = v
    return best


def xr_add_array(a, b) -> np.ndarray:
    """Elementwise :func:`xr_add` on arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a + b
    return np.where((a == NEG_INF) | (b == NEG_INF), NEG_INF, out)


def format_xr(x: ExtReal) -> str:
    """Text form used in every file format and CLI table."""
    x = ext_real(x)
    if x == POS_INF:
        return "+inf"
    if x == NEG_INF:
        return "-inf"
    return repr(x)


def parse_xr(text: str) -> ExtReal:
    text = text.strip()
    if text == "+inf":
        return POS_INF
    if text == "-inf":
        return NEG_INF
    if text.lower() in ("inf", "+infinity", "infinity", "-infinity", "nan", "+nan", "-nan"):
        raise DomainError(f"extended reals are written '+inf' or '-inf', got {text!r}")
    return ext_real(text)
