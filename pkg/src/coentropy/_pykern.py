"""Pure-Python reference kernels.

Each function mirrors a routine in the compiled extension ``_native``
operation for operation: plain left-to-right accumulation, the same libm
calls, no pairwise or vectorized summation. On one platform both backends
therefore return bit-identical values, which keeps results independent of
which backend the import selected.

Conventions: natural log throughout; 0*ln(0) counts as 0; ``kl`` returns
+inf when the reference misses part of the support (callers translate that
into an error).
"""

from __future__ import annotations

import math

BACKEND_NAME = "py"


def _values(p) -> list:
    # numpy arrays hand back exact Python floats via tolist()
    tolist = getattr(p, "tolist", None)
    return tolist() if tolist is not None else list(p)


def entropy(p) -> float:
    """Shannon entropy -sum(p*ln(p)) in nats."""
    acc = 0.0
    for x in _values(p):
        if x > 0.0:
            acc += -(x * math.log(x))
    return acc


def kl(p, q) -> float:
    """KL divergence sum(p*ln(p/q)); +inf on a support violation."""
    acc = 0.0
    qs = _values(q)
    for j, x in enumerate(_values(p)):
        if x > 0.0:
            y = qs[j]
            if y == 0.0:
                return math.inf
            acc += x * math.log(x / y)
    return acc


def js(p, q) -> float:
    """Jensen-Shannon divergence against the half-half mixture, in nats."""
    ps = _values(p)
    qs = _values(q)
    acc_p = 0.0
    for j, x in enumerate(ps):
        if x > 0.0:
            m = 0.5 * (x + qs[j])
            acc_p += x * math.log(x / m)
    acc_q = 0.0
    for j, y in enumerate(qs):
        if y > 0.0:
            m = 0.5 * (ps[j] + y)
            acc_q += y * math.log(y / m)
    return 0.5 * acc_p + 0.5 * acc_q


def hellinger(p, q) -> float:
    """Hellinger distance sqrt(0.5*sum((sqrt(p)-sqrt(q))^2)), in [0, 1]."""
    qs = _values(q)
    acc = 0.0
    for j, x in enumerate(_values(p)):
        d = math.sqrt(x) - math.sqrt(qs[j])
        acc += d * d
    h = math.sqrt(0.5 * acc)
    return 1.0 if h > 1.0 else h


def tv(p, q) -> float:
    """Total variation distance 0.5*sum(|p - q|)."""
    qs = _values(q)
    acc = 0.0
    for j, x in enumerate(_values(p)):
        acc += abs(x - qs[j])
    return 0.5 * acc


def mixture(stack, weights) -> list:
    """Weight-convex combination of the rows of ``stack``.

    Accumulates over rows in index order for every column; returns a list of
    floats (the dispatch layer wraps it into an array).
    """
    rows = [_values(row) for row in stack]
    ws = _values(weights)
    n_cols = len(rows[0]) if rows else 0
    out = [0.0] * n_cols
    for j in range(n_cols):
        acc = 0.0
        for i, w in enumerate(ws):
            acc += w * rows[i][j]
        out[j] = acc
    return out
