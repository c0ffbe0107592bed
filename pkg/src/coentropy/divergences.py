"""The four divergence instantiations used by the epistemic component.

KL is asymmetric and unbounded, Jensen-Shannon symmetric and bounded by
ln(2), Hellinger symmetric and bounded by 1, and the optimal-transport
distance defaults to the discrete 0/1 ground metric (clusters are unordered
semantic classes), under which it reduces to total variation. A
user-supplied metric cost matrix switches it to a small linear program.

Inputs are cluster distributions (anything exposing ``.probs`` or a plain
array already on the simplex); dimensions must match.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidCost, InvalidDistribution, SupportViolation
from . import kernels


class DivergenceKind(Enum):
    KL = "kl"
    JS = "js"
    WASSERSTEIN = "wasserstein"
    HELLINGER = "hellinger"

    @classmethod
    def parse(cls, name: str) -> "DivergenceKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown divergence {name!r}; expected one of "
                f"{[k.value for k in cls]}"
            ) from None


class CostMatrix:
    """Metric ground costs between clusters for the transport distance.

    Validated on construction: square, non-negative, symmetric, zero
    diagonal, triangle inequality.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidCost("cost matrix must be square and non-empty")
        if not np.all(np.isfinite(m)):
            raise InvalidCost("cost matrix contains non-finite entries")
        if np.any(m < 0.0):
            raise InvalidCost("cost matrix contains negative entries")
        if np.any(np.diag(m) != 0.0):
            raise InvalidCost("cost matrix diagonal must be zero")
        if not np.array_equal(m, m.T):
            raise InvalidCost("cost matrix must be symmetric")
        # triangle inequality: cost[i,k] <= cost[i,j] + cost[j,k] for all j
        via = (m[:, :, None] + m[None, :, :]).min(axis=1)
        if np.any(m > via + 1e-12):
            raise InvalidCost("cost matrix violates the triangle inequality")
        m = m.copy()
        m.flags.writeable = False
        self._matrix = m

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n_clusters(self) -> int:
        return self._matrix.shape[0]


def _vec(x) -> np.ndarray:
    probs = getattr(x, "probs", None)
    if probs is not None:
        return probs
    return np.asarray(x, dtype=np.float64)


def _pair(p, q):
    pv, qv = _vec(p), _vec(q)
    if pv.shape != qv.shape:
        raise InvalidDistribution(
            f"distributions live on different cluster spaces "
            f"({pv.shape[0]} vs {qv.shape[0]})"
        )
    return pv, qv


def kl(p, q) -> float:
    """KL divergence of p from q in nats; requires support(p) within support(q)."""
    pv, qv = _pair(p, q)
    val = kernels.kl(pv, qv)
    if math.isinf(val):
        raise SupportViolation(
            "KL reference assigns zero probability to part of p's support"
        )
    return max(0.0, val)


def js(p, q) -> float:
    """Jensen-Shannon divergence in nats: symmetric, finite, at most ln(2)."""
    pv, qv = _pair(p, q)
    return max(0.0, kernels.js(pv, qv))


def hellinger(p, q) -> float:
    """Hellinger distance: symmetric, in [0, 1]."""
    pv, qv = _pair(p, q)
    return kernels.hellinger(pv, qv)


def wasserstein(p, q, cost: CostMatrix | None = None) -> float:
    """Optimal-transport cost between p and q.

    With the default 0/1 ground metric this is exactly total variation and
    uses the closed form. An explicit cost matrix (any metric, including
    0/1) is always solved as a linear program, so the two routes stay
    independently checkable against each other.
    """
    pv, qv = _pair(p, q)
    if cost is None:
        return kernels.tv(pv, qv)
    if not isinstance(cost, CostMatrix):
        cost = CostMatrix(cost)
    n = pv.shape[0]
    if cost.n_clusters != n:
        raise InvalidCost(
            f"cost matrix is {cost.n_clusters}x{cost.n_clusters} but "
            f"distributions have {n} clusters"
        )
    return _transport_lp(pv, qv, cost.matrix)


def _transport_lp(p: np.ndarray, q: np.ndarray, cost: np.ndarray) -> float:
    """Solve min <cost, plan> over couplings of p and q.

    The last column-marginal constraint is dropped (it is implied by the
    others), keeping the equality system full rank.
    """
    n = p.shape[0]
    c = cost.reshape(-1)
    rows = []
    rhs = []
    for i in range(n):  # row marginals: sum_j plan[i, j] = p[i]
        a = np.zeros((n, n))
        a[i, :] = 1.0
        rows.append(a.reshape(-1))
        rhs.append(p[i])
    for j in range(n - 1):  # column marginals: sum_i plan[i, j] = q[j]
        a = np.zeros((n, n))
        a[:, j] = 1.0
        rows.append(a.reshape(-1))
        rhs.append(q[j])
    res = linprog(c, A_eq=np.array(rows), b_eq=np.array(rhs),
                  bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return max(0.0, float(res.fun))


def evaluate_divergence(kind: DivergenceKind, p, q, *,
                        cost: CostMatrix | None = None) -> float:
    """Dispatch to the divergence selected by ``kind``."""
    if kind is DivergenceKind.KL:
        return kl(p, q)
    if kind is DivergenceKind.JS:
        return js(p, q)
    if kind is DivergenceKind.HELLINGER:
        return hellinger(p, q)
    if kind is DivergenceKind.WASSERSTEIN:
        return wasserstein(p, q, cost)
    raise ValueError(f"unknown divergence kind {kind!r}")
