"""Bottleneck matching of joint spectra and the isospectral approximant.

Given two delta-close commuting tuples X and Y, match their joint spectra
so the largest matched distance is minimal, then conjugate X into Y's
eigenbasis along the matching. The resulting approximant has exactly the
spectra of X, commutes exactly with Y (up to diagonalization residuals),
and sits within the matched bottleneck distance of Y.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .jointspec import NormalTuple, clifford_norm, joint_diagonalize
from .matcore import PreconditionError, adjoint, op_norm

__all__ = [
    "Matching",
    "Approximant",
    "spectral_cost_matrix",
    "bottleneck_assign",
    "isospectral_approximant",
]

log = logging.getLogger(__name__)


@dataclass
class Matching:
    """Permutation tau with its bottleneck (max) and total matched cost."""

    tau: np.ndarray
    bottleneck: float
    sum_cost: float


@dataclass
class Approximant:
    """Unitary V with psi_j = V* x_j V and the achieved bound max_j ||psi_j - y_j||."""

    v: np.ndarray
    psi: list[np.ndarray]
    bound: float
    matching: Matching
    report: dict = field(default_factory=dict)


def spectral_cost_matrix(points_x: np.ndarray, points_y: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances in C^N between joint-spectrum rows."""
    px = np.asarray(points_x, dtype=np.complex128)
    py = np.asarray(points_y, dtype=np.complex128)
    if px.ndim == 1:
        px = px[:, None]
    if py.ndim == 1:
        py = py[:, None]
    if px.shape != py.shape:
        raise PreconditionError(f"point sets differ in shape: {px.shape} vs {py.shape}")
    diff = px[:, None, :] - py[None, :, :]
    return np.sqrt(np.sum(np.abs(diff) ** 2, axis=2))


def _has_perfect_matching(mask: np.ndarray) -> bool:
    graph = csr_matrix(mask)
    match = maximum_bipartite_matching(graph, perm_type="column")
    return not np.any(match == -1)


def bottleneck_assign(cost) -> Matching:
    """Permutation minimizing the maximum matched cost.

    Binary search over the distinct cost values, with a maximum bipartite
    matching feasibility test at each threshold. Among bottleneck-optimal
    permutations, the one with minimal total cost is selected, and among
    those the lexicographically smallest, so the result is deterministic.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise PreconditionError(f"cost matrix must be square, got {c.shape}")
    if not np.isfinite(c).all() or np.any(c < 0):
        raise PreconditionError("costs must be finite and nonnegative")
    n = c.shape[0]
    values = np.unique(c)
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _has_perfect_matching(c <= values[mid]):
            hi = mid
        else:
            lo = mid + 1
    bstar = float(values[lo])

    big = float(n * values[-1] + 1.0)
    masked = np.where(c <= bstar, c, big)
    rows, cols = linear_sum_assignment(masked)
    sstar = float(masked[rows, cols].sum())
    tol = 1e-9 * (1.0 + abs(sstar))

    # lexicographically smallest permutation achieving (bstar, sstar)
    tau = np.empty(n, dtype=int)
    avail = list(range(n))
    acc = 0.0
    for k in range(n):
        rest_rows = np.arange(k + 1, n)
        chosen = -1
        for j in avail:
            if c[k, j] > bstar:
                continue
            rest_cols = [x for x in avail if x != j]
            if len(rest_rows) == 0:
                sub = 0.0
            else:
                block = masked[np.ix_(rest_rows, rest_cols)]
                rr, cc = linear_sum_assignment(block)
                sub = float(block[rr, cc].sum())
                if sub >= big:
                    continue
            if acc + c[k, j] + sub <= sstar + tol:
                chosen = j
                break
        if chosen < 0:  # pragma: no cover - guarded by the feasibility search
            raise RuntimeError("assignment refinement lost feasibility")
        tau[k] = chosen
        acc += c[k, chosen]
        avail.remove(chosen)

    matched = c[np.arange(n), tau]
    return Matching(tau=tau, bottleneck=float(matched.max()), sum_cost=float(matched.sum()))


def isospectral_approximant(
    x: NormalTuple,
    y: NormalTuple,
    objective: str = "bottleneck",
    cluster_tol: float = 1e-8,
    seed: int = 0,
) -> Approximant:
    """Conjugate X onto Y's eigenbasis along a spectral matching.

    V = Q_X P_tau Q_Y*, so psi_j = V* x_j V is diagonal in Y's basis with
    the joint spectrum of x_j rearranged to face its matched partner. The
    achieved bound equals the per-coordinate bottleneck of the matching.

    objective: "bottleneck" (default) minimizes the max matched distance;
    "sum" uses the Hungarian total-cost assignment instead.
    """
    if x.n != y.n or x.N != y.N:
        raise PreconditionError("tuples must have matching dimensions and lengths")
    jx = joint_diagonalize(x, cluster_tol=cluster_tol, seed=seed)
    jy = joint_diagonalize(y, cluster_tol=cluster_tol, seed=seed)
    cost = spectral_cost_matrix(jx.points, jy.points)
    if objective == "bottleneck":
        matching = bottleneck_assign(cost)
    elif objective == "sum":
        rows, cols = linear_sum_assignment(cost)
        tau = np.empty(x.n, dtype=int)
        tau[rows] = cols
        matched = cost[np.arange(x.n), tau]
        matching = Matching(tau=tau, bottleneck=float(matched.max()), sum_cost=float(matched.sum()))
    else:
        raise PreconditionError(f"unknown objective {objective!r}")

    n = x.n
    p = np.zeros((n, n), dtype=np.complex128)
    p[np.arange(n), matching.tau] = 1.0
    v = jx.q @ p @ adjoint(jy.q)
    psi = [adjoint(v) @ m @ v for m in x.mats]
    bound = max(op_norm(pj - yj) for pj, yj in zip(psi, y.mats))

    delta = max(op_norm(a - b) for a, b in zip(x.mats, y.mats))
    diffs = [a - b for a, b in zip(x.mats, y.mats)]
    _, cliff = clifford_norm(diffs)
    report = {
        "bottleneck": matching.bottleneck,
        "sum_cost": matching.sum_cost,
        "input_delta": delta,
        "clifford_norm_of_difference": cliff,
        "ratio_vs_n_delta": matching.bottleneck / (x.N * delta) if delta > 0 else 0.0,
        "ratio_vs_clifford": matching.bottleneck / cliff if cliff > 0 else 0.0,
    }
    log.debug("isospectral approximant: %s", report)
    return Approximant(v=v, psi=psi, bound=bound, matching=matching, report=report)
