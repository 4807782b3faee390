"""Joint spectra of commuting normal tuples, and Clifford norms.

A commuting normal tuple is diagonalized in a single unitary basis; the rows
of the resulting joint spectrum are points in C^N, one per basis vector.
The Clifford norm packs a tuple into one self-adjoint-style operator whose
norm controls all coordinates at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import matcore
from .matcore import (
    DiagnosticsError,
    PreconditionError,
    adjoint,
    as_cmatrix,
    commutator,
    op_norm,
)

__all__ = [
    "NormalTuple",
    "JointSpectrum",
    "CliffordRep",
    "partition",
    "joint_diagonalize",
    "joint_spectrum",
    "clifford_rep",
    "clifford_norm",
]

#: norms may exceed 1 by at most this much for tuples flagged as contractions
CONTRACTION_SLACK = 1e-10


@dataclass
class NormalTuple:
    """N same-size normal matrices commuting within stated tolerances."""

    mats: list[np.ndarray]
    commutation_tol: float = 1e-10
    normality_tol: float = 1e-10
    contractions: bool = True

    def __post_init__(self):
        mats = [as_cmatrix(m) for m in self.mats]
        if not mats:
            raise PreconditionError("tuple must contain at least one matrix")
        n = mats[0].shape[0]
        for j, m in enumerate(mats):
            if m.shape[0] != n:
                raise PreconditionError("all matrices must share one dimension")
            rep = matcore.defect_report(m)
            if rep.normality > self.normality_tol:
                raise PreconditionError(
                    f"matrix {j} has normality defect {rep.normality:.3e} "
                    f"> {self.normality_tol:.3e}"
                )
            if self.contractions and rep.norm > 1.0 + CONTRACTION_SLACK:
                raise PreconditionError(
                    f"matrix {j} has norm {rep.norm!r} > 1 + {CONTRACTION_SLACK}"
                )
        for j in range(len(mats)):
            for k in range(j + 1, len(mats)):
                d = op_norm(commutator(mats[j], mats[k]))
                if d > self.commutation_tol:
                    raise PreconditionError(
                        f"matrices {j},{k} have commutator norm {d:.3e} "
                        f"> {self.commutation_tol:.3e}"
                    )
        self.mats = mats

    @property
    def n(self) -> int:
        return self.mats[0].shape[0]

    @property
    def N(self) -> int:
        return len(self.mats)


@dataclass
class JointSpectrum:
    """Unitary Q and the n x N array of joint eigenvalue points."""

    q: np.ndarray
    points: np.ndarray
    residual: float = 0.0


@dataclass
class CliffordRep:
    """N anticommuting Hermitian involutions of dimension 2^ceil(N/2)."""

    N: int
    gens: list[np.ndarray] = field(repr=False)


def partition(t: NormalTuple) -> NormalTuple:
    """Split X_j = X_{1j} + i X_{2j} into 2N Hermitian parts.

    Order: all real parts first, then all imaginary parts. The returned
    tuple's commutation tolerance is set from the measured defects (for a
    commuting normal tuple the parts commute up to the input tolerances).
    """
    parts = [(m + adjoint(m)) / 2.0 for m in t.mats]
    parts += [(m - adjoint(m)) / 2.0j for m in t.mats]
    worst = 0.0
    for j in range(len(parts)):
        for k in range(j + 1, len(parts)):
            worst = max(worst, op_norm(commutator(parts[j], parts[k])))
    return NormalTuple(
        parts,
        commutation_tol=max(worst * (1.0 + 1e-9), 1e-14),
        normality_tol=1e-12,
        contractions=t.contractions,
    )


def _offdiag_norm(m: np.ndarray) -> float:
    return op_norm(m - np.diag(np.diag(m)))


def joint_diagonalize(
    t: NormalTuple, cluster_tol: float = 1e-8, seed: int = 0
) -> JointSpectrum:
    """Common eigenbasis and joint spectrum of a commuting normal tuple.

    A seeded random positive combination of the 2N Hermitian parts is
    eigendecomposed; degenerate eigenvalue clusters (within cluster_tol,
    relative) are refined recursively with fresh coefficients. Residuals
    are verified against max(1e-8, 100 * commutation_tol), with up to five
    retries before a DiagnosticsError.

    Rows of the joint spectrum are ordered ascending lexicographically by
    (Re, Im) of the first matrix's eigenvalues, ties broken by subsequent
    matrices; the basis columns carry canonical phases, so the output is
    deterministic for a given seed.
    """
    n = t.n
    if t.commutation_tol > 1e-8 * n:
        raise PreconditionError(
            f"tuple commutation tolerance {t.commutation_tol:.3e} exceeds "
            f"{1e-8 * n:.3e}; joint diagonalization is not meaningful"
        )
    parts = partition(t).mats
    rng = np.random.default_rng(seed)
    target = max(1e-8, 100.0 * t.commutation_tol)
    best_q = None
    best_res = np.inf
    for _ in range(6):
        q = matcore._simdiag_hermitian(parts, rng, cluster_rtol=cluster_tol)
        res = max(_offdiag_norm(adjoint(q) @ m @ q) for m in t.mats)
        if res < best_res:
            best_q, best_res = q, res
        if res <= target:
            break
    if best_res > target:
        raise DiagnosticsError(
            "joint diagonalization residual exceeds the target",
            worst_residual=best_res,
        )
    points = np.column_stack([np.diag(adjoint(best_q) @ m @ best_q) for m in t.mats])
    keys = []
    for j in reversed(range(t.N)):
        keys.append(points[:, j].imag)
        keys.append(points[:, j].real)
    order = np.lexsort(tuple(keys))
    q = matcore._canonical_column_phases(best_q[:, order])
    points = np.column_stack([np.diag(adjoint(q) @ m @ q) for m in t.mats])
    return JointSpectrum(q=q, points=points, residual=best_res)


def joint_spectrum(t: NormalTuple, cluster_tol: float = 1e-8, seed: int = 0) -> np.ndarray:
    """The n x N array of joint eigenvalue points of a commuting tuple."""
    return joint_diagonalize(t, cluster_tol=cluster_tol, seed=seed).points


_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
_EYE2 = np.eye(2, dtype=np.complex128)


def clifford_rep(n_gens: int) -> CliffordRep:
    """Jordan-Wigner generators: gamma_{2k-1} = Z^(k-1) X I..., gamma_{2k} = Z^(k-1) Y I..."""
    if n_gens < 1:
        raise PreconditionError("need at least one generator")
    m = (n_gens + 1) // 2
    gens = []
    for k in range(m):
        prefix = [_PAULI_Z] * k
        suffix = [_EYE2] * (m - k - 1)
        for mid in (_PAULI_X, _PAULI_Y):
            gens.append(reduce(np.kron, prefix + [mid] + suffix))
    return CliffordRep(N=n_gens, gens=gens[:n_gens])


def clifford_norm(mats: list[np.ndarray]) -> tuple[np.ndarray, float]:
    """Cliff = i * sum_j X_j (x) e_j with e_j = i*gamma_j, and its norm.

    The result has dimension n * 2^ceil(N/2). For any tuple,
    ||Cliff|| <= sum_j ||X_j||; for commuting Hermitian tuples,
    ||Cliff||^2 = ||sum_j X_j^2||.
    """
    mats = [as_cmatrix(m) for m in mats]
    n = mats[0].shape[0]
    if any(m.shape[0] != n for m in mats):
        raise PreconditionError("all matrices must share one dimension")
    rep = clifford_rep(len(mats))
    dim = n * rep.gens[0].shape[0]
    cliff = np.zeros((dim, dim), dtype=np.complex128)
    for x, g in zip(mats, rep.gens):
        cliff += 1j * np.kron(x, 1j * g)
    return cliff, op_norm(cliff)
