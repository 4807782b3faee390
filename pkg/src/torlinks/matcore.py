"""Dense complex matrix primitives.

Everything downstream (joint spectra, matchings, matrix paths, dilations)
is built on the operations here: operator norms, Hermitian and normal
eigendecompositions, unitary exponentials, and branch-controlled
logarithms of unitary matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PreconditionError",
    "BranchPointError",
    "DiagnosticsError",
    "DefectReport",
    "as_cmatrix",
    "adjoint",
    "op_norm",
    "commutator",
    "defect_report",
    "herm_eig",
    "normal_eig",
    "exp_i_herm",
    "gap_branch_log",
    "principal_log_unitary",
]

TWO_PI = 2.0 * np.pi

# Eigenvalues closer than this (relative to the matrix scale) are treated as
# one degenerate cluster wherever grouping matters.
CLUSTER_RTOL = 1e-8


class PreconditionError(ValueError):
    """An operation was called with input violating its contract."""


class BranchPointError(PreconditionError):
    """-1 lies in the spectrum, so the requested logarithm branch fails."""


class DiagnosticsError(RuntimeError):
    """A numerical target was not reached; carries the worst residual."""

    def __init__(self, message: str, worst_residual: float | None = None):
        if worst_residual is not None:
            message = f"{message} (worst residual {worst_residual:.3e})"
        super().__init__(message)
        self.worst_residual = worst_residual


def as_cmatrix(a) -> np.ndarray:
    """Validate and return ``a`` as a square complex128 matrix.

    Scalars become 1x1 matrices. Non-square or non-finite input is rejected.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise PreconditionError("matrix has non-finite entries")
    return m


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def op_norm(a) -> float:
    """Operator (spectral) norm: the largest singular value.

    Computed as the square root of the top eigenvalue of A*A.
    """
    a = as_cmatrix(a)
    g = adjoint(a) @ a
    w = np.linalg.eigvalsh((g + adjoint(g)) / 2.0)
    return float(np.sqrt(max(float(w[-1]), 0.0)))


def commutator(a, b) -> np.ndarray:
    """[A, B] = AB - BA."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape != b.shape:
        raise PreconditionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


@dataclass(frozen=True)
class DefectReport:
    """How far a matrix is from being normal/unitary/Hermitian/a contraction."""

    normality: float
    unitarity: float
    hermiticity: float
    norm: float
    contraction_excess: float


def defect_report(a) -> DefectReport:
    a = as_cmatrix(a)
    eye = np.eye(a.shape[0])
    nrm = op_norm(a)
    return DefectReport(
        normality=op_norm(adjoint(a) @ a - a @ adjoint(a)),
        unitarity=op_norm(adjoint(a) @ a - eye),
        hermiticity=op_norm(a - adjoint(a)),
        norm=nrm,
        contraction_excess=max(0.0, nrm - 1.0),
    )


def _canonical_column_phases(q: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive.

    Makes eigenvector output reproducible across equivalent decompositions.
    """
    q = q.copy()
    for k in range(q.shape[1]):
        col = q[:, k]
        i = int(np.argmax(np.abs(col)))
        z = col[i]
        r = abs(z)
        if r > 0.0:
            col *= np.conj(z) / r
    return q


def herm_eig(a, rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (Q, lam) with unitary Q, eigenvalues ascending, and canonical
    column phases so that identical input gives identical output.
    """
    a = as_cmatrix(a)
    scale = op_norm(a)
    if op_norm(a - adjoint(a)) > rtol * max(scale, 1e-300):
        raise PreconditionError("input is not Hermitian within tolerance")
    w, q = np.linalg.eigh((a + adjoint(a)) / 2.0)
    return _canonical_column_phases(q), w


def exp_i_herm(h, theta: float = 1.0) -> np.ndarray:
    """exp(i*theta*H) for Hermitian H, via eigendecomposition."""
    q, w = herm_eig(h)
    phases = np.exp(1j * theta * w)
    return (q * phases) @ adjoint(q)


def _hermitize(a: np.ndarray) -> np.ndarray:
    return (a + adjoint(a)) / 2.0


def _split_clusters(w: np.ndarray, thr: float) -> list[tuple[int, int]]:
    """Group ascending values into clusters separated by gaps > thr."""
    groups = []
    start = 0
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > thr:
            groups.append((start, i))
            start = i
    groups.append((start, len(w)))
    return groups


def _nearly_scalar(mats: list[np.ndarray], tol: float) -> bool:
    for m in mats:
        mu = np.trace(m) / m.shape[0]
        if np.max(np.abs(m - mu * np.eye(m.shape[0]))) > tol:
            return False
    return True


def _simdiag_recurse(parts, rng, cluster_rtol, depth):
    m = parts[0].shape[0]
    if m == 1:
        return np.eye(1, dtype=np.complex128)
    c = rng.uniform(1.0, 2.0, size=len(parts))
    h = np.zeros((m, m), dtype=np.complex128)
    for ci, p in zip(c, parts):
        h += ci * p
    w, v = np.linalg.eigh(_hermitize(h))
    scale = max(1.0, float(np.max(np.abs(w))))
    groups = _split_clusters(w, cluster_rtol * scale)
    if len(groups) == 1:
        # The random combination separated nothing: the block is either
        # genuinely scalar for every part, or we were unlucky and retry.
        if _nearly_scalar(parts, cluster_rtol * scale) or depth <= 0:
            return v
        return _simdiag_recurse(parts, rng, cluster_rtol, depth - 1)
    q = v.copy()
    for i0, i1 in groups:
        if i1 - i0 == 1:
            continue
        vc = v[:, i0:i1]
        sub = [_hermitize(adjoint(vc) @ p @ vc) for p in parts]
        if _nearly_scalar(sub, cluster_rtol * scale) or depth <= 0:
            continue
        qsub = _simdiag_recurse(sub, rng, cluster_rtol, depth - 1)
        q[:, i0:i1] = vc @ qsub
    return q


def _simdiag_hermitian(parts, rng, cluster_rtol=CLUSTER_RTOL, max_depth=16):
    """One unitary (approximately) diagonalizing all Hermitian ``parts``.

    Eigendecomposes a random positive combination of the parts and recurses
    into degenerate clusters with fresh coefficients. Callers are expected to
    verify residuals and retry with more draws from ``rng`` if needed.
    """
    parts = [_hermitize(as_cmatrix(p)) for p in parts]
    return _simdiag_recurse(parts, rng, cluster_rtol, max_depth)


def normal_eig(a, tol: float = 1e-10, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a normal matrix.

    Jointly diagonalizes the Hermitian real part (A + A*)/2 and imaginary
    part (A - A*)/2i. Returns (Q, lam) with unitary Q and complex
    eigenvalues sorted ascending lexicographically by (Re, Im).
    """
    a = as_cmatrix(a)
    scale = op_norm(a)
    if op_norm(commutator(adjoint(a), a)) > tol * max(scale, 1e-300):
        raise PreconditionError("matrix is not normal within tolerance")
    parts = [(a + adjoint(a)) / 2.0, (a - adjoint(a)) / 2.0j]
    rng = np.random.default_rng(seed)
    target = 10.0 * tol * max(scale, 1e-300)
    best_q = None
    best_res = np.inf
    for _ in range(6):
        q = _simdiag_hermitian(parts, rng)
        m = adjoint(q) @ a @ q
        res = op_norm(m - np.diag(np.diag(m)))
        if res < best_res:
            best_q, best_res = q, res
        if res <= target:
            break
    if best_res > target:
        raise DiagnosticsError(
            "could not jointly diagonalize the real and imaginary parts",
            worst_residual=best_res,
        )
    lam = np.diag(adjoint(best_q) @ a @ best_q)
    order = np.lexsort((lam.imag, lam.real))
    q = _canonical_column_phases(best_q[:, order])
    lam = np.diag(adjoint(q) @ a @ q).copy()
    return q, lam


def _check_unitary(u: np.ndarray, tol: float) -> None:
    if op_norm(adjoint(u) @ u - np.eye(u.shape[0])) > tol:
        raise PreconditionError("matrix is not unitary within tolerance")


def gap_branch_log(u, tol: float = 1e-10) -> np.ndarray:
    """Hermitian H with exp(iH) = U, branch cut in the largest spectral gap.

    Eigenvalue angles are taken in [0, 2*pi) and sorted; the cut is placed at
    the midpoint of the largest circular gap (among equal largest gaps, the
    one with the smallest starting angle). Angles past the gap start are
    shifted down by 2*pi, and a final global shift by a multiple of 2*pi
    (which leaves exp(iH) unchanged) minimizes ||H||, ties keeping no shift.
    The spectrum of H therefore fits in an interval of length at most
    2*pi - (largest gap) whose image on the circle avoids the cut.
    """
    u = as_cmatrix(u)
    _check_unitary(u, tol)
    q, lam = normal_eig(u, tol=max(tol, 1e-10))
    ang = np.mod(np.angle(lam), TWO_PI)
    s = np.sort(ang)
    n = len(s)
    gaps = np.empty(n)
    if n > 1:
        gaps[:-1] = np.diff(s)
    gaps[-1] = s[0] + TWO_PI - s[-1]
    cut_start = s[int(np.argmax(gaps))]
    shifted = np.where(ang > cut_start, ang - TWO_PI, ang)
    best = shifted
    best_norm = float(np.max(np.abs(shifted)))
    for k in (1.0, -1.0):
        cand = shifted + TWO_PI * k
        cn = float(np.max(np.abs(cand)))
        if cn < best_norm:
            best, best_norm = cand, cn
    return _hermitize((q * best) @ adjoint(q))


def principal_log_unitary(u, tol: float = 1e-10, branch_tol: float = 1e-9) -> np.ndarray:
    """Hermitian H with exp(iH) = U and eigenvalue angles in (-pi, pi).

    Raises BranchPointError when the spectrum touches -1 (within branch_tol
    of angle pi), where the principal branch is discontinuous.
    """
    u = as_cmatrix(u)
    _check_unitary(u, tol)
    q, lam = normal_eig(u, tol=max(tol, 1e-10))
    ang = np.angle(lam)
    if np.any(np.pi - np.abs(ang) < branch_tol):
        raise BranchPointError(
            "spectrum touches -1; the principal logarithm is undefined"
        )
    return _hermitize((q * ang) @ adjoint(q))
