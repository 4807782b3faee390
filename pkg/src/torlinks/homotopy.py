"""Piecewise-analytic matrix paths and the link constructions built on them.

A path is a list of segments, each with an exact arc length and an exact
speed bound, so certificates can bound behaviour between grid points
without sampling tricks. Three segment kinds cover everything needed:

* ``Flat(a, b)``      - affine interpolation (1-s) a + s b
* ``Conj(h, base)``   - conjugation orbit exp(-i th H) base exp(i th H)
* ``Geo(base, h)``    - one-sided exponential base exp(i th H)

``Conj`` cannot express one-sided motion (in particular any 1x1 path is
frozen under conjugation), which is why ``Geo`` exists: it carries unitary
geodesics, circles and helices with exact constant speed |th1-th0|*||base H||.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .jointspec import NormalTuple, joint_diagonalize
from .matcore import (
    BranchPointError,
    DiagnosticsError,
    PreconditionError,
    adjoint,
    as_cmatrix,
    commutator,
    gap_branch_log,
    herm_eig,
    op_norm,
    principal_log_unitary,
)
from .spectral_match import Approximant, isospectral_approximant

__all__ = [
    "Flat",
    "Conj",
    "Geo",
    "MatrixPath",
    "LinkBundle",
    "Certificate",
    "CertTolerances",
    "concat",
    "constant_path",
    "path_length",
    "path_curvature",
    "toral_links",
    "certify",
    "unitary_contraction_path",
    "flat_unitary_path",
    "nearby_generator",
    "ujc_links",
    "project_solid_torus",
]

#: endpoint agreement required when paths are stitched together
JOIN_TOL = 1e-9


@dataclass
class Flat:
    """Affine segment from ``a`` to ``b``."""

    a: np.ndarray
    b: np.ndarray
    duration: float = 1.0

    def __post_init__(self):
        self.a = as_cmatrix(self.a)
        self.b = as_cmatrix(self.b)
        if self.a.shape != self.b.shape:
            raise PreconditionError("flat segment endpoints differ in shape")
        if not self.duration > 0:
            raise PreconditionError("segment duration must be positive")
        self.length = op_norm(self.b - self.a)

    def value(self, s: float) -> np.ndarray:
        return (1.0 - s) * self.a + s * self.b

    @property
    def start(self) -> np.ndarray:
        return self.a

    @property
    def end(self) -> np.ndarray:
        return self.b


@dataclass
class Conj:
    """Conjugation orbit exp(-i th(s) H) base exp(i th(s) H), th affine.

    Exact arc length |th1 - th0| * ||[H, base]||.
    """

    h: np.ndarray
    base: np.ndarray
    theta0: float = 0.0
    theta1: float = 1.0
    duration: float = 1.0

    def __post_init__(self):
        self.h = as_cmatrix(self.h)
        self.base = as_cmatrix(self.base)
        if self.h.shape != self.base.shape:
            raise PreconditionError("conjugation generator and base differ in shape")
        if not self.duration > 0:
            raise PreconditionError("segment duration must be positive")
        self._q, self._w = herm_eig(self.h)
        self.length = abs(self.theta1 - self.theta0) * op_norm(
            commutator(self.h, self.base)
        )

    def _unitary(self, theta: float) -> np.ndarray:
        return (self._q * np.exp(-1j * theta * self._w)) @ adjoint(self._q)

    def value(self, s: float) -> np.ndarray:
        theta = self.theta0 + s * (self.theta1 - self.theta0)
        u = self._unitary(theta)
        return u @ self.base @ adjoint(u)

    @property
    def start(self) -> np.ndarray:
        return self.value(0.0)

    @property
    def end(self) -> np.ndarray:
        return self.value(1.0)


@dataclass
class Geo:
    """One-sided exponential base * exp(i th(s) H), th affine.

    Since exp(i th H) is unitary and commutes with H, the speed is the
    constant |th1 - th0| * ||base H|| and the arc length is exact.
    """

    base: np.ndarray
    h: np.ndarray
    theta0: float = 0.0
    theta1: float = 1.0
    duration: float = 1.0

    def __post_init__(self):
        self.base = as_cmatrix(self.base)
        self.h = as_cmatrix(self.h)
        if self.h.shape != self.base.shape:
            raise PreconditionError("geodesic generator and base differ in shape")
        if not self.duration > 0:
            raise PreconditionError("segment duration must be positive")
        self._q, self._w = herm_eig(self.h)
        self.length = abs(self.theta1 - self.theta0) * op_norm(self.base @ self.h)

    def value(self, s: float) -> np.ndarray:
        theta = self.theta0 + s * (self.theta1 - self.theta0)
        return self.base @ (self._q * np.exp(1j * theta * self._w)) @ adjoint(self._q)

    @property
    def start(self) -> np.ndarray:
        return self.value(0.0)

    @property
    def end(self) -> np.ndarray:
        return self.value(1.0)


Segment = Flat | Conj | Geo


@dataclass
class MatrixPath:
    """Continuous piecewise path on the normalized clock [0, 1]."""

    segments: list

    def __post_init__(self):
        if not self.segments:
            raise PreconditionError("path needs at least one segment")
        total = sum(s.duration for s in self.segments)
        self.segments = [
            dataclasses.replace(s, duration=s.duration / total) for s in self.segments
        ]
        for a, b in zip(self.segments, self.segments[1:]):
            if op_norm(a.end - b.start) > JOIN_TOL:
                raise PreconditionError(
                    "consecutive segments do not meet within 1e-9"
                )
        bounds = np.cumsum([s.duration for s in self.segments])
        bounds[-1] = 1.0
        self._bounds = bounds

    @property
    def n(self) -> int:
        return self.segments[0].start.shape[0]

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].start

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].end

    def joints(self) -> np.ndarray:
        """Clock times of segment boundaries, including 0 and 1."""
        return np.concatenate([[0.0], self._bounds])

    def locate(self, t: float) -> tuple[int, float]:
        """Segment index and local coordinate for clock time t."""
        if not (-1e-12 <= t <= 1.0 + 1e-12):
            raise PreconditionError(f"path time {t!r} outside [0, 1]")
        t = min(max(t, 0.0), 1.0)
        i = int(np.searchsorted(self._bounds, t, side="left"))
        if i >= len(self.segments):
            i = len(self.segments) - 1
        t0 = 0.0 if i == 0 else self._bounds[i - 1]
        return i, (t - t0) / self.segments[i].duration

    def value(self, t: float) -> np.ndarray:
        i, s = self.locate(t)
        return self.segments[i].value(s)

    def exact_length(self) -> float:
        return float(sum(s.length for s in self.segments))

    def max_speed(self) -> float:
        """Lipschitz constant on the normalized clock."""
        return float(max(s.length / s.duration for s in self.segments))


def constant_path(a) -> MatrixPath:
    a = as_cmatrix(a)
    return MatrixPath([Flat(a, a)])


def concat(x: MatrixPath, y: MatrixPath) -> MatrixPath:
    """Run x on [0, 1/2] and y on [1/2, 1] (both at double speed)."""
    if op_norm(x.end - y.start) > JOIN_TOL:
        raise PreconditionError("paths do not meet: endpoint mismatch exceeds 1e-9")
    segs = [dataclasses.replace(s, duration=s.duration * 0.5) for s in x.segments]
    segs += [dataclasses.replace(s, duration=s.duration * 0.5) for s in y.segments]
    return MatrixPath(segs)


def path_length(path: MatrixPath, cross_check: bool = True, samples: int = 1000) -> float:
    """Exact arc length; optionally cross-checked against a polygonal sum.

    The polygonal estimate over ``samples`` uniform points must agree with
    the exact per-segment value within 1e-3 relative, otherwise a
    DiagnosticsError is raised.
    """
    exact = path.exact_length()
    if cross_check:
        ts = np.linspace(0.0, 1.0, samples)
        vals = [path.value(t) for t in ts]
        poly = float(sum(op_norm(b - a) for a, b in zip(vals, vals[1:])))
        if abs(poly - exact) > 1e-3 * exact + 1e-12:
            raise DiagnosticsError(
                f"polygonal length {poly!r} disagrees with exact {exact!r}",
                worst_residual=abs(poly - exact),
            )
    return exact


def path_curvature(path: MatrixPath, t: float, h: float = 1e-3) -> float:
    """Curvature ||d/dt (gamma'/||gamma'||)|| / ||gamma'|| by central differences.

    The five-point stencil must stay inside one segment; near joints (or with
    t closer than 2h to 0 or 1) the quantity is not defined and an error is
    raised. Returns 0 for stationary points (speed below 1e-12).
    """
    if h <= 0:
        raise PreconditionError("stencil width must be positive")
    i_lo, _ = path.locate(max(t - 2 * h, 0.0))
    i_hi, _ = path.locate(min(t + 2 * h, 1.0))
    if t - 2 * h < 0 or t + 2 * h > 1 or i_lo != i_hi:
        raise PreconditionError("curvature is undefined at segment joints")
    g = [path.value(t + k * h) for k in (-2, -1, 0, 1, 2)]
    v_m = (g[2] - g[0]) / (2 * h)
    v_0 = (g[3] - g[1]) / (2 * h)
    v_p = (g[4] - g[2]) / (2 * h)
    speed = op_norm(v_0)
    if speed <= 1e-12:
        return 0.0
    t_m = v_m / op_norm(v_m)
    t_p = v_p / op_norm(v_p)
    return op_norm((t_p - t_m) / (2 * h)) / speed


# --------------------------------------------------------------------------
# link bundles and certification
# --------------------------------------------------------------------------


@dataclass
class LinkBundle:
    """N links (matrix paths) from the X endpoints to the Y endpoints."""

    links: list
    x_mats: list
    y_mats: list
    epsilon_reported: float
    mode: str = "normal"
    conjugator: np.ndarray | None = None
    lengths: list = field(default_factory=list)


@dataclass(frozen=True)
class CertTolerances:
    endpoint: float = 1e-9
    commutation: float = 1e-8
    normality: float = 1e-8
    contraction: float = 1e-9
    mode_defect: float = 1e-9


@dataclass
class Certificate:
    """Grid evaluation of a link bundle with exact inter-grid bounds."""

    grid: np.ndarray
    endpoint_errors: np.ndarray  # (N, 2)
    normality: np.ndarray  # (N, m)
    contraction_excess: np.ndarray  # (N, m)
    distance_to_target: np.ndarray  # (N, m)
    commutation: np.ndarray  # (pairs, m)
    pair_index: list
    mode_defects: np.ndarray | None
    lengths: np.ndarray
    lipschitz: np.ndarray
    intergrid_bounds: np.ndarray
    epsilon: float
    mode: str
    tolerances: CertTolerances
    passed: bool

    def worst(self) -> dict:
        out = {
            "endpoint": float(self.endpoint_errors.max()),
            "normality": float(self.normality.max()),
            "contraction_excess": float(self.contraction_excess.max()),
            "distance_to_target": float(self.distance_to_target.max()),
            "commutation": float(self.commutation.max()) if self.commutation.size else 0.0,
        }
        if self.mode_defects is not None:
            out["mode_defect"] = float(self.mode_defects.max())
        return out


def _report_epsilon(links, y_mats, samples=201):
    """Upper bound on max_j sup_t ||link_j(t) - y_j|| (grid max + Lipschitz slack)."""
    ts = np.linspace(0.0, 1.0, samples)
    eps = 0.0
    for link, y in zip(links, y_mats):
        grid_max = max(op_norm(link.value(t) - y) for t in ts)
        eps = max(eps, grid_max + link.max_speed() * (ts[1] - ts[0]) / 2.0)
    return float(eps)


def _mode_defect(a: np.ndarray, mode: str) -> float:
    if mode == "hermitian":
        return op_norm(a - adjoint(a))
    if mode == "unitary":
        return op_norm(adjoint(a) @ a - np.eye(a.shape[0]))
    return 0.0


def _validate_mode(t: NormalTuple, mode: str, tol: float, who: str) -> None:
    if mode not in ("normal", "hermitian", "unitary"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if mode == "normal":
        return
    for j, m in enumerate(t.mats):
        d = _mode_defect(m, mode)
        if d > tol:
            raise PreconditionError(
                f"{who}[{j}] has {mode} defect {d:.3e} > {tol:.3e}"
            )


def toral_links(
    x: NormalTuple,
    y: NormalTuple,
    mode: str = "normal",
    tol: float = 1e-9,
    cluster_tol: float = 1e-8,
    seed: int = 0,
    objective: str = "bottleneck",
) -> LinkBundle:
    """Links x_j -> y_j: a shared conjugation factor then a flat factor.

    The curved factor rotates every x_j by the same one-parameter unitary
    group generated by the branch logarithm of the matching conjugator V, so
    pairwise commutation is exactly preserved; it ends on the isospectral
    approximant psi_j = V* x_j V, which already commutes with Y. The flat
    factor interpolates affinely to y_j (in unitary mode, along the unitary
    geodesic instead, so the path stays unitary). Zero-length curved factors
    are dropped, and each link reports its exact length.
    """
    _validate_mode(x, mode, tol, "x")
    _validate_mode(y, mode, tol, "y")
    approx = isospectral_approximant(x, y, cluster_tol=cluster_tol, seed=seed)
    h = gap_branch_log(approx.v)

    curved_parts = [Conj(h, xj, 0.0, 1.0) for xj in x.mats]
    flat_parts: list[Flat | Geo] = []
    for pj, yj in zip(approx.psi, y.mats):
        if mode == "unitary":
            flat_parts.append(Geo(pj, principal_log_unitary(adjoint(pj) @ yj), 0.0, 1.0))
        else:
            flat_parts.append(Flat(pj, yj))

    # Degenerate curved factors are dropped only all-or-none: a per-link drop
    # would desynchronize the shared conjugation schedule and lose pairwise
    # commutation mid-path for mixed scalar/non-scalar tuples.
    if all(c.length == 0.0 for c in curved_parts):
        links = [MatrixPath([f]) for f in flat_parts]
    else:
        links = [
            concat(MatrixPath([c]), MatrixPath([f]))
            for c, f in zip(curved_parts, flat_parts)
        ]

    return LinkBundle(
        links=links,
        x_mats=list(x.mats),
        y_mats=list(y.mats),
        epsilon_reported=_report_epsilon(links, y.mats),
        mode=mode,
        conjugator=h,
        lengths=[link.exact_length() for link in links],
    )


def certify(
    bundle: LinkBundle,
    eps: float,
    grid_points: int = 101,
    tolerances: CertTolerances | None = None,
) -> Certificate:
    """Evaluate a bundle on a uniform grid and check every certificate item.

    Records per-sample normality defects, contraction excesses, pairwise
    commutators, distance to the target endpoints, plus endpoint errors,
    exact lengths and Lipschitz constants (which bound deviations between
    grid points by lipschitz * grid spacing). In hermitian/unitary modes the
    corresponding defect is tracked as well. Passes iff every table stays
    within its tolerance and every distance stays within eps.
    """
    if grid_points < 2:
        raise PreconditionError("grid needs at least two points")
    tols = tolerances or CertTolerances()
    links = bundle.links
    m = grid_points
    count = len(links)
    grid = np.linspace(0.0, 1.0, m)

    values = [[link.value(t) for t in grid] for link in links]
    endpoint_errors = np.array(
        [
            [op_norm(link.value(0.0) - x0), op_norm(link.value(1.0) - y1)]
            for link, x0, y1 in zip(links, bundle.x_mats, bundle.y_mats)
        ]
    )
    normality = np.empty((count, m))
    contraction = np.empty((count, m))
    distance = np.empty((count, m))
    use_mode = bundle.mode in ("hermitian", "unitary")
    mode_defects = np.empty((count, m)) if use_mode else None
    for j in range(count):
        yj = bundle.y_mats[j]
        for i in range(m):
            a = values[j][i]
            normality[j, i] = op_norm(commutator(adjoint(a), a))
            contraction[j, i] = max(0.0, op_norm(a) - 1.0)
            distance[j, i] = op_norm(a - yj)
            if use_mode:
                mode_defects[j, i] = _mode_defect(a, bundle.mode)

    pair_index = [(j, k) for j in range(count) for k in range(j + 1, count)]
    commutation = np.empty((len(pair_index), m))
    for p, (j, k) in enumerate(pair_index):
        for i in range(m):
            commutation[p, i] = op_norm(commutator(values[j][i], values[k][i]))

    lengths = np.array([link.exact_length() for link in links])
    lipschitz = np.array([link.max_speed() for link in links])
    intergrid = lipschitz * (grid[1] - grid[0])

    passed = (
        endpoint_errors.max() <= tols.endpoint
        and normality.max() <= tols.normality
        and contraction.max() <= tols.contraction
        and (commutation.size == 0 or commutation.max() <= tols.commutation)
        and distance.max() <= eps
        and (mode_defects is None or mode_defects.max() <= tols.mode_defect)
    )
    return Certificate(
        grid=grid,
        endpoint_errors=endpoint_errors,
        normality=normality,
        contraction_excess=contraction,
        distance_to_target=distance,
        commutation=commutation,
        pair_index=pair_index,
        mode_defects=mode_defects,
        lengths=lengths,
        lipschitz=lipschitz,
        intergrid_bounds=intergrid,
        epsilon=float(eps),
        mode=bundle.mode,
        tolerances=tols,
        passed=bool(passed),
    )


def unitary_contraction_path(
    u, family: list | None = None, tol: float = 1e-10, grid_points: int = 101
) -> tuple[MatrixPath, dict]:
    """Unitary path u(t) = exp(i (1-t) H) from u to the identity.

    H is the branch logarithm of u, so the length is ||H|| (< 2*pi), and the
    report records how well the whole path commutes with each matrix of the
    optional ``family`` (max over a uniform grid).
    """
    u = as_cmatrix(u)
    h = gap_branch_log(u, tol=tol)
    path = MatrixPath([Geo(np.eye(u.shape[0], dtype=np.complex128), h, 1.0, 0.0)])
    family = [as_cmatrix(a) for a in (family or [])]
    worst = 0.0
    per_element = []
    if family:
        ts = np.linspace(0.0, 1.0, grid_points)
        for a in family:
            c = max(op_norm(commutator(path.value(t), a)) for t in ts)
            per_element.append(c)
            worst = max(worst, c)
    report = {
        "length": path.exact_length(),
        "commutation_max": worst,
        "commutation_per_element": per_element,
        "gap_interval_bound": 2 * np.pi - 2 * np.pi / u.shape[0],
    }
    return path, report


def flat_unitary_path(u0, u1, tol: float = 1e-10) -> MatrixPath:
    """Unitary geodesic u0 exp(t log(u0* u1)); errors at the -1 branch point."""
    u0 = as_cmatrix(u0)
    u1 = as_cmatrix(u1)
    matcore._check_unitary(u0, tol)
    matcore._check_unitary(u1, tol)
    g = principal_log_unitary(adjoint(u0) @ u1, tol=tol)
    return MatrixPath([Geo(u0, g, 0.0, 1.0)])


def nearby_generator(
    x: NormalTuple, j: int, eps: float, cluster_tol: float = 1e-8, seed: int = 0
) -> np.ndarray:
    """A single normal generator within eps of x_j.

    Returns X meeting x_j on the joint eigenbasis but with all diagonal
    entries distinct, splitting collisions by increments of at most eps/n.
    Requires the joint spectrum to have n distinct points (otherwise no
    single generator separates the basis and an error is raised).
    """
    if not 0 <= j < x.N:
        raise PreconditionError(f"index {j} outside tuple of length {x.N}")
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    js = joint_diagonalize(x, cluster_tol=cluster_tol, seed=seed)
    n = x.n
    pts = js.points
    for a in range(n):
        for b in range(a + 1, n):
            if np.max(np.abs(pts[a] - pts[b])) <= 1e-12:
                raise PreconditionError(
                    "joint spectrum has coinciding points; the tuple is not "
                    "singly generated at this tolerance"
                )
    col = pts[:, j].copy()

    # group exactly-colliding values of the chosen coordinate
    order = np.lexsort((col.imag, col.real))
    groups: list[list[int]] = []
    for idx in order:
        if groups and abs(col[groups[-1][-1]] - col[idx]) <= 1e-12:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    distinct = [col[g[0]] for g in groups]
    if len(distinct) > 1:
        dmin = min(
            abs(a - b) for i, a in enumerate(distinct) for b in distinct[i + 1 :]
        )
    else:
        dmin = np.inf
    eta = min(eps / n, dmin / (2.0 * (n + 1.0)))
    for g in groups:
        for k, idx in enumerate(g):
            col[idx] = col[g[0]] + k * eta

    out = (js.q * col) @ adjoint(js.q)
    dist = op_norm(out - x.mats[j])
    if dist > eps:
        raise DiagnosticsError(
            "nearby generator moved farther than eps", worst_residual=dist
        )
    return out


def ujc_links(
    x: NormalTuple, y: NormalTuple, w, w_hat, tol: float = 1e-10
) -> LinkBundle:
    """Links through a unitary Z = What* W with ||W - What|| < 1.

    The curved factor conjugates all of X by exp(-i pi t H_Z) with
    H_Z = (1/pi) log Z (principal branch, well defined since ||1 - Z|| < 1),
    which preserves commutation exactly; a flat factor then lands on Y.
    """
    w = as_cmatrix(w)
    w_hat = as_cmatrix(w_hat)
    matcore._check_unitary(w, tol)
    matcore._check_unitary(w_hat, tol)
    nu = op_norm(w - w_hat)
    if nu >= 1.0:
        raise PreconditionError(f"||W - What|| = {nu!r} >= 1; no common branch")
    z = adjoint(w_hat) @ w
    hz = principal_log_unitary(z, tol=tol) / np.pi

    links = []
    for xj, yj in zip(x.mats, y.mats):
        curved = Conj(np.pi * hz, xj, 0.0, 1.0)
        links.append(concat(MatrixPath([curved]), MatrixPath([Flat(curved.end, yj)])))

    return LinkBundle(
        links=links,
        x_mats=list(x.mats),
        y_mats=list(y.mats),
        epsilon_reported=_report_epsilon(links, y.mats),
        mode="normal",
        conjugator=np.pi * hz,
        lengths=[link.exact_length() for link in links],
    )


def project_solid_torus(path: MatrixPath, w=None, samples: int = 101) -> np.ndarray:
    """Diagonal flow rows (t, k, Re d_k, Im d_k, cos 2 pi t, sin 2 pi t).

    d_k(t) is the k-th diagonal entry of W path(t) W*; for contraction paths
    every d_k stays in the closed unit disk. W defaults to the identity and
    must be unitary.
    """
    if samples < 2:
        raise PreconditionError("need at least two samples")
    n = path.n
    if w is None:
        w = np.eye(n, dtype=np.complex128)
    w = as_cmatrix(w)
    matcore._check_unitary(w, 1e-10)
    if w.shape[0] != n:
        raise PreconditionError("projection unitary has wrong dimension")
    rows = np.empty((samples * n, 6))
    ts = np.linspace(0.0, 1.0, samples)
    for i, t in enumerate(ts):
        d = np.diag(w @ path.value(t) @ adjoint(w))
        if np.max(np.abs(d)) > 1.0 + 1e-9:
            raise PreconditionError(
                "diagonal flow leaves the closed unit disk; input path is "
                "not a contraction path"
            )
        for k in range(n):
            rows[i * n + k] = (
                t,
                float(k),
                d[k].real,
                d[k].imag,
                np.cos(2 * np.pi * t),
                np.sin(2 * np.pi * t),
            )
    return rows
