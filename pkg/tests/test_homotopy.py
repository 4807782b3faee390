import logging

import numpy as np
import pytest

from torlinks.homotopy import (
    Conj,
    Flat,
    Geo,
    MatrixPath,
    certify,
    concat,
    constant_path,
    flat_unitary_path,
    nearby_generator,
    path_curvature,
    path_length,
    project_solid_torus,
    toral_links,
    ujc_links,
    unitary_contraction_path,
)
from torlinks.jointspec import NormalTuple
from torlinks.matcore import (
    BranchPointError,
    PreconditionError,
    adjoint,
    commutator,
    op_norm,
)

log = logging.getLogger(__name__)


def _haar_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def _grid_points(n, radius=0.7):
    # well separated points in a disk, deterministic
    m = int(np.ceil(np.sqrt(n)))
    xs = np.linspace(-radius, radius, m)
    pts = np.array([x + 1j * y for y in xs for x in xs])[:n]
    return pts


def _commuting_pair(n, rng, hermitian=False, unitary=False):
    """Exactly commuting pair diagonal in a common Haar basis."""
    q = _haar_unitary(n, rng)
    if unitary:
        d1 = np.exp(2j * np.pi * (np.arange(n) + 0.1) / (n + 1))
        d2 = np.exp(2j * np.pi * rng.permutation(n) / (n + 2))
    elif hermitian:
        d1 = np.linspace(-0.9, 0.9, n)
        d2 = np.linspace(-0.5, 0.7, n)[rng.permutation(n)]
    else:
        d1 = _grid_points(n)
        d2 = _grid_points(n)[rng.permutation(n)]
    mats = [(q * d1) @ adjoint(q), (q * d2) @ adjoint(q)]
    return NormalTuple(mats), q, [d1, d2]


def _perturb_in_basis(q, diags, delta, rng, rotate=True, unitary=False):
    """Commuting tuple delta-close to q diag(d) q*: shifted entries, rotated basis."""
    n = len(diags[0])
    k = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = (k + adjoint(k)) / 2
    k /= op_norm(k)
    r = np.eye(n) if not rotate else _rot(k, delta / 4)
    mats = []
    for d in diags:
        if unitary:
            shift = delta / 4 * rng.uniform(-1.0, 1.0, n)
            nd = d * np.exp(1j * shift)
        else:
            shift = delta / 4 * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n))
            nd = d + shift
        mats.append(r @ (q * nd) @ adjoint(q) @ adjoint(r))
    return NormalTuple(mats)


def _rot(h, angle):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * angle * w)) @ adjoint(v)


# ---------------------------------------------------------------------------
# segments and paths
# ---------------------------------------------------------------------------


def test_flat_segment_evaluates_affinely():
    a = np.zeros((2, 2))
    b = np.eye(2)
    seg = Flat(a, b)
    assert np.allclose(seg.value(0.25), 0.25 * np.eye(2))
    assert seg.length == pytest.approx(1.0)


def test_conj_segment_orbit_and_exact_length():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (h + adjoint(h)) / 2
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    seg = Conj(h, b, 0.0, 1.0)
    assert seg.length == pytest.approx(op_norm(commutator(h, b)))
    # spot check the orbit formula at s = 0.37
    u = _rot(h, -0.37)
    assert op_norm(seg.value(0.37) - u @ b @ adjoint(u)) < 1e-12


def test_conj_of_commuting_base_is_constant():
    h = np.diag([1.0, 2.0])
    b = np.diag([5.0, -3.0])
    seg = Conj(h, b, 0.0, 1.0)
    assert seg.length == 0.0
    assert np.allclose(seg.value(0.9), b)


def test_geo_segment_is_scalar_circle():
    seg = Geo(np.array([[1.0]]), np.array([[2 * np.pi]]), 0.0, 1.0)
    for t in (0.0, 0.25, 0.5):
        assert abs(seg.value(t)[0, 0] - np.exp(2j * np.pi * t)) < 1e-14
    assert seg.length == pytest.approx(2 * np.pi)


def test_segment_rejects_bad_duration_and_shapes():
    with pytest.raises(PreconditionError):
        Flat(np.eye(2), np.eye(2), duration=0.0)
    with pytest.raises(PreconditionError):
        Flat(np.eye(2), np.eye(3))
    with pytest.raises(PreconditionError):
        Conj(np.eye(2), np.eye(3))


def test_path_requires_continuity():
    a, b, c = np.zeros((2, 2)), np.eye(2), 2 * np.eye(2)
    MatrixPath([Flat(a, b), Flat(b, c)])  # fine
    with pytest.raises(PreconditionError):
        MatrixPath([Flat(a, b), Flat(c, c)])


def test_concat_hits_middle_value():
    a, b, c = np.zeros((2, 2)), np.eye(2), 3 * np.eye(2)
    p = concat(MatrixPath([Flat(a, b)]), MatrixPath([Flat(b, c)]))
    assert op_norm(p.value(0.5) - b) < 1e-12
    assert op_norm(p.value(0.0) - a) < 1e-12
    assert op_norm(p.value(1.0) - c) < 1e-12
    assert op_norm(p.value(0.75) - 2 * np.eye(2)) < 1e-12


def test_concat_rejects_mismatched_endpoints():
    a, b = np.zeros((2, 2)), np.eye(2)
    with pytest.raises(PreconditionError):
        concat(MatrixPath([Flat(a, b)]), MatrixPath([Flat(a, b)]))


def test_concat_of_constants_is_constant():
    c = constant_path(np.diag([1.0, 2.0]))
    p = concat(c, constant_path(np.diag([1.0, 2.0])))
    assert p.exact_length() == 0.0
    assert np.allclose(p.value(0.3), np.diag([1.0, 2.0]))


# ---------------------------------------------------------------------------
# length and curvature functionals
# ---------------------------------------------------------------------------


def test_path_length_flat_and_constant():
    a, b = np.zeros((2, 2)), np.diag([3.0, 1.0])
    assert path_length(MatrixPath([Flat(a, b)])) == pytest.approx(3.0)
    assert path_length(constant_path(b)) == 0.0


def test_path_length_conj_matches_commutator_norm():
    rng = np.random.default_rng(7)
    h = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    h = (h + adjoint(h)) / 2
    b = rng.standard_normal((5, 5))
    p = MatrixPath([Conj(h, b, 0.0, 1.0)])
    # the polygonal cross-check inside path_length validates constant speed
    assert path_length(p) == pytest.approx(op_norm(commutator(h, b)))


def test_path_length_polygonal_agreement_on_mixed_path():
    rng = np.random.default_rng(11)
    h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    h = (h + adjoint(h)) / 2
    b = np.diag([0.5, -0.2, 0.1j])
    curved = Conj(h, b, 0.0, 0.8)
    p = concat(MatrixPath([curved]), MatrixPath([Flat(curved.end, np.zeros((3, 3)))]))
    exact = p.exact_length()
    ts = np.linspace(0, 1, 1000)
    vals = [p.value(t) for t in ts]
    poly = sum(op_norm(v2 - v1) for v1, v2 in zip(vals, vals[1:]))
    assert abs(poly - exact) <= 1e-3 * exact
    assert path_length(p) == pytest.approx(exact)


def test_curvature_of_flat_segment_is_zero():
    p = MatrixPath([Flat(np.zeros((2, 2)), np.eye(2))])
    assert path_curvature(p, 0.5) == pytest.approx(0.0, abs=1e-10)


def test_curvature_of_unit_circle_is_one():
    p = MatrixPath([Geo(np.array([[1.0]]), np.array([[2 * np.pi]]), 0.0, 1.0)])
    assert path_curvature(p, 0.5) == pytest.approx(1.0, abs=1e-4)


def test_curvature_of_radius_r_circle_is_reciprocal():
    for r in (0.5, 2.0):
        p = MatrixPath([Geo(np.array([[r]]), np.array([[2 * np.pi]]), 0.0, 1.0)])
        assert path_curvature(p, 0.3) == pytest.approx(1.0 / r, rel=1e-3)


def test_curvature_rejects_segment_joints():
    a, b, c = np.zeros((2, 2)), np.eye(2), 2 * np.eye(2)
    p = MatrixPath([Flat(a, b), Flat(b, c)])
    with pytest.raises(PreconditionError):
        path_curvature(p, 0.5)
    with pytest.raises(PreconditionError):
        path_curvature(p, 0.5004, h=1e-3)
    with pytest.raises(PreconditionError):
        path_curvature(p, 0.001, h=1e-3)


def test_curvature_of_stationary_path_is_zero():
    assert path_curvature(constant_path(np.eye(3)), 0.5) == 0.0


def test_curved_factor_curvature_length_product_logged():
    # measured (not asserted): kappa * length stays modest for conjugation arcs
    rng = np.random.default_rng(19)
    t, q, diags = _commuting_pair(5, rng)
    h = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    h = 0.3 * (h + adjoint(h))
    p = MatrixPath([Conj(h, t.mats[0], 0.0, 1.0)])
    kappa = path_curvature(p, 0.5)
    log.info("curved factor: kappa=%.4f length=%.4f kappa*length=%.4f",
             kappa, p.exact_length(), kappa * p.exact_length())


# ---------------------------------------------------------------------------
# toral links
# ---------------------------------------------------------------------------


def test_scalar_link_is_single_flat():
    x = NormalTuple([np.array([[0.5]])])
    y = NormalTuple([np.array([[0.6]])])
    bundle = toral_links(x, y)
    assert len(bundle.links) == 1
    assert len(bundle.links[0].segments) == 1
    assert isinstance(bundle.links[0].segments[0], Flat)
    assert bundle.lengths[0] == pytest.approx(0.1)


def test_identical_tuples_give_constant_links():
    rng = np.random.default_rng(0)
    x, _, _ = _commuting_pair(6, rng)
    bundle = toral_links(x, x)
    assert bundle.epsilon_reported <= 1e-9
    assert max(bundle.lengths) <= 1e-9
    cert = certify(bundle, eps=1e-9)
    assert cert.passed


def test_close_pair_links_certify(caplog):
    rng = np.random.default_rng(1)
    delta = 1e-3
    x, q, diags = _commuting_pair(8, rng)
    y = _perturb_in_basis(q, diags, delta, rng)
    bundle = toral_links(x, y)
    cert = certify(bundle, eps=1.0)
    assert cert.passed
    assert cert.endpoint_errors.max() <= 1e-9
    assert cert.commutation.max() <= 1e-9
    big_c = max(bundle.lengths) / delta
    log.info("link length / delta = %.3f", big_c)
    assert big_c < 100.0


def test_links_commute_even_with_scalar_member():
    # a scalar member has a motionless curved factor; the schedules of the
    # other links must still line up with it so that pairwise commutators
    # stay small at intermediate times
    rng = np.random.default_rng(5)
    n = 5
    q = _haar_unitary(n, rng)
    d2 = _grid_points(n)
    x = NormalTuple([0.3 * np.eye(n), (q * d2) @ adjoint(q)])
    k = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = (k + adjoint(k)) / 2
    r = _rot(k / op_norm(k), 2e-3)
    y = NormalTuple([r @ m @ adjoint(r) for m in x.mats])
    bundle = toral_links(x, y)
    assert bundle.lengths[1] > 0
    for t in (0.1, 0.25, 0.4, 0.6, 0.9):
        c = op_norm(commutator(bundle.links[0].value(t), bundle.links[1].value(t)))
        assert c <= 1e-10


def test_hermitian_mode_keeps_paths_hermitian():
    rng = np.random.default_rng(2)
    x, q, diags = _commuting_pair(6, rng, hermitian=True)
    y = _perturb_in_basis(q, diags, 1e-3, rng)
    y = NormalTuple([(m + adjoint(m)) / 2 for m in y.mats])
    bundle = toral_links(x, y, mode="hermitian")
    cert = certify(bundle, eps=0.1)
    assert cert.passed
    assert cert.mode_defects is not None
    assert cert.mode_defects.max() <= 1e-9


def test_unitary_mode_keeps_paths_unitary():
    rng = np.random.default_rng(4)
    x, q, diags = _commuting_pair(6, rng, unitary=True)
    y = _perturb_in_basis(q, diags, 1e-2, rng, unitary=True)
    bundle = toral_links(x, y, mode="unitary")
    cert = certify(bundle, eps=0.5)
    assert cert.passed
    assert cert.mode_defects.max() <= 1e-9
    for link in bundle.links:
        for t in (0.2, 0.5, 0.8):
            v = link.value(t)
            assert op_norm(adjoint(v) @ v - np.eye(6)) <= 1e-9


def test_mode_validation_rejects_wrong_inputs():
    x = NormalTuple([np.diag([0.5j, -0.5j])])  # normal, not hermitian
    with pytest.raises(PreconditionError):
        toral_links(x, x, mode="hermitian")
    with pytest.raises(PreconditionError):
        toral_links(x, x, mode="unitary")
    with pytest.raises(PreconditionError):
        toral_links(x, x, mode="spherical")


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


def test_certify_constant_bundle_is_clean():
    rng = np.random.default_rng(9)
    x, _, _ = _commuting_pair(4, rng)
    bundle = toral_links(x, x)
    cert = certify(bundle, eps=1e-9)
    assert cert.passed
    worst = cert.worst()
    assert worst["normality"] <= 1e-12
    assert worst["commutation"] <= 1e-12
    assert worst["distance_to_target"] <= 1e-12


def test_certify_flags_tampered_endpoint():
    rng = np.random.default_rng(10)
    x, q, diags = _commuting_pair(4, rng)
    y = _perturb_in_basis(q, diags, 1e-3, rng)
    bundle = toral_links(x, y)
    bundle.y_mats[0] = bundle.y_mats[0] + 0.05 * np.eye(4)
    cert = certify(bundle, eps=1.0)
    assert not cert.passed
    assert cert.endpoint_errors[0, 1] > 1e-9


def test_certify_respects_eps_budget():
    x = NormalTuple([np.array([[0.5]])])
    y = NormalTuple([np.array([[0.9]])])
    bundle = toral_links(x, y)
    assert certify(bundle, eps=0.5).passed
    assert not certify(bundle, eps=0.1).passed


# ---------------------------------------------------------------------------
# unitary paths
# ---------------------------------------------------------------------------


def test_contraction_path_for_sign_matrix():
    u = np.diag([1.0, -1.0])
    path, report = unitary_contraction_path(u)
    assert op_norm(path.value(0.0) - u) < 1e-12
    assert op_norm(path.value(1.0) - np.eye(2)) < 1e-12
    assert report["length"] == pytest.approx(np.pi)
    assert report["length"] <= report["gap_interval_bound"] + 1e-9


def test_contraction_path_commutes_with_functions_of_u():
    rng = np.random.default_rng(12)
    u = _haar_unitary(5, rng)
    path, report = unitary_contraction_path(u, family=[u, u @ u, adjoint(u)])
    assert report["commutation_max"] <= 1e-12
    assert report["length"] <= 2 * np.pi
    for t in (0.0, 0.3, 0.7, 1.0):
        v = path.value(t)
        assert op_norm(adjoint(v) @ v - np.eye(5)) < 1e-10


def test_contraction_path_haar_sweep_stays_below_two_pi():
    rng = np.random.default_rng(13)
    for n in (2, 3, 6):
        for _ in range(5):
            u = _haar_unitary(n, rng)
            path, report = unitary_contraction_path(u)
            assert report["length"] <= 2 * np.pi
            assert op_norm(path.value(0.0) - u) < 1e-10


def test_contraction_path_antipodal_cluster_needs_long_arc():
    # both eigenvalues sit just around -1; the branch cut keeps them in one
    # short arc, so the generator norm is pi + d even though the arc itself
    # is only 2d long -- the sharp per-dimension norm bound needs spectra
    # that do not straddle the far side of the circle
    d = 0.3
    u = np.diag([np.exp(1j * (np.pi - d)), np.exp(1j * (np.pi + d))])
    path, report = unitary_contraction_path(u)
    assert report["length"] == pytest.approx(np.pi + d)
    assert report["length"] > report["gap_interval_bound"]
    assert report["length"] <= 2 * np.pi - np.pi / 2


def test_flat_unitary_path_endpoints_and_unitarity():
    rng = np.random.default_rng(14)
    u0 = _haar_unitary(4, rng)
    s = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    s = 0.2 * (s + adjoint(s))
    u1 = u0 @ _rot(s / op_norm(s), 0.4)
    p = flat_unitary_path(u0, u1)
    assert op_norm(p.value(0.0) - u0) < 1e-10
    assert op_norm(p.value(1.0) - u1) < 1e-10
    for t in (0.25, 0.75):
        v = p.value(t)
        assert op_norm(adjoint(v) @ v - np.eye(4)) < 1e-10


def test_flat_unitary_path_branch_point_errors():
    with pytest.raises(BranchPointError):
        flat_unitary_path(np.eye(2), np.diag([-1.0, 1.0]))


# ---------------------------------------------------------------------------
# nearby generators
# ---------------------------------------------------------------------------


def test_nearby_generator_keeps_already_distinct_matrix():
    x = NormalTuple([np.diag([1.0, -1.0])])
    out = nearby_generator(x, 0, eps=0.1)
    assert op_norm(out - x.mats[0]) < 1e-12


def test_nearby_generator_splits_collisions():
    a, b = 0.5, -0.25
    c, d = 0.1, 0.7
    x = NormalTuple([np.diag([a, a, b]), np.diag([c, d, d])])
    out = nearby_generator(x, 0, eps=0.09)
    vals = np.sort_complex(np.linalg.eigvals(out))
    assert abs(vals[0] - b) < 1e-12
    eta = vals[2] - vals[1]
    assert abs(vals[1] - a) < 1e-12 or abs(vals[2] - a) < 1e-12
    assert 0 < eta.real <= 0.03 + 1e-12
    assert abs(eta.imag) < 1e-12
    assert op_norm(out - x.mats[0]) <= 0.09
    # all three entries distinct now
    assert np.min(np.abs(np.diff(vals))) > 1e-9


def test_nearby_generator_output_commutes_with_tuple():
    rng = np.random.default_rng(21)
    q = _haar_unitary(6, rng)
    d1 = np.array([0.1, 0.1, 0.1, -0.4, -0.4, 0.6])
    d2 = np.array([0.2j, -0.3, 0.5, 0.2j, -0.1j, 0.2j])
    x = NormalTuple([(q * d1) @ adjoint(q), (q * d2) @ adjoint(q)])
    out = nearby_generator(x, 0, eps=0.05)
    for m in x.mats:
        assert op_norm(commutator(out, m)) < 1e-10
    assert op_norm(out - x.mats[0]) <= 0.05
    vals = np.linalg.eigvals(out)
    assert np.min(np.abs(vals[:, None] - vals[None, :]) + np.eye(6)) > 1e-9


def test_nearby_generator_rejects_duplicate_joint_rows():
    x = NormalTuple([np.diag([1.0, 1.0]), np.diag([0.5, 0.5])])
    with pytest.raises(PreconditionError):
        nearby_generator(x, 0, eps=0.1)


# ---------------------------------------------------------------------------
# joint-conjugation links
# ---------------------------------------------------------------------------


def test_ujc_scalar_arc_angle():
    phi = 0.5
    w = np.array([[1.0]])
    w_hat = np.array([[np.exp(1j * phi)]])
    x = NormalTuple([np.array([[0.5]])])
    y = NormalTuple([np.array([[0.6]])])
    bundle = ujc_links(x, y, w, w_hat)
    assert bundle.conjugator[0, 0] == pytest.approx(-phi)
    assert bundle.lengths[0] == pytest.approx(0.1)
    assert certify(bundle, eps=0.2).passed


def test_ujc_identical_conjugators_give_flat_motion():
    rng = np.random.default_rng(15)
    x, q, diags = _commuting_pair(4, rng)
    y = _perturb_in_basis(q, diags, 1e-2, rng, rotate=False)
    w = _haar_unitary(4, rng)
    bundle = ujc_links(x, y, w, w)
    cert = certify(bundle, eps=0.05)
    assert cert.passed
    assert max(bundle.lengths) <= 1e-2 + 1e-9


def test_ujc_pure_conjugation_bundle():
    rng = np.random.default_rng(16)
    x, _, _ = _commuting_pair(5, rng)
    w = _haar_unitary(5, rng)
    s = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    s = (s + adjoint(s)) / 2
    w_hat = w @ _rot(s / op_norm(s), 0.05)
    z = adjoint(w_hat) @ w
    y = NormalTuple([adjoint(z) @ m @ z for m in x.mats])
    bundle = ujc_links(x, y, w, w_hat)
    cert = certify(bundle, eps=0.2)
    assert cert.passed
    assert cert.commutation.max() <= 1e-10  # common conjugation is exact


def test_ujc_rejects_antipodal_conjugators():
    with pytest.raises(PreconditionError):
        ujc_links(
            NormalTuple([np.eye(2)]),
            NormalTuple([np.eye(2)]),
            np.eye(2),
            -np.eye(2),
        )


# ---------------------------------------------------------------------------
# solid-torus projection
# ---------------------------------------------------------------------------


def test_projection_of_scalar_circle_is_helix():
    r = 0.5
    p = MatrixPath([Geo(np.array([[r]]), np.array([[2 * np.pi]]), 0.0, 1.0)])
    rows = project_solid_torus(p, samples=5)
    assert rows.shape == (5, 6)
    for row in rows:
        t = row[0]
        assert row[1] == 0.0
        assert row[2] == pytest.approx(r * np.cos(2 * np.pi * t), abs=1e-12)
        assert row[3] == pytest.approx(r * np.sin(2 * np.pi * t), abs=1e-12)
        assert row[4] == pytest.approx(np.cos(2 * np.pi * t), abs=1e-12)
        assert row[5] == pytest.approx(np.sin(2 * np.pi * t), abs=1e-12)


def test_projection_of_diagonal_path_tracks_eigenvalues():
    p = MatrixPath([Flat(np.diag([0.2, -0.4]), np.diag([0.3, -0.1]))])
    rows = project_solid_torus(p, samples=3)
    # row layout: all k for t=0, then t=0.5, then t=1
    assert rows[0][2] == pytest.approx(0.2)
    assert rows[1][2] == pytest.approx(-0.4)
    assert rows[2][2] == pytest.approx(0.25)
    assert rows[3][2] == pytest.approx(-0.25)
    assert rows[4][2] == pytest.approx(0.3)
    assert rows[5][2] == pytest.approx(-0.1)


def test_projection_of_zero_matrix_sits_at_center():
    rows = project_solid_torus(constant_path(np.zeros((3, 3))), samples=4)
    assert np.max(np.abs(rows[:, 2:4])) == 0.0


def test_projection_rejects_bad_inputs():
    p = constant_path(np.zeros((2, 2)))
    with pytest.raises(PreconditionError):
        project_solid_torus(p, w=np.diag([2.0, 1.0]))
    q = constant_path(1.5 * np.eye(2))
    with pytest.raises(PreconditionError):
        project_solid_torus(q)
