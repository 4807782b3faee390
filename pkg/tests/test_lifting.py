import numpy as np
import pytest

from torlinks.homotopy import Flat, certify
from torlinks.jointspec import NormalTuple
from torlinks.lifting import (
    LiftedHom,
    iota2,
    kappa_compress,
    lifted_links,
    std_dilation,
    z2_dilation,
)
from torlinks.matcore import PreconditionError, adjoint, op_norm


def _haar_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def _close_commuting_pairs(n, rng, delta):
    """Two exactly commuting pairs, entrywise delta-close in a rotated basis."""
    q = _haar_unitary(n, rng)
    m = int(np.ceil(np.sqrt(n)))
    xs = np.linspace(-0.7, 0.7, m)
    d1 = np.array([a + 1j * b for b in xs for a in xs])[:n]
    d2 = d1[rng.permutation(n)]
    x = NormalTuple([(q * d1) @ adjoint(q), (q * d2) @ adjoint(q)])
    k = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = (k + adjoint(k)) / 2
    w, v = np.linalg.eigh(k / op_norm(k))
    r = (v * np.exp(1j * (delta / 4) * w)) @ adjoint(v)
    e1 = d1 + delta / 4 * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n))
    e2 = d2 + delta / 4 * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n))
    y = NormalTuple(
        [r @ (q * e1) @ adjoint(q) @ adjoint(r), r @ (q * e2) @ adjoint(q) @ adjoint(r)]
    )
    return x, y


def test_iota2_doubles_blocks():
    assert np.allclose(iota2(np.array([[3.0]])), np.diag([3.0, 3.0]))
    assert np.allclose(iota2(np.eye(3)), np.eye(6))
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert op_norm(iota2(x)) == pytest.approx(op_norm(x))


def test_kappa_inverts_iota2_exactly():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    assert np.array_equal(kappa_compress(iota2(x)), x)
    assert kappa_compress(np.diag([1.0, 2.0]))[0, 0] == 1.0


def test_kappa_extracts_upper_left_block():
    a = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(kappa_compress(a), a[:2, :2])
    with pytest.raises(PreconditionError):
        kappa_compress(np.eye(3))


def test_std_dilation_is_block_doubling():
    rng = np.random.default_rng(2)
    w = _haar_unitary(3, rng)
    d = std_dilation(w)
    assert np.allclose(d[:3, :3], w)
    assert np.allclose(d[3:, 3:], w)
    assert np.max(np.abs(d[:3, 3:])) == 0.0
    with pytest.raises(PreconditionError):
        std_dilation(2 * np.eye(2))


def test_z2_dilation_of_scalar_is_swap():
    lift = z2_dilation(np.array([[1.0]]))
    assert np.allclose(lift.what_s, np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_z2_dilation_invariants():
    rng = np.random.default_rng(3)
    for n in (2, 5):
        lift = z2_dilation(_haar_unitary(n, rng))
        d = lift.defects()
        assert d["hermiticity"] <= 1e-12
        assert d["unitarity"] <= 1e-12
        assert d["exp_identity"] <= 1e-10
        sq = lift.what_s @ lift.what_s
        assert op_norm(sq - np.eye(2 * n)) <= 1e-12
    with pytest.raises(PreconditionError):
        z2_dilation(np.ones((2, 2)))


def test_lift_compression_is_bit_exact():
    rng = np.random.default_rng(4)
    lift = z2_dilation(_haar_unitary(4, rng))
    for _ in range(5):
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert np.array_equal(kappa_compress(lift.apply(x)), x)


def test_lift_is_star_homomorphism_on_samples():
    rng = np.random.default_rng(5)
    lift = z2_dilation(_haar_unitary(3, rng))
    for _ in range(5):
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert op_norm(lift.apply(a @ b) - lift.apply(a) @ lift.apply(b)) <= 1e-10
        assert op_norm(lift.apply(adjoint(a)) - adjoint(lift.apply(a))) <= 1e-12
    assert op_norm(lift.apply(np.eye(3)) - np.eye(6)) <= 1e-12
    with pytest.raises(PreconditionError):
        lift.apply(np.eye(4))


def test_lifted_links_scalars_are_flat_only():
    x = NormalTuple([np.array([[0.5]])])
    y = NormalTuple([np.array([[0.4]])])
    lift, bundle, report = lifted_links(x, y)
    assert len(bundle.links[0].segments) == 1
    assert isinstance(bundle.links[0].segments[0], Flat)
    assert np.allclose(bundle.x_mats[0], np.diag([0.5, 0.5]))
    assert np.allclose(bundle.y_mats[0], np.diag([0.4, 0.4]))
    assert report["kappa_identity_error"] == 0.0


def test_lifted_links_identical_tuples():
    rng = np.random.default_rng(6)
    x, _ = _close_commuting_pairs(6, rng, 0.0)
    lift, bundle, report = lifted_links(x, x)
    slack = max(
        op_norm(phi - iota2(xj)) for phi, xj in zip(bundle.x_mats, x.mats)
    )
    assert bundle.epsilon_reported <= slack + 1e-9
    cert = certify(bundle, eps=max(slack, 1e-9))
    assert cert.passed


def test_lifted_links_close_pair_certifies():
    rng = np.random.default_rng(7)
    x, y = _close_commuting_pairs(8, rng, 1e-3)
    lift, bundle, report = lifted_links(x, y)
    cert = certify(bundle, eps=1.0)
    assert cert.passed
    assert report["kappa_identity_error"] == 0.0
    assert report["hom_product_defect"] <= 1e-10
    assert report["hom_star_defect"] <= 1e-12
    assert report["hom_unit_defect"] <= 1e-12
    assert report["decay_max_error"] <= 1e-10
    assert report["exp_identity"] <= 1e-10
    # links end on the doubled targets
    for link, yj in zip(bundle.links, y.mats):
        assert op_norm(link.value(1.0) - iota2(yj)) <= 1e-9


def test_lifted_links_report_displacement_tracks_conjugator():
    # phi_displacement measures ||V*^2 x V^2 - x||; it collapses when X = Y
    rng = np.random.default_rng(8)
    x, y = _close_commuting_pairs(5, rng, 1e-2)
    _, _, report_far = lifted_links(x, y)
    _, _, report_same = lifted_links(x, x)
    assert report_same["phi_displacement"] <= report_far["phi_displacement"] + 1e-12
    assert report_same["phi_displacement"] <= 1e-9
