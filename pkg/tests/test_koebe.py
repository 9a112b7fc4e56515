import numpy as np
import pytest

from ratahlfors.errors import MapDivergence, NoConvergence
from ratahlfors.koebe import (
    CircleDomainSignature,
    exterior_riemann_map,
    fit_circle,
    from_kappa,
    hilbert_matrix,
    kappa_chart,
    koebe_uniformize,
    project_P,
)
from ratahlfors.levelset import trace_all, winding_number
from ratahlfors.moduli import signature_distance, validate
from ratahlfors.ratmap import RationalMap, three_pole_example, permute


def ellipse(A, B, M, shift=0j):
    t = 2 * np.pi * np.arange(M) / M
    return A * np.cos(t) + 1j * B * np.sin(t) + shift


def joukowski_inverse(z, A, B):
    # outer branch of w + k/w = z with k = (A^2 - B^2)/4
    k = (A * A - B * B) / 4
    sq = np.sqrt(z * z - 4 * k + 0j)
    w1, w2 = (z + sq) / 2, (z - sq) / 2
    return np.where(np.abs(w1) >= np.abs(w2), w1, w2)


def circles(centers, radii, M=128):
    t = 2 * np.pi * np.arange(M) / M
    return [c + r * np.exp(1j * t) for c, r in zip(centers, radii)]


@pytest.mark.parametrize("A,B", [(1.5, 1.0), (2.0, 1.0), (3.0, 1.0)])
def test_ellipse_matches_joukowski(A, B):
    s = 0.3 + 0.2j
    z = ellipse(A, B, 256, s)
    phi = exterior_riemann_map(z)
    assert abs(phi.radius - (A + B) / 2) < 1e-12
    assert abs(phi.center - s) < 1e-12
    assert np.abs(phi.boundary_image() - (joukowski_inverse(z - s, A, B) + s)).max() < 1e-10
    pts = np.array([3 + 1j, 0.1 + 2.5j, -6, A + 0.05, 1j * (B + 0.01)])
    assert np.abs(phi(pts + s) - (joukowski_inverse(pts, A, B) + s)).max() < 1e-9


def test_exterior_map_orientation_and_circle():
    z = ellipse(2, 1, 128)[::-1]
    phi = exterior_riemann_map(z)
    assert phi.reversed
    w = phi.boundary_image()
    assert abs(w[0] - joukowski_inverse(z[:1], 2, 1)[0]) < 1e-12
    c = circles([1 - 1j], [0.4])[0]
    phi = exterior_riemann_map(c)
    assert np.abs(phi.boundary_image() - c).max() < 1e-14
    assert abs(phi(3 + 3j) - (3 + 3j)) < 1e-14


def test_traced_circle_is_fixed():
    curve = trace_all(RationalMap([0.7], [0]))[0]
    phi = exterior_riemann_map(curve)
    assert np.abs(phi.boundary_image() - curve.samples).max() < 1e-9
    assert abs(phi.radius - 0.7) < 1e-12


def test_wild_curve_diverges():
    t = 2 * np.pi * np.arange(64) / 64
    z = np.exp(1j * t) * (1 + 0.9 * np.cos(20 * t))
    with pytest.raises(MapDivergence):
        exterior_riemann_map(z)


def test_tangent_to_identity():
    phi = exterior_riemann_map(ellipse(2, 1, 256))
    z = 1e5 * np.exp(1j * np.array([0.1, 1.7, 4.0]))
    h = 1e-2 * z / np.abs(z)
    deriv = (phi(z + h) - phi(z - h)) / (2 * h)
    assert np.abs(deriv - 1).max() < 1e-6


def test_hilbert_matrix_conjugates_trig():
    M = 32
    t = 2 * np.pi * np.arange(M) / M
    H = hilbert_matrix(M)
    assert np.abs(H @ np.cos(3 * t) - np.sin(3 * t)).max() < 1e-13


def test_circle_domain_idempotence():
    c = np.array([0, 1 + 1j, -1 - 1j])
    r = np.array([0.3, 0.3, 0.3])
    res = koebe_uniformize(circles(c, r))
    assert np.abs(res.signature.centers - c).max() < 1e-8
    assert np.abs(res.signature.radii - r).max() < 1e-8
    grid = np.array([2 + 2j, 0.5 + 0.1j, -3j, 1.5 - 1j])
    assert np.abs(res.chain(grid) - grid).max() < 1e-8


def test_translated_circle_domain_recentres():
    c = np.array([0.5, -0.5 + 1j]) + (3 - 2j)
    res = koebe_uniformize(circles(c, [0.2, 0.3]))
    assert np.abs(res.signature.centers - (c - c.mean())).max() < 1e-8
    assert np.abs(res.signature.radii - [0.2, 0.3]).max() < 1e-8


def test_symmetric_pair_gives_symmetric_disks():
    sig = project_P(RationalMap([1, 1], [2, -2]))
    c, r = sig.centers, sig.radii
    assert abs(r[0] - r[1]) < 1e-6
    assert abs(c[0] + c[1]) < 1e-9
    assert abs(c[0].imag) < 1e-9
    assert c[0].real > 0


def test_r0_signature_is_valid_and_labelled():
    R = three_pole_example()
    curves = trace_all(R)
    res = koebe_uniformize(curves)
    assert validate(res.signature)
    assert abs(res.signature.centers.sum()) < 1e-12
    for j, img in enumerate(res.images):
        w = winding_number(img, res.signature.centers)
        assert np.array_equal(np.abs(w), np.eye(3, dtype=int)[j])
    # the image curves are circles
    for img, c, r in zip(res.images, res.signature.centers, res.signature.radii):
        cc, rr, dev = fit_circle(img)
        assert dev < 1e-8 and abs(cc - c) < 1e-8 and abs(rr - r) < 1e-8


def test_chain_at_infinity():
    R = three_pole_example()
    res = koebe_uniformize(trace_all(R))
    diam = res.signature.diameter
    z = 1e4 * diam * np.exp(1j * np.array([0.3, 2.0, 4.4]))
    h = 1e-3 * diam * z / np.abs(z)
    deriv = (res.chain(z + h) - res.chain(z - h)) / (2 * h)
    assert np.abs(deriv - 1).max() < 1e-6
    # g(z)/z - 1 decays like 1/|z| (constant term of the normalised map)
    ratio = np.abs(res.chain(z) / z - 1) * np.abs(z)
    ratio2 = np.abs(res.chain(10 * z) / (10 * z) - 1) * np.abs(10 * z)
    assert np.abs(ratio - ratio2).max() < 1e-3 * max(1.0, ratio.max())
    # evaluation is deterministic
    assert np.array_equal(res.chain(z), res.chain(z))


def test_permutation_equivariance():
    R = three_pole_example()
    perm = [2, 0, 1]
    s = project_P(R)
    sp = project_P(permute(R, perm))
    assert np.abs(sp.centers - s.centers[perm]).max() < 1e-8
    assert np.abs(sp.radii - s.radii[perm]).max() < 1e-8


def test_local_continuity():
    R = three_pole_example()
    k0 = kappa_chart(project_P(R))
    d = 1e-4
    R2 = RationalMap(R.residues + d, R.poles + d * (1 + 1j))
    assert np.abs(kappa_chart(project_P(R2)) - k0).max() <= 1e-2


def test_single_pole_signature():
    sig = project_P(RationalMap([0.7], [1 + 2j]))
    assert abs(sig.centers[0]) < 1e-14 and abs(sig.radii[0] - 0.7) < 1e-12


def test_kappa_chart_roundtrip():
    assert np.allclose(kappa_chart(CircleDomainSignature([0], [0.4])), [0.4])
    sig = CircleDomainSignature([1 + 0.5j, -1 - 0.5j], [0.3, 0.4])
    k = kappa_chart(sig)
    assert np.allclose(k, [1, 0.5, 0.3, 0.4])
    back = from_kappa(k, 2)
    assert signature_distance(back, sig) == 0
    sig3 = CircleDomainSignature([0, 1 + 1j, -1 - 1j], [0.3, 0.3, 0.3])
    assert kappa_chart(sig3).size == 7
    assert signature_distance(from_kappa(kappa_chart(sig3), 3), sig3) < 1e-15


def test_signature_json_roundtrip():
    sig = CircleDomainSignature([1 + 0.5j, -1 - 0.5j], [0.3, 0.4])
    assert CircleDomainSignature.from_json(sig.to_json()) == sig


def test_no_convergence_budget():
    curves = [ellipse(1.0, 0.5, 128, -1.4), ellipse(0.8, 0.4, 128, 1.3)]
    with pytest.raises(NoConvergence):
        koebe_uniformize(curves, max_sweeps=1)
