import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import helmert
from scipy.stats import special_ortho_group

from conftest import box, random_body, square
from hypersupport.body import Hyperplane, VPolytope
from hypersupport.centering import (JohnFrame, from_frame, hyperplane_from_frame, mvee,
                                    to_frame, well_center)
from hypersupport.errors import DegenerateInputError, InputError
from hypersupport.verify import FAMILY_KINDS, thin_family, well_centering_residuals


def test_mvee_square_is_circumcircle():
    E = mvee(square().vertices, eps=1e-6)
    np.testing.assert_allclose(E.center, [0, 0], atol=1e-4)
    np.testing.assert_allclose(E.radii, [np.sqrt(2)] * 2, atol=1e-4)
    assert E.gap <= 1e-6
    np.testing.assert_allclose(E.level(square().vertices), 1.0, atol=1e-4)


def test_mvee_regular_simplex_is_circumsphere():
    V = helmert(4, full=False).T            # 4 points, regular simplex in R^3
    V = V @ special_ortho_group.rvs(3, random_state=1) + [0.3, -2.0, 5.0]
    E = mvee(V, eps=1e-8)
    dist = np.linalg.norm(V - E.center, axis=1)
    assert dist.max() - dist.min() <= 1e-6 * dist.max()
    np.testing.assert_allclose(E.center, V.mean(axis=0), atol=1e-6)


def test_mvee_rejects_degenerate_input():
    with pytest.raises(DegenerateInputError):
        mvee([[0, 0], [1, 1], [2, 2], [3, 3]])
    with pytest.raises(InputError):
        mvee(square().vertices, eps=0.5)


def test_mvee_contains_every_point():
    rng = np.random.default_rng(0)
    P = rng.normal(size=(40, 4)) * [1, 1e-2, 1e-4, 1e-6]
    E = mvee(P)
    assert E.level(P).max() <= 1.0 + 1e-12


def test_well_center_square():
    frame, fb = well_center(square())
    np.testing.assert_allclose(frame.translation, 0, atol=1e-6)
    np.testing.assert_allclose(frame.semi_axes, [np.sqrt(2) / 2] * 2, rtol=1e-6)


@pytest.mark.parametrize("eps", [1e-3, 1e-6])
def test_well_center_thin_rectangle(eps):
    # MVEE of the rectangle corners: x^2/2 + y^2/(2 eps^2) <= 1, then shrunk by 2
    frame, fb = well_center(box([1.0, eps]))
    np.testing.assert_allclose(frame.translation, 0, atol=1e-6 * eps)
    np.testing.assert_allclose(frame.semi_axes, np.sqrt(2) / 2 * np.array([1.0, eps]),
                               rtol=1e-6)
    np.testing.assert_allclose(np.abs(frame.rotation), np.eye(2), atol=1e-12)


def test_frame_sign_convention():
    frame, _ = well_center(thin_family("needle_simplex", 3, 1e-2, seed=4))
    for col in frame.rotation.T:
        first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert first > 0
    assert np.all(np.diff(frame.semi_axes) <= 0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(FAMILY_KINDS), st.integers(2, 5),
       st.sampled_from([1.0, 1e-2, 1e-4, 1e-6]), st.integers(0, 10**6))
def test_well_centering_containments(kind, n, eps, seed):
    frame, fb = well_center(thin_family(kind, n, eps, seed))
    outer, inner = well_centering_residuals(fb, frame.semi_axes, 200, seed)
    assert outer <= 1e-6 and inner <= 1e-6
    # semi-axis spread tracks the family's thinness within a factor 10
    spread = frame.semi_axes.min() / frame.semi_axes.max()
    assert eps / 10 <= spread <= 10 * eps


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_well_center_idempotent(n, seed):
    body = random_body(np.random.default_rng(seed), n).transformed(offset=np.full(n, 3.0))
    frame, fb = well_center(body)
    again, _ = well_center(fb)
    scale = frame.semi_axes.max()
    assert np.abs(again.translation).max() <= 1e-6 * scale
    np.testing.assert_allclose(again.semi_axes, frame.semi_axes, rtol=1e-6)


def test_rigid_motion_equivariance():
    rng = np.random.default_rng(8)
    body = random_body(rng, 3)
    Q = special_ortho_group.rvs(3, random_state=2)
    moved = body.transformed(Q, [1.0, 2.0, 3.0])
    f1, _ = well_center(body)
    f2, _ = well_center(moved)
    np.testing.assert_allclose(f2.semi_axes, f1.semi_axes, rtol=1e-6)
    np.testing.assert_allclose(f2.translation, Q @ f1.translation + [1, 2, 3], atol=1e-6)


def test_identity_frame_maps_trivially():
    frame = JohnFrame.identity([1.0, 2.0])
    x = np.array([0.3, -0.7])
    np.testing.assert_array_equal(to_frame(frame, x), x)
    np.testing.assert_array_equal(from_frame(frame, x), x)


def test_frame_round_trip():
    rng = np.random.default_rng(6)
    frame, _ = well_center(random_body(rng, 4).transformed(offset=[5, -5, 1, 0]))
    X = rng.normal(size=(100, 4)) * 10
    assert np.abs(from_frame(frame, to_frame(frame, X)) - X).max() <= 1e-12 * 10
    assert np.abs(to_frame(frame, from_frame(frame, X)) - X).max() <= 1e-12 * 10


def test_frame_validation():
    with pytest.raises(InputError):
        JohnFrame(np.zeros(2), np.array([[1.0, 0.1], [0.0, 1.0]]), np.ones(2))
    with pytest.raises(InputError):
        JohnFrame(np.zeros(2), np.eye(2), np.array([1.0, 0.0]))


def test_axis_hyperplane_to_world():
    rng = np.random.default_rng(1)
    frame, _ = well_center(random_body(rng, 3).transformed(offset=[2.0, 0.5, -1.0]))
    h = 0.8
    world = hyperplane_from_frame(frame, Hyperplane(np.array([1.0, 0, 0]), h))
    np.testing.assert_allclose(world.normal, frame.rotation[:, 0], atol=1e-15)
    point = from_frame(frame, h * np.array([1.0, 0, 0]))
    assert world.distance(point) <= 1e-12
    # every frame point of the plane lands on the world plane
    for z in rng.normal(size=(5, 2)):
        assert world.distance(from_frame(frame, np.concatenate([[h], z]))) <= 1e-12
    # the origin side is preserved
    assert world.normal @ frame.translation <= world.offset
