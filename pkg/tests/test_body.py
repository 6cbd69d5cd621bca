import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bisect_gauge, box, random_body, square
from hypersupport.body import (FacetTable, Hyperplane, VPolytope, assert_origin_interior,
                               chord_diameter, contains, gauge, load_body, ray_boundary,
                               save_body, support_value, supporting_hyperplane_at)
from hypersupport.errors import DegenerateInputError, InputError
from hypersupport.verify import regular_polygon

SQRT2 = np.sqrt(2.0)


def support_conditions(body, plane, p, tol=1e-8):
    h = plane.offset
    assert abs(plane.normal @ p - h) <= tol * (1 + h)
    assert np.max(body.vertices @ plane.normal) <= h + tol * (1 + h)


# ---------------------------------------------------------------- VPolytope / Hyperplane

def test_vpolytope_validation():
    with pytest.raises(DegenerateInputError):
        VPolytope(2, [[0, 0], [1, 1], [2, 2]])        # collinear
    with pytest.raises(DegenerateInputError):
        VPolytope(2, [[0, 0], [1, 0]])                # too few points
    with pytest.raises(InputError):
        VPolytope(3, [[0, 0], [1, 0], [0, 1]])        # wrong width
    with pytest.raises(InputError):
        VPolytope(1, [[0.0], [np.nan]])
    body = square()
    with pytest.raises(ValueError):
        body.vertices[0, 0] = 3.0


def test_body_json_round_trip(tmp_path):
    body = random_body(np.random.default_rng(0), 3)
    path = tmp_path / "b.json"
    save_body(body, path)
    back = load_body(path)
    assert back.dim == 3
    np.testing.assert_array_equal(back.vertices, body.vertices)
    assert json.loads(path.read_text())["dim"] == 3
    with pytest.raises(InputError):
        VPolytope.from_json({"vertices": [[0.0]]})


def test_hyperplane_unit_normal():
    with pytest.raises(InputError):
        Hyperplane(np.array([1.0, 1.0]), 1.0)
    hp = Hyperplane.from_normal([3.0, 4.0], 10.0)
    np.testing.assert_allclose(hp.normal, [0.6, 0.8])
    assert hp.offset == pytest.approx(2.0)
    assert hp.distance([0.0, 0.0]) == pytest.approx(2.0)
    with pytest.raises(InputError):
        Hyperplane.from_normal([0.0, 0.0], 1.0)


def test_origin_interior_check():
    assert_origin_interior(square())
    with pytest.raises(InputError):
        assert_origin_interior(square().transformed(offset=[1.5, 0.0]))


# ---------------------------------------------------------------- gauge

def test_gauge_square_examples():
    assert gauge(square(), [0.5, 0.0]) == pytest.approx(0.5, abs=1e-12)
    assert gauge(square(), [0.0, 0.0]) == 0.0
    assert gauge(random_body(np.random.default_rng(1), 4), np.zeros(4)) == 0.0


def test_gauge_matches_bisection_oracle():
    rng = np.random.default_rng(7)
    body = random_body(rng, 3)
    for x in rng.normal(size=(50, 3)):
        assert gauge(body, x) == pytest.approx(bisect_gauge(body, x), rel=1e-8, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31))
def test_gauge_homogeneity_and_convexity(n, seed):
    rng = np.random.default_rng(seed)
    body = random_body(rng, n)
    x, y = rng.normal(size=(2, n))
    t = rng.uniform(0.01, 100)
    assert gauge(body, t * x) == pytest.approx(t * gauge(body, x), rel=1e-9)
    assert gauge(body, x + y) <= gauge(body, x) + gauge(body, y) + 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31))
def test_facet_table_agrees_with_lp(n, seed):
    rng = np.random.default_rng(seed)
    body = random_body(rng, n)
    ft = FacetTable(body)
    X = rng.normal(size=(10, n))
    lp = np.array([gauge(body, x) for x in X])
    np.testing.assert_allclose(ft.gauge(X), lp, rtol=1e-9)


def test_facet_table_interval_and_bad_origin():
    ft = FacetTable(VPolytope(1, [[-2.0], [3.0]]))
    np.testing.assert_allclose(ft.chord(np.array([[1.0], [-1.0]])), [5.0, 5.0])
    with pytest.raises(InputError):
        FacetTable(square().transformed(offset=[2.0, 0.0]))


# ---------------------------------------------------------------- support / ray

def test_support_value_examples():
    assert support_value(square(), [1.0, 0.0]) == 1.0
    assert support_value(square(), np.array([1.0, 1.0]) / SQRT2) == pytest.approx(SQRT2)
    with pytest.raises(InputError):
        support_value(square(), [0.0, 0.0])


def test_support_dominates_interior_points():
    rng = np.random.default_rng(11)
    body = random_body(rng, 3)
    w = rng.dirichlet(np.ones(len(body.vertices)), size=100)
    interior = w @ body.vertices
    for _ in range(10):
        u = rng.normal(size=3)
        assert np.all(support_value(body, u) >= interior @ u - 1e-12)


def test_ray_boundary_examples():
    np.testing.assert_allclose(ray_boundary(square(), [0.25, 0.0]), [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(ray_boundary(square(), [0.3, 0.3]), [1.0, 1.0], atol=1e-12)
    with pytest.raises(InputError):
        ray_boundary(square(), [0.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31))
def test_ray_boundary_has_unit_gauge_and_is_contained(n, seed):
    rng = np.random.default_rng(seed)
    body = random_body(rng, n)
    p = ray_boundary(body, rng.normal(size=n))
    assert abs(gauge(body, p) - 1.0) <= 1e-9
    assert contains(body, p, tol=1e-8)


def test_support_gauge_duality():
    rng = np.random.default_rng(5)
    body = random_body(rng, 4)
    for u in rng.normal(size=(30, 4)):
        u /= np.linalg.norm(u)
        assert support_value(body, u) >= 1.0 / gauge(body, u) - 1e-8


# ---------------------------------------------------------------- supporting hyperplanes

def test_tangent_on_facet_interior():
    hp = supporting_hyperplane_at(square(), [1.0, 0.0])
    np.testing.assert_allclose(hp.normal, [1.0, 0.0], atol=1e-12)
    assert hp.offset == pytest.approx(1.0)


def test_tangent_at_vertex_is_any_supporting_normal():
    p = np.array([1.0, 1.0])
    hp = supporting_hyperplane_at(square(), p)
    assert np.all(hp.normal >= -1e-12)
    support_conditions(square(), hp, p)


def test_tangent_rejects_non_boundary_point():
    with pytest.raises(InputError):
        supporting_hyperplane_at(square(), [0.5, 0.0])
    with pytest.raises(InputError):
        supporting_hyperplane_at(square(), [0.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31))
def test_tangent_support_conditions(n, seed):
    rng = np.random.default_rng(seed)
    body = random_body(rng, n)
    p = ray_boundary(body, rng.normal(size=n))
    support_conditions(body, supporting_hyperplane_at(body, p), p)


# ---------------------------------------------------------------- chords and membership

def test_chord_examples():
    assert chord_diameter(box([2.0, 3.0]), [1.0, 0.0]) == pytest.approx(4.0)
    gon = regular_polygon(64)
    rng = np.random.default_rng(2)
    for t in rng.uniform(0, 2 * np.pi, size=20):
        u = np.array([np.cos(t), np.sin(t)])
        assert chord_diameter(gon, u) == pytest.approx(2.0, rel=5e-3)


def test_chord_matches_bisection_extent():
    rng = np.random.default_rng(9)
    body = random_body(rng, 3)
    for _ in range(5):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        extent = 1.0 / bisect_gauge(body, u) + 1.0 / bisect_gauge(body, -u)
        assert chord_diameter(body, u) == pytest.approx(extent, rel=1e-8)
        assert chord_diameter(body, u) == chord_diameter(body, -u)


def test_contains_examples():
    assert contains(square(), [0.0, 0.0])
    assert not contains(square(), [2.0, 0.0])
    rng = np.random.default_rng(4)
    body = random_body(rng, 3)
    for d in rng.normal(size=(10, 3)):
        assert contains(body, ray_boundary(body, d), tol=1e-8)
