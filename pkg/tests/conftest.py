import numpy as np
import pytest

from hypersupport.body import VPolytope, contains


def square(half=1.0):
    return VPolytope(2, half * np.array([[1.0, 1], [1, -1], [-1, 1], [-1, -1]]))


def box(half_widths):
    w = np.asarray(half_widths, dtype=float)
    corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * w.size, indexing="ij")).reshape(w.size, -1).T
    return VPolytope(w.size, corners * w)


def bevelled_slab(eps=1e-4, bevel=1e-3):
    """Thin hexagon (+-1, +-eps) with short steep facets at both tips.

    The tip facets are tilted far more than the long ones, so the tangent
    there is unfavourable for the box test at small s.
    """
    V = np.array([[1, 0], [1 - bevel, eps], [-1 + bevel, eps],
                  [-1, 0], [-1 + bevel, -eps], [1 - bevel, -eps]])
    return VPolytope(2, V)


def random_body(rng, n, m=None):
    """Hull of Gaussian points with the origin pushed well inside."""
    m = m or 3 * n + 3
    P = rng.normal(size=(m, n))
    P = np.vstack([P, np.eye(n), -np.eye(n)])
    return VPolytope(n, P)


def bisect_gauge(body, x, iters=200):
    """Gauge by bisection on t: x / t lies in S exactly when gauge(x) <= t."""
    lo, hi = 0.0, 1.0
    while not contains(body, x / hi, tol=1e-12):
        lo, hi = hi, 2 * hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if contains(body, x / mid, tol=1e-12):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    return hi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
