"""Oracles on vertex-represented convex polytopes.

Every query reduces to a small linear program over the vertex weights, so no
facet enumeration is needed. The one exception is :class:`FacetTable`, a
batch accelerator used when thousands of gauges are evaluated on one body.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, InputError
from .numkit import INFEASIBLE, OPTIMAL, LinearProgram, solve_lp

BOUNDARY_TOL = 1e-7
LP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class VPolytope:
    """Convex hull of a finite point set in R^dim."""

    dim: int
    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != self.dim or self.dim < 1:
            raise InputError(f"vertices must be an (m, {self.dim}) array, got {V.shape}")
        if V.shape[0] < self.dim + 1:
            raise DegenerateInputError("need at least dim + 1 vertices")
        if not np.all(np.isfinite(V)):
            raise InputError("vertices must be finite")
        diffs = V[1:] - V[0]
        scale = np.abs(diffs).max()
        if scale == 0 or np.linalg.matrix_rank(diffs, tol=1e-13 * scale) < self.dim:
            raise DegenerateInputError("vertices do not span the ambient dimension")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @classmethod
    def from_points(cls, points) -> "VPolytope":
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(P.shape[1], P)

    def transformed(self, matrix=None, offset=None) -> "VPolytope":
        """Image under x -> matrix @ x + offset."""
        V = self.vertices
        if matrix is not None:
            V = V @ np.asarray(matrix, dtype=float).T
        if offset is not None:
            V = V + np.asarray(offset, dtype=float)
        return VPolytope(self.dim, V)

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": self.vertices.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "VPolytope":
        try:
            dim = int(data["dim"])
            verts = data["vertices"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed body object: {exc}") from exc
        return cls(dim, np.asarray(verts, dtype=float))


def load_body(path) -> VPolytope:
    with open(path) as fh:
        return VPolytope.from_json(json.load(fh))


def save_body(body: VPolytope, path) -> None:
    Path(path).write_text(json.dumps(body.to_json()))


@dataclass(frozen=True)
class Hyperplane:
    """{x : normal . x = offset}; the origin side is normal . x <= offset.

    ``offset >= 0`` whenever the origin lies on the closed inner side, which
    is always the case for hyperplanes in a well-centred frame.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        u = np.array(self.normal, dtype=float).reshape(-1)
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise InputError("hyperplane normal must be a unit vector")
        u.setflags(write=False)
        object.__setattr__(self, "normal", u)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_normal(cls, u, h) -> "Hyperplane":
        """Normalize (u, h) so that the normal has unit length."""
        u = np.asarray(u, dtype=float)
        norm = np.linalg.norm(u)
        if norm == 0:
            raise InputError("zero hyperplane normal")
        return cls(u / norm, h / norm)

    @property
    def dim(self) -> int:
        return self.normal.size

    def distance(self, x) -> float:
        return abs(float(self.normal @ np.asarray(x, dtype=float)) - self.offset)

    def to_json(self) -> dict:
        return {"normal": self.normal.tolist(), "offset": self.offset}


def _gauge_lp(body: VPolytope, x):
    V = body.vertices
    lp = LinearProgram(np.ones(V.shape[0]), V.T, np.asarray(x, dtype=float), True, LP_TOL)
    return solve_lp(lp)


def gauge(body: VPolytope, x) -> float:
    """Minkowski gauge min{t >= 0 : x in t*S}; the origin must be interior."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return 0.0
    res = _gauge_lp(body, x)
    if res.status != OPTIMAL:
        raise RuntimeError(f"gauge LP {res.status}: origin is not interior to the body")
    return res.value


def assert_origin_interior(body: VPolytope) -> None:
    """Raise unless the origin is an interior point.

    The cone over the vertices is all of R^n exactly when every signed
    coordinate direction has a finite gauge.
    """
    for i in range(body.dim):
        for sgn in (1.0, -1.0):
            e = np.zeros(body.dim)
            e[i] = sgn
            if _gauge_lp(body, e).status != OPTIMAL:
                raise InputError("origin is not an interior point of the body")


def support_value(body: VPolytope, u) -> float:
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise InputError("support direction must be nonzero")
    return float(np.max(body.vertices @ u))


def ray_boundary(body: VPolytope, y) -> np.ndarray:
    """Intersection of the half line from the origin through ``y`` with the boundary."""
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise InputError("ray direction must be nonzero")
    return y / gauge(body, y)


def supporting_hyperplane_at(body: VPolytope, p) -> Hyperplane:
    """A tangent hyperplane at the boundary point ``p``.

    The normal is read off the optimal dual z of the gauge LP at p: z.v <= 1
    on every vertex and z.p = 1, so {z.x = 1} supports the body at p.
    """
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        raise InputError("origin is not a boundary point")
    res = _gauge_lp(body, p)
    if res.status != OPTIMAL:
        raise RuntimeError(f"gauge LP {res.status}: origin is not interior to the body")
    if abs(res.value - 1.0) > BOUNDARY_TOL:
        raise InputError(f"point is not on the boundary (gauge {res.value!r})")
    z = res.dual
    norm = np.linalg.norm(z)
    u = z / norm
    return Hyperplane(u, support_value(body, u))


def chord_diameter(body: VPolytope, u) -> float:
    """Length of the chord of the body along the line through the origin with direction u."""
    u = np.asarray(u, dtype=float)
    return 1.0 / gauge(body, u) + 1.0 / gauge(body, -u)


def contains(body: VPolytope, x, tol: float = 1e-9) -> bool:
    """Convex-combination feasibility of ``x`` (sum of weights one)."""
    V = body.vertices
    x = np.asarray(x, dtype=float)
    A = np.vstack([V.T, np.ones(V.shape[0])])
    b = np.concatenate([x, [1.0]])
    res = solve_lp(LinearProgram(np.zeros(V.shape[0]), A, b, True, tol))
    return res.status != INFEASIBLE


class FacetTable:
    """Facet inequalities g_j . x <= 1 of a body with interior origin.

    Built once with qhull in coordinates rescaled by the bounding box, so
    very thin bodies stay well conditioned. ``gauge`` then evaluates many
    points at once as max_j g_j . x.
    """

    def __init__(self, body: VPolytope):
        V = body.vertices
        self.dim = body.dim
        if body.dim == 1:
            hi, lo = V.max(), V.min()
            if not (lo < 0 < hi):
                raise InputError("origin is not an interior point of the body")
            self.rows = np.array([[1.0 / hi], [1.0 / lo]])
            return
        from scipy.spatial import ConvexHull

        scale = np.abs(V).max(axis=0)
        hull = ConvexHull(V / scale)
        normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
        if np.any(offsets >= 0):
            raise InputError("origin is not an interior point of the body")
        self.rows = (normals / -offsets[:, None]) / scale

    def gauge(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.maximum((X @ self.rows.T).max(axis=-1), 0.0)

    def chord(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        return 1.0 / self.gauge(U) + 1.0 / self.gauge(-U)
