"""Independent checks of selected hyperplanes, naive baselines and test bodies.

Everything here measures ratios through :class:`~hypersupport.body.FacetTable`
(qhull facets) rather than the gauge LPs the selector runs on, so the two
routes cross-check each other.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import helmert

from .body import FacetTable, Hyperplane, VPolytope, supporting_hyperplane_at, ray_boundary
from .errors import DegenerateInputError, InputError, VerificationError
from .selector import Selection, make_schedule

SUPPORT_TOL = 1e-8
DEFAULT_BUDGET = 4096

ALGORITHM = "algorithm"
NAIVE_ORTHOGONAL = "naive_orthogonal"
NAIVE_RAY_SUPPORT = "naive_ray_support"
NAIVE_CLOSEST = "naive_closest"
ORACLE_BEST = "oracle_best"
STRATEGIES = (ALGORITHM, NAIVE_ORTHOGONAL, NAIVE_RAY_SUPPORT, NAIVE_CLOSEST, ORACLE_BEST)

FAMILY_KINDS = ("box", "needle_simplex", "slab_cross")
EXTRA_KINDS = ("sliver",)


@dataclass
class RatioReport:
    s: float
    ratio: float
    bound: float
    depth: int
    strategy: str
    normal: np.ndarray = field(default=None, repr=False)
    chord: float = float("nan")

    @property
    def within_bound(self) -> bool:
        return self.ratio <= self.bound * (1.0 + 1e-6)


def support_residuals(frame_body: VPolytope, plane: Hyperplane):
    """(max_v u.v - h, scale): zero overshoot and zero gap mean exact support."""
    top = float(np.max(frame_body.vertices @ plane.normal))
    return top - plane.offset, max(1.0, abs(plane.offset))


def assert_supports(frame_body: VPolytope, plane: Hyperplane, tol: float = SUPPORT_TOL):
    diff, scale = support_residuals(frame_body, plane)
    if abs(diff) > tol * scale:
        raise VerificationError(
            f"plane is not supporting: max u.v - h = {diff!r} (scale {scale!r})")


def check_bound(frame_body: VPolytope, a, y, s0: float, result: Selection,
                facets: FacetTable | None = None) -> RatioReport:
    """Recompute s, distance, chord and bound for a selection, from scratch."""
    facets = FacetTable(frame_body) if facets is None else facets
    y = np.asarray(y, dtype=float)
    plane = result.plane
    assert_supports(frame_body, plane)
    s = 1.0 - float(facets.gauge(y))
    s = min(max(s, 0.0), s0)
    schedule = make_schedule(frame_body.dim, s, s0)
    u = plane.normal
    chord = float(facets.chord(u))
    if not chord > 0:
        raise VerificationError("non-positive chord")
    dist = abs(float(u @ y) - plane.offset)
    return RatioReport(s, dist / chord, schedule.bound_factor(), result.trace.depth,
                       ALGORITHM, u, chord)


class CandidateSet:
    """Normals searched by the oracle, with support values and chords cached.

    Contains every facet normal, the LP tangent normal at each vertex and
    ``budget`` seeded uniform directions.
    """

    def __init__(self, frame_body: VPolytope, budget: int = DEFAULT_BUDGET, seed: int = 0,
                 facets: FacetTable | None = None):
        self.body = frame_body
        self.facets = FacetTable(frame_body) if facets is None else facets
        n = frame_body.dim
        rows = self.facets.rows / np.linalg.norm(self.facets.rows, axis=1)[:, None]
        tangents = []
        for v in frame_body.vertices:
            try:
                tangents.append(supporting_hyperplane_at(frame_body, v).normal)
            except InputError:   # listed point that is not extreme
                pass
        rng = np.random.default_rng(seed)
        rand = rng.normal(size=(budget, n))
        rand /= np.linalg.norm(rand, axis=1)[:, None]
        self.normals = np.vstack([rows, np.array(tangents).reshape(-1, n), rand])
        self.support = (frame_body.vertices @ self.normals.T).max(axis=0)
        self.chords = self.facets.chord(self.normals)

    def with_extra(self, normals):
        """Normals, support values and chords with ``normals`` appended."""
        extra = np.atleast_2d(np.asarray(normals, dtype=float)).reshape(-1, self.body.dim)
        if extra.size == 0:
            return self.normals, self.support, self.chords
        extra = extra / np.linalg.norm(extra, axis=1)[:, None]
        return (np.vstack([self.normals, extra]),
                np.concatenate([self.support, (self.body.vertices @ extra.T).max(axis=0)]),
                np.concatenate([self.chords, self.facets.chord(extra)]))


def _bound_for(frame_body, facets, y, s0):
    s = 1.0 - float(facets.gauge(y))
    if s0 is None:
        return s, float("nan")
    s = min(max(s, 0.0), s0)
    return s, make_schedule(frame_body.dim, s, s0).bound_factor()


def oracle_best_ratio(frame_body: VPolytope, y, directions=DEFAULT_BUDGET, s0=None,
                      extra_normals=(), seed: int = 0) -> RatioReport:
    """Smallest dist(y, P_u) / chord(u) over the candidate normals.

    ``directions`` is either a sampling budget or a prebuilt CandidateSet;
    ``extra_normals`` are searched as well (e.g. the normals other
    strategies picked on the same instance).
    """
    cands = directions if isinstance(directions, CandidateSet) else \
        CandidateSet(frame_body, int(directions), seed)
    y = np.asarray(y, dtype=float)
    U, h, chords = cands.with_extra(extra_normals)
    ratios = (h - U @ y) / chords
    best = int(np.argmin(ratios))
    s, bound = _bound_for(frame_body, cands.facets, y, s0)
    return RatioReport(s, float(ratios[best]), bound, 0, ORACLE_BEST, U[best], float(chords[best]))


def naive_strategies(frame_body: VPolytope, y, candidates: CandidateSet | None = None,
                     s0=None, ray_plane: Hyperplane | None = None, extra_normals=()):
    """Reports for the three natural choices of hyperplane.

    (i) normal along y; (ii) tangent plane where the ray through y exits;
    (iii) the candidate supporting plane nearest to y.
    """
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise InputError("y must be nonzero")
    cands = CandidateSet(frame_body) if candidates is None else candidates
    facets = cands.facets
    s, bound = _bound_for(frame_body, facets, y, s0)
    V = frame_body.vertices

    def report(u, strategy):
        h = float(np.max(V @ u))
        chord = float(facets.chord(u))
        return RatioReport(s, (h - float(u @ y)) / chord, bound, 0, strategy, u, chord)

    orth = report(y / np.linalg.norm(y), NAIVE_ORTHOGONAL)
    if ray_plane is None:
        ray_plane = supporting_hyperplane_at(frame_body, ray_boundary(frame_body, y))
    ray = report(ray_plane.normal, NAIVE_RAY_SUPPORT)
    U, h, chords = cands.with_extra(extra_normals)
    dist = h - U @ y
    j = int(np.argmin(dist))
    closest = RatioReport(s, float(dist[j] / chords[j]), bound, 0, NAIVE_CLOSEST, U[j],
                          float(chords[j]))
    return orth, ray, closest


def well_centering_residuals(frame_body: VPolytope, semi_axes, directions: int = 200,
                             seed: int = 0):
    """Worst relative excess (outer, inner) for E inside S inside n E.

    outer: how far the farthest vertex pokes out of n E, relative to n E.
    inner: max over sampled u of h_E(u) / h_S(u) - 1. Both are <= 0 for an
    exactly well-centred body.
    """
    n = frame_body.dim
    a = np.asarray(semi_axes, dtype=float)
    V = frame_body.vertices
    outer = float(np.sqrt(np.max(np.sum((V / (n * a)) ** 2, axis=1))) - 1.0)
    U = np.random.default_rng(seed).normal(size=(directions, n))
    U /= np.linalg.norm(U, axis=1)[:, None]
    h_E = np.sqrt(np.sum((U * a) ** 2, axis=1))
    h_S = (V @ U.T).max(axis=0)
    inner = float(np.max(h_E / h_S - 1.0))
    return outer, inner


def _rng_transform(V, seed):
    if seed is None:
        return V
    rng = np.random.default_rng(seed)
    n = V.shape[1]
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    shift = 0.5 * rng.normal(size=n)
    return V @ Q.T + shift


def thin_family(kind: str, n: int, thinness: float, seed=None) -> VPolytope:
    """Degenerating thin bodies with John semi-axis ratio about 1 : thinness.

    box: the cube [-1, 1]^n with its last axis scaled by ``thinness``.
    needle_simplex: a simplex with a long edge from -e1 to e1 and the other
    vertices within ``thinness`` of the x^1-axis; with a seed their x^1
    positions are random, which tilts the facets.
    slab_cross: the cross-polytope with its last axis scaled by ``thinness``.
    With a seed the body is also randomly rotated and translated.
    """
    if n < 2:
        raise InputError("thin families need n >= 2")
    if not (0.0 < thinness <= 1.0):
        raise DegenerateInputError("thinness must lie in (0, 1]")
    if kind == "box":
        V = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
        V[:, -1] *= thinness
    elif kind == "needle_simplex":
        # columns of the Helmert matrix: a regular simplex in R^(n-1)
        spread = helmert(n, full=False).T[: n - 1]
        spread = spread / np.abs(spread).max()
        if seed is None:
            xs = np.zeros(n - 1)
        else:
            xs = np.random.default_rng([seed, 1]).uniform(-0.95, 0.95, size=n - 1)
        V = np.zeros((n + 1, n))
        V[0, 0], V[1, 0] = -1.0, 1.0
        V[2:, 0] = xs
        V[2:, 1:] = thinness * spread
    elif kind == "slab_cross":
        V = np.vstack([np.eye(n), -np.eye(n)])
        V[:, -1] *= thinness
    elif kind == "sliver":
        return random_sliver(n, thinness, 0 if seed is None else seed)
    else:
        raise InputError(f"unknown body kind {kind!r}")
    return VPolytope(n, _rng_transform(V, seed))


def random_sliver(n: int, thinness: float, seed: int, n_points=None) -> VPolytope:
    """Hull of Gaussian points squashed to widths spread from 1 down to ``thinness``.

    Its facets sit at generic angles to the principal axes, which is what
    drives the selector into its unfavourable branch.
    """
    if not (0.0 < thinness <= 1.0):
        raise DegenerateInputError("thinness must lie in (0, 1]")
    rng = np.random.default_rng([seed, 2])
    m = n_points or 3 * n + 4
    widths = np.geomspace(1.0, thinness, n) if n > 1 else np.ones(1)
    pts = rng.normal(size=(m, n)) * widths
    if n > 1:
        from scipy.spatial import ConvexHull
        pts = pts[np.sort(ConvexHull(pts / widths).vertices)]
    return VPolytope(n, _rng_transform(pts, seed))


def regular_polygon(m: int = 64, radius: float = 1.0) -> VPolytope:
    t = 2 * np.pi * np.arange(m) / m
    return VPolytope(2, radius * np.column_stack([np.cos(t), np.sin(t)]))


def interval(a: float) -> VPolytope:
    return VPolytope(1, np.array([[-a], [a]]))
