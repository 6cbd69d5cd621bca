"""Well-centring: an inner ellipsoid E with E inside S inside n*E.

The route is the minimum-volume enclosing ellipsoid (MVEE) of the vertices,
shrunk about its centre by the factor n. The MVEE iteration runs on
whitened points, since the ellipsoid is affine-equivariant and thin bodies
are badly conditioned in their own coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import Hyperplane, VPolytope
from .errors import DegenerateInputError, InputError
from .numkit import SymMatrix, sym_eigen


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """{x : (x - center)^T shape (x - center) <= 1}.

    ``axes`` (columns) and ``radii`` are the principal directions and
    semi-axis lengths in descending order, computed without inverting
    ``shape`` so that very flat ellipsoids keep their thin radii accurate.
    """

    center: np.ndarray
    shape: SymMatrix
    axes: np.ndarray
    radii: np.ndarray
    gap: float = 0.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.radii <= 0):
            raise InputError("ellipsoid shape must be positive definite")

    @property
    def dim(self) -> int:
        return self.center.size

    def level(self, x) -> np.ndarray:
        """(x - c)^T Q (x - c), evaluated through the principal frame."""
        z = (np.atleast_2d(x) - self.center) @ self.axes / self.radii
        return np.sum(z * z, axis=-1)


@dataclass(frozen=True, eq=False)
class JohnFrame:
    """World <-> frame map: x_frame = rotation^T (x_world - translation)."""

    translation: np.ndarray
    rotation: np.ndarray
    semi_axes: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        if np.abs(R.T @ R - np.eye(R.shape[0])).max() > 1e-10:
            raise InputError("frame rotation is not orthonormal")
        if np.any(np.asarray(self.semi_axes) <= 0):
            raise InputError("semi-axes must be positive")

    @property
    def dim(self) -> int:
        return self.translation.size

    @classmethod
    def identity(cls, semi_axes) -> "JohnFrame":
        a = np.asarray(semi_axes, dtype=float)
        return cls(np.zeros(a.size), np.eye(a.size), a)


def _khachiyan(Z, eps, max_iter=100_000):
    """Todd-Yildirim (Khachiyan with away steps) on lifted points.

    Returns the barycentric weights and the final optimality gap
    max(kappa_max / (d+1) - 1, 1 - kappa_min_active / (d+1)).
    """
    m, d = Z.shape
    Q = np.vstack([Z.T, np.ones(m)])
    u = np.full(m, 1.0 / m)
    lifted = d + 1
    gap = np.inf
    for _ in range(max_iter):
        X = (Q * u) @ Q.T
        kappa = np.sum(Q * np.linalg.solve(X, Q), axis=0)
        j = int(np.argmax(kappa))
        active = u > 0
        i = int(np.flatnonzero(active)[np.argmin(kappa[active])])
        up = kappa[j] / lifted - 1.0
        down = 1.0 - kappa[i] / lifted
        gap = max(up, down)
        if gap <= eps:
            break
        if up >= down:
            step = (kappa[j] - lifted) / (lifted * (kappa[j] - 1.0))
            u *= 1.0 - step
            u[j] += step
        else:
            step = min((lifted - kappa[i]) / (lifted * (kappa[i] - 1.0)), u[i] / (1.0 - u[i]))
            u *= 1.0 + step
            u[i] -= step
            u[u < 0] = 0.0
    return u, gap


def mvee(points, eps: float = 1e-7) -> Ellipsoid:
    """Minimum-volume ellipsoid enclosing ``points`` (rows).

    The iterate is stopped at optimality gap ``eps`` and then inflated just
    enough that every point is contained.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m, d = P.shape
    if not (0 < eps <= 0.1):
        raise InputError("eps must lie in (0, 0.1]")
    if m < d + 1:
        raise DegenerateInputError("need at least d + 1 points")
    mean = P.mean(axis=0)
    C = P - mean
    _, sv, Vt = np.linalg.svd(C, full_matrices=False)
    if sv.size < d or sv[-1] <= 1e-13 * sv[0]:
        raise DegenerateInputError("points are not full-dimensional")
    L = Vt.T * (sv / np.sqrt(m))              # x = mean + L z
    Z = C @ Vt.T / (sv / np.sqrt(m))

    u, gap = _khachiyan(Z, eps)
    cz = u @ Z
    Zc = Z - cz
    cov_z = (Zc.T * u) @ Zc                   # shape_z^{-1} = d * cov_z
    # world radii^2 are the eigenvalues of d * L cov_z L^T = V (D K D) V^T,
    # with D = diag(sv) graded and K well conditioned
    D = sv / np.sqrt(m)
    graded = d * (D[:, None] * cov_z * D[None, :])
    lam, W = sym_eigen(SymMatrix.from_array(graded))
    axes = Vt.T @ W
    radii = np.sqrt(lam)
    center = mean + L @ cz
    # inflate so that every point is inside
    z = (P - center) @ axes / radii
    worst = float(np.max(np.sum(z * z, axis=1)))
    if worst > 1.0:
        radii = radii * np.sqrt(worst)
    shape = (axes / radii**2) @ axes.T
    return Ellipsoid(center, SymMatrix.from_array(shape), axes, radii, gap, u)


def _sign_fix(R):
    R = R.copy()
    for j in range(R.shape[1]):
        col = R[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            R[:, j] = -col
    return R


def well_center(body: VPolytope, eps: float = 1e-7):
    """Return ``(frame, frame_body)`` with E_a inside frame_body inside n*E_a.

    E_a is the axis-aligned ellipsoid with semi-axes ``frame.semi_axes``,
    which is the vertex MVEE shrunk about its centre by the dimension.
    """
    E = mvee(body.vertices, eps)
    n = body.dim
    R = _sign_fix(E.axes)
    frame = JohnFrame(E.center.copy(), R, E.radii / n)
    return frame, VPolytope(n, (body.vertices - E.center) @ R)


def to_frame(frame: JohnFrame, x_world) -> np.ndarray:
    return (np.asarray(x_world, dtype=float) - frame.translation) @ frame.rotation


def from_frame(frame: JohnFrame, x_frame) -> np.ndarray:
    return np.asarray(x_frame, dtype=float) @ frame.rotation.T + frame.translation


def hyperplane_from_frame(frame: JohnFrame, hp: Hyperplane) -> Hyperplane:
    """World image of a frame hyperplane.

    The normal keeps pointing away from the image of the frame origin, so
    the world offset is measured from the world origin and may be negative
    when the world origin lies beyond the plane.
    """
    u = frame.rotation @ hp.normal
    return Hyperplane(u, hp.offset + float(u @ frame.translation))
