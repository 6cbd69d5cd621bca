"""Small dense numeric kernel: an equality-form LP solver and a Jacobi eigensolver.

Problem sizes in this package are tiny (a handful of rows, at most a few
hundred columns), so both routines favour determinism over speed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
PIVOT_TOL = 1e-8


@dataclass(frozen=True)
class LinearProgram:
    """min c.x  s.t.  A x = b  (and x >= 0 when ``nonneg``)."""

    objective: np.ndarray
    equality_matrix: np.ndarray
    equality_rhs: np.ndarray
    nonneg: bool = True
    tolerance: float = 1e-10

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        A = np.asarray(self.equality_matrix, dtype=float)
        b = np.asarray(self.equality_rhs, dtype=float).reshape(-1)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        if A.ndim != 2 or A.shape[0] != b.size or A.shape[1] != c.size:
            raise InputError(
                f"LP dimensions disagree: A {A.shape}, b {b.size}, c {c.size}")
        if not self.tolerance > 0:
            raise InputError("LP tolerance must be positive")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise InputError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "equality_matrix", A)
        object.__setattr__(self, "equality_rhs", b)


@dataclass
class LPResult:
    status: str
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    value: float = float("nan")


def _simplex(A, b, cost, basis, enterable, tol, max_iter, refactor=32):
    """Revised simplex on a feasible starting basis.

    Dantzig pricing while pivots make progress; after a run of degenerate
    pivots it switches to Bland's rule for the rest of the solve, which rules
    out cycling. The basis inverse is updated in product form and refactored
    periodically. Mutates ``basis`` in place. Returns (status, x_B, y).
    """
    m, N = A.shape
    nonbasic = np.ones(N, dtype=bool)
    nonbasic[basis] = False
    Binv = np.linalg.inv(A[:, basis])
    xB = Binv @ b
    bland = False
    stalls = 0
    # columns whose only positive pivots are at noise level; skipped until
    # the basis changes
    blocked = np.zeros(N, dtype=bool)
    since_refactor = 0
    for _ in range(max_iter):
        y = cost[basis] @ Binv
        reduced = cost - y @ A
        mask = (reduced < -tol) & nonbasic & enterable
        if not (mask & ~blocked).any():
            if since_refactor:
                Binv = np.linalg.inv(A[:, basis])
                xB = Binv @ b
                y = cost[basis] @ Binv
            return OPTIMAL, xB, y
        mask &= ~blocked
        if bland:
            q = int(np.argmax(mask))
        else:
            q = int(np.argmin(np.where(mask, reduced, np.inf)))
        w = Binv @ A[:, q]
        # pivots below this are rounding noise and would make B near-singular
        pos = np.flatnonzero(w > max(tol, PIVOT_TOL * np.abs(w).max()))
        if pos.size == 0:
            if np.any(w > tol):
                blocked[q] = True
                continue
            return UNBOUNDED, xB, y
        blocked[:] = False
        ratios = np.maximum(xB[pos], 0.0) / w[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * (1.0 + abs(best))]
        # leave with the smallest variable index among ties
        r = int(min(ties, key=lambda i: basis[i]))
        if best <= tol:
            stalls += 1
            if stalls > m:
                bland = True
        else:
            stalls = 0
        nonbasic[basis[r]] = True
        nonbasic[q] = False
        basis[r] = q
        since_refactor += 1
        if since_refactor >= refactor:
            Binv = np.linalg.inv(A[:, basis])
            since_refactor = 0
        else:
            pivot = Binv[r] / w[r]
            Binv -= np.outer(w, pivot)
            Binv[r] = pivot
        xB = Binv @ b
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` with a two-phase dense revised simplex.

    Infeasible and unbounded problems are reported through ``status``. The
    returned dual ``y`` satisfies ``A.T @ y <= c`` (within tolerance) and
    ``b @ y == value`` at optimality.
    """
    if not lp.nonneg:
        # free variables: split x = x+ - x-
        A0 = lp.equality_matrix
        split = LinearProgram(np.concatenate([lp.objective, -lp.objective]),
                              np.hstack([A0, -A0]), lp.equality_rhs, True, lp.tolerance)
        res = solve_lp(split)
        if res.status == OPTIMAL:
            N = lp.objective.size
            res.primal = res.primal[:N] - res.primal[N:]
        return res

    tol = lp.tolerance
    c = lp.objective
    A = lp.equality_matrix.copy()
    b = lp.equality_rhs.copy()
    m, N = A.shape
    if m == 0:
        if np.any(c < -tol):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, np.zeros(N), np.zeros(0), 0.0)

    # Equilibrate rows and make the right-hand side nonnegative.
    row_scale = np.abs(A).max(axis=1)
    zero_rows = row_scale == 0
    if np.any(np.abs(b[zero_rows]) > tol):
        return LPResult(INFEASIBLE)
    row_scale[zero_rows] = 1.0
    row_scale = row_scale * np.where(b < 0, -1.0, 1.0)
    A /= row_scale[:, None]
    b /= row_scale

    full = np.hstack([A, np.eye(m)])
    basis = list(range(N, N + m))
    max_iter = 50 * (N + m) + 100
    everything = np.ones(N + m, dtype=bool)
    originals = np.concatenate([np.ones(N, dtype=bool), np.zeros(m, dtype=bool)])

    phase1_cost = np.concatenate([np.zeros(N), np.ones(m)])
    status, xB, _ = _simplex(full, b, phase1_cost, basis, everything, tol, max_iter)
    infeas = float(phase1_cost[basis] @ xB)
    if infeas > tol * (1.0 + np.abs(b).max()):
        return LPResult(INFEASIBLE)

    # Pivot zero-level artificials out of the basis where possible.
    for r in range(m):
        if basis[r] < N:
            continue
        row = np.linalg.inv(full[:, basis])[r] @ A
        in_basis = set(basis)
        for j in range(N):
            if j not in in_basis and abs(row[j]) > 1e3 * tol:
                basis[r] = j
                break

    phase2_cost = np.concatenate([c, np.zeros(m)])
    status, xB, y = _simplex(full, b, phase2_cost, basis, originals, tol, max_iter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = np.zeros(N + m)
    x[basis] = np.maximum(xB, 0.0)
    primal = x[:N]
    dual = y / row_scale
    return LPResult(OPTIMAL, primal, dual, float(c @ primal))


@dataclass(frozen=True)
class SymMatrix:
    order: int
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.shape != (self.order, self.order) or self.order < 1:
            raise InputError(f"expected a {self.order}x{self.order} matrix, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            raise InputError("matrix is not symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_array(cls, a) -> "SymMatrix":
        """Symmetrize ``a`` (average with its transpose) and wrap it."""
        a = np.asarray(a, dtype=float)
        if not np.all(np.isfinite(a)):
            raise InputError("matrix entries must be finite")
        return cls(a.shape[0], 0.5 * (a + a.T))


def sym_eigen(m: SymMatrix, threshold: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in descending order
    and eigenvectors as the columns of an orthonormal matrix.

    An off-diagonal entry is treated as converged once
    ``|a_pq| <= threshold * sqrt(|a_pp a_qq|)``. On graded positive definite
    matrices (D A D with A well conditioned) this keeps small eigenvalues
    accurate to high relative precision, not just relative to the norm.
    """
    a = np.array(m.entries, dtype=float)
    n = m.order
    if n > 16:
        raise InputError("sym_eigen is meant for orders <= 16")
    V = np.eye(n)
    floor = 1e-300 + 1e-30 * np.abs(a).max()
    if floor == 1e-300:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= max(threshold * np.sqrt(abs(a[p, p] * a[q, q])), floor):
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            break
    else:
        raise RuntimeError("Jacobi sweeps did not converge")
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]
