"""Recursive selection of a supporting hyperplane close to a near-boundary point.

Coordinates are those of a well-centred frame: the inner ellipsoid is
axis-aligned with semi-axes ``a`` and the body lies in the box |x^i| <= n a^i.
The recursion works on a shrinking set of "live" coordinates; a signed
permutation records how the live coordinates map back onto frame axes.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .body import (FacetTable, Hyperplane, VPolytope, chord_diameter, gauge,
                   supporting_hyperplane_at, support_value)
from .errors import InputError, InvariantViolation

ABC_TOL = 1e-8
PERTURB_ANGLE = 1e-10
DEGENERATE = 1e-12


@dataclass(frozen=True)
class Schedule:
    n: int
    s: float
    s0: float
    c0: float
    c_theorem: float

    def gamma(self, i: int) -> float:
        return self.s ** (1.0 / 2**i)

    def delta(self, i: int) -> float:
        return (2 * i - 1) * self.s ** (1.0 / 2 ** (i - 1))

    def bound_factor(self) -> float:
        """c(n, s0) * s^(1/2^(n-1)), the right-hand side per unit chord."""
        return self.c_theorem * self.s ** (1.0 / 2 ** (self.n - 1))


def make_schedule(n: int, s: float, s0: float) -> Schedule:
    if n < 1:
        raise InputError("dimension must be positive")
    if not (0.0 < s0 < 1.0):
        raise InputError("s0 must lie in (0, 1)")
    if not (0.0 <= s <= s0):
        raise InputError(f"s = {s!r} outside [0, s0 = {s0!r}]")
    root = s0 ** (1.0 / 2**n)
    c0 = (1.0 + root) / (1.0 - root)
    c_theorem = n**1.5 * (n - 0.5) * c0 ** (n - 1)
    return Schedule(n, float(s), float(s0), c0, c_theorem)


@dataclass(frozen=True)
class BoxK:
    """Centred box R_k, given by its half-widths along the live coordinates."""

    k: int
    half_widths: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.half_widths, dtype=float)
        if w.size != self.k or np.any(w <= 0):
            raise InputError("box half-widths must be positive, one per coordinate")
        object.__setattr__(self, "half_widths", w)


def box_halfwidths(a, n: int, k: int, c0: float, axes=None) -> BoxK:
    """Half-widths c0^(n-k) * n * a^i of R_k over the frame axes ``axes``."""
    a = np.asarray(a, dtype=float)
    axes = list(range(k)) if axes is None else list(axes)
    return BoxK(k, c0 ** (n - k) * n * a[axes])


def favorable_ratio(plane: Hyperplane, box: BoxK) -> float:
    """diam(P^perp & R_k) / (2 dist(0, P)) for a hyperplane with positive offset."""
    if not plane.offset > 0:
        raise InputError("favorable_ratio needs a hyperplane off the origin")
    u = np.abs(plane.normal)
    with np.errstate(divide="ignore"):
        reach = np.where(u > 0, box.half_widths / u, np.inf)
    return float(reach.min() / plane.offset)


@dataclass(frozen=True)
class RecursionState:
    """Live configuration at dimension k.

    ``axes[i]`` and ``signs[i]`` say that live coordinate i equals
    ``signs[i] * x^axes[i]`` in the frame.
    """

    k: int
    p: np.ndarray
    plane: Hyperplane
    y: np.ndarray
    box: BoxK
    axes: tuple
    signs: tuple

    def lift_normal(self, n: int, u=None) -> np.ndarray:
        u = self.plane.normal if u is None else u
        U = np.zeros(n)
        U[list(self.axes)] = np.asarray(self.signs) * u
        return U


@dataclass
class StepRecord:
    k: int
    case: str
    favorable: float
    gamma: float
    r_k: list | None = None
    r_plus_k: list | None = None
    face_index: int | None = None
    q_plus: list | None = None
    q_zero: list | None = None
    q_minus: list | None = None
    l_k_params: list | None = None
    lambda_diag: float | None = None
    abc_results: dict = field(default_factory=dict)
    perturbed: bool = False


@dataclass
class SelectionTrace:
    n: int
    s: float
    s0: float
    steps: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    # tangent plane at the ray's boundary point, where every run starts
    initial_plane: Hyperplane | None = None

    @property
    def depth(self) -> int:
        return sum(1 for st in self.steps if st.case == "II")

    @property
    def perturbed(self) -> bool:
        return any(st.perturbed for st in self.steps)

    @property
    def case_terminated(self) -> str:
        return self.steps[-1].case if self.steps else ""

    def to_json(self) -> str:
        initial = None if self.initial_plane is None else self.initial_plane.to_json()
        data = {"n": self.n, "s": self.s, "s0": self.s0, "initial_plane": initial,
                "steps": [asdict(st) for st in self.steps], "final": self.final}
        return json.dumps(data, indent=1, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Hyperplane):
        return obj.to_json()
    raise TypeError(f"not serializable: {type(obj)!r}")


@dataclass
class Selection:
    plane: Hyperplane
    trace: SelectionTrace


def check_abc(state: RecursionState, schedule: Schedule, frame_body: VPolytope,
              tol: float = ABC_TOL) -> dict:
    """Evaluate conditions A_k, B_k, C_k; returns flags and residuals."""
    k, n = state.k, schedule.n
    u, h = state.plane.normal, state.plane.offset
    p, y = state.p, state.y
    scale = max(1.0, h, float(np.linalg.norm(p)))
    on_plane = abs(float(u @ p) - h)
    t = float(y @ p) / float(p @ p)
    off_segment = float(np.linalg.norm(y - t * p))
    box_excess = float(np.max(np.abs(p) - state.box.half_widths))
    a_ok = (on_plane <= tol * scale and off_segment <= tol * scale
            and -tol <= t <= 1.0 + tol and box_excess <= tol * scale)
    b_ratio = abs(h - float(u @ y)) / h
    b_limit = schedule.delta(n - k + 1)
    b_ok = b_ratio <= b_limit + tol
    overshoot = float(np.max(frame_body.vertices @ state.lift_normal(n))) - h
    c_ok = overshoot <= tol * scale
    return {"A": bool(a_ok), "B": bool(b_ok), "C": bool(c_ok),
            "on_plane": on_plane, "segment_t": t, "off_segment": off_segment,
            "box_excess": box_excess, "b_ratio": b_ratio, "b_limit": b_limit,
            "c_overshoot": overshoot}


def _require_abc(state, schedule, frame_body, record, trace):
    res = check_abc(state, schedule, frame_body)
    record.abc_results = res
    if not (res["A"] and res["B"] and res["C"]):
        failed = "".join(c for c in "ABC" if not res[c])
        raise InvariantViolation(
            f"condition(s) {failed} failed at k={state.k}: {res}", trace)
    return res


def initial_step(frame_body: VPolytope, a, y, schedule: Schedule, trace=None):
    """Start the recursion at k = n.

    Returns ``(state, None)`` when the recursion must continue or
    ``(None, plane)`` when the tangent plane at the ray's boundary point is
    already good enough.
    """
    y = np.asarray(y, dtype=float)
    n = schedule.n
    if not np.any(y):
        raise InputError("y must be nonzero")
    g = gauge(frame_body, y)
    p = y / g
    plane = supporting_hyperplane_at(frame_body, p)
    if trace is not None:
        trace.initial_plane = plane
    h = plane.offset
    ratio = abs(h - float(plane.normal @ y)) / h
    if abs(ratio - (1.0 - g)) > 1e-8:
        raise InvariantViolation(
            f"dist(y,P_n)/dist(0,P_n) = {ratio!r} differs from s = {1.0 - g!r}", trace)
    box = box_halfwidths(a, n, n, schedule.c0)
    fav = favorable_ratio(plane, box)
    gamma = schedule.gamma(1)
    if fav >= gamma:
        if trace is not None:
            trace.steps.append(StepRecord(n, "I", fav, gamma))
        return None, plane
    state = RecursionState(n, p, plane, y, box, tuple(range(n)), (1.0,) * n)
    check = check_abc(state, schedule, frame_body)
    if not (check["A"] and check["B"] and check["C"]):
        raise InvariantViolation(f"initial configuration fails A/B/C: {check}", trace)
    return state, None


def _rotate_live(vectors, k, angle):
    """Rotate in the plane of live coordinates 1 and k."""
    c, s = math.cos(angle), math.sin(angle)
    out = []
    for v in vectors:
        v = v.copy()
        v0, vk = v[0], v[k - 1]
        v[0] = c * v0 - s * vk
        v[k - 1] = s * v0 + c * vk
        out.append(v)
    return out


def descend_step(state: RecursionState, schedule: Schedule, frame_body: VPolytope,
                 trace=None, check: bool = True):
    """One level of the recursion.

    Returns ``(None, record)`` when the favourable case holds at this level,
    otherwise ``(next_state, record)`` with the configuration at k - 1.
    """
    k, n = state.k, schedule.n
    if k < 2:
        raise InputError("descend_step needs k >= 2")
    gamma = schedule.gamma(n - k + 1)
    fav = favorable_ratio(state.plane, state.box)
    if fav >= gamma:
        record = StepRecord(k, "I", fav, gamma)
        if trace is not None:
            trace.steps.append(record)
        return None, record

    record = StepRecord(k, "II", fav, gamma)
    if trace is not None:
        trace.steps.append(record)
    u, h = state.plane.normal, state.plane.offset
    w = state.box.half_widths
    r = h * u
    exits = np.abs(r) / w
    j = int(np.argmax(exits))
    if check and not exits[j] > 1.0:
        raise InvariantViolation(f"closest point r_k lies inside R_k at k={k}", trace)

    # move the exit face to the last live coordinate, on its positive side
    order = [i for i in range(k) if i != j] + [j]
    flip = np.ones(k)
    flip[j] = 1.0 if r[j] >= 0 else -1.0
    u = (u * flip)[order]
    p = (state.p * flip)[order]
    y = (state.y * flip)[order]
    w = w[order]
    axes = tuple(state.axes[i] for i in order)
    signs = tuple(state.signs[i] * flip[i] for i in order)
    b = w[-1]

    scale = max(1.0, h, float(np.linalg.norm(p)))
    if (np.linalg.norm(u[:-1]) < DEGENERATE or np.linalg.norm(p[:-1]) < DEGENERATE * scale
            or float(u[:-1] @ p[:-1]) < DEGENERATE * scale):
        u, p, y = _rotate_live([u, p, y], k, PERTURB_ANGLE)
        u = u / np.linalg.norm(u)
        h = float(u @ p)
        record.perturbed = True

    r = h * u
    record.face_index = int(state.axes[j])
    record.r_k = r.tolist()
    record.r_plus_k = (r * float(np.min(w / np.abs(np.where(r == 0, np.inf, r))))).tolist()

    u_head, u_last = u[:-1], u[-1]
    head_norm = float(np.linalg.norm(u_head))
    denom = float(u_head @ p[:-1])              # = u.p - u^k p^k

    def on_line(level):
        alpha = (h - u_last * level) / denom
        return alpha, level - alpha * p[-1]

    alpha, beta = on_line(-b)
    q_minus = alpha * p
    q_minus[-1] += beta
    record.l_k_params = [alpha, beta]
    for name, level in (("q_plus", b), ("q_zero", 0.0)):
        al, be = on_line(level)
        q = al * p
        q[-1] += be
        setattr(record, name, q.tolist())
    record.q_minus = q_minus.tolist()
    head_r = r[:-1]
    if np.any(head_r):
        record.lambda_diag = float((r @ r + b * r[-1]) / (head_r @ head_r))

    next_plane = Hyperplane(u_head / head_norm, (h + u_last * b) / head_norm)
    next_state = RecursionState(
        k - 1, alpha * p[:-1], next_plane, y[:-1],
        BoxK(k - 1, schedule.c0 * w[:-1]), axes[:-1], signs[:-1])
    if check:
        _require_abc(next_state, schedule, frame_body, record, trace)
    return next_state, record


def lift_to_support(state: RecursionState, frame_body: VPolytope, n: int,
                    tol: float = ABC_TOL) -> Hyperplane:
    """Extend P_k to R^n and slide it parallel onto the body."""
    U = state.lift_normal(n)
    h_support = support_value(frame_body, U)
    h_lifted = state.plane.offset
    if h_support > h_lifted + tol * max(1.0, h_lifted):
        raise InvariantViolation(
            f"lifted plane cuts the body: support {h_support!r} > offset {h_lifted!r}")
    return Hyperplane(U, h_support)


def measured_s(frame_body: VPolytope, y, s0: float) -> float:
    """s = 1 - gauge(y), snapped onto [0, s0] when within rounding of an end."""
    s = 1.0 - gauge(frame_body, y)
    slack = 1e-12
    if -slack <= s < 0.0:
        s = 0.0
    if s0 < s <= s0 + slack:
        s = s0
    if not (0.0 <= s <= s0):
        raise InputError(f"y has s = {s!r}, outside [0, s0 = {s0!r}]")
    return s


def select_hyperplane(frame_body: VPolytope, a, y, s0: float,
                      facets: FacetTable | None = None) -> Selection:
    """Run the full recursion and return a supporting hyperplane with its trace.

    ``facets`` optionally supplies a precomputed facet table for the final
    chord measurement; otherwise the chord is computed with gauge LPs.
    """
    n = frame_body.dim
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise InputError("y must be nonzero")
    s = measured_s(frame_body, y, s0)
    schedule = make_schedule(n, s, s0)
    trace = SelectionTrace(n, s, s0)

    state, plane = initial_step(frame_body, a, y, schedule, trace)
    while state is not None:
        if state.k == 1:
            trace.steps.append(StepRecord(1, "terminal_k1", float("nan"), float("nan")))
            break
        nxt, _ = descend_step(state, schedule, frame_body, trace)
        if nxt is None:
            break
        state = nxt
    if state is not None:
        plane = lift_to_support(state, frame_body, n)

    u = plane.normal
    chord = float(facets.chord(u)) if facets is not None else chord_diameter(frame_body, u)
    dist = plane.distance(y)
    trace.final = {"hyperplane_frame": plane.to_json(), "ratio": dist / chord,
                   "bound": schedule.bound_factor(), "depth": trace.depth,
                   "case": trace.case_terminated}
    return Selection(plane, trace)
