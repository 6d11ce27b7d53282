"""Matrix Jacobi equation integrator and trajectory analysis.

A family of Jacobi fields of dimension ``d = n - 1`` along a unit-speed
geodesic is represented by a matrix pair ``(Y(t), Y'(t))`` solving

    Y'' = -R(t) Y

in a parallel orthonormal frame, where ``R`` is a curvature field. Columns
of ``Y`` are the member fields' components; a coefficient vector ``c``
selects the member ``J(t) = Y(t) c``.

The integrator is classical fixed-step fourth-order Runge-Kutta on the
first-order system ``(Y, Yd)' = (Yd, -R(t) Y)``. Node data are stored for
every grid point; between nodes, values are recovered by cubic Hermite
interpolation (using the stored derivatives, and ``-R Y`` for the slope of
``Yd``), which keeps interpolation error at the integrator's own order.

On top of the trajectory this module provides the Riccati operator
``S = Yd Y^{-1}``, the Wronskian ``W = Y^T Yd - Yd^T Y`` (the conserved
self-adjointness certificate), detection and refinement of singular
times (instants where ``Y`` drops rank), and a central-difference residual
check of the Riccati equation ``S' + S^2 + R = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curvature import CurvatureField
from .symlin import GeneralOperator, orthonormal_columns

__all__ = [
    "FamilySpec",
    "JacobiTrajectory",
    "SingularTimeError",
    "ZeroEvent",
    "ResidualReport",
    "integrate",
    "wronskian",
    "riccati",
    "riccati_series",
    "first_singular_time",
    "evaluate_field",
    "singular_events",
    "riccati_residual",
    "default_resolvability_cap",
    "export_csv",
]

DEFAULT_STEP = 1e-3
DEFAULT_TOL_SING = 1e-8
DEFAULT_TOL_ZERO = 1e-7


class SingularTimeError(ValueError):
    """Raised when the Riccati operator is requested at a time where the
    family's value matrix is (numerically) singular."""

    def __init__(self, time: float, message: str | None = None):
        self.time = float(time)
        super().__init__(message or f"singular time at t={self.time:.12g}")


@dataclass(frozen=True)
class FamilySpec:
    """Initial data of a d-dimensional family on a window [alpha, end].

    ``y0`` and ``yd0`` hold the member fields' values and derivatives at
    ``alpha``, columnwise. The stacked matrix [y0; yd0] must have full
    column rank: the family members are linearly independent.
    """

    field: CurvatureField
    alpha: float
    end: float
    y0: np.ndarray
    yd0: np.ndarray
    label: str = ""

    def __post_init__(self):
        y0 = np.array(self.y0, dtype=float)
        yd0 = np.array(self.yd0, dtype=float)
        d = self.field.dim
        if y0.shape != (d, d) or yd0.shape != (d, d):
            raise ValueError(
                f"initial matrices must be {d}x{d} for this field, "
                f"got {y0.shape} and {yd0.shape}"
            )
        if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(yd0))):
            raise ValueError("initial matrices must be finite")
        if not self.alpha < self.end:
            raise ValueError("alpha must be strictly less than end")
        stacked = np.vstack([y0, yd0])
        svals = np.linalg.svd(stacked, compute_uv=False)
        if svals[-1] <= 1e-12 * max(svals[0], 1.0):
            raise ValueError("family members are linearly dependent (stacked rank < d)")
        y0.flags.writeable = False
        yd0.flags.writeable = False
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "yd0", yd0)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "end", float(self.end))

    @property
    def dim(self) -> int:
        return self.field.dim


@dataclass(eq=False)
class JacobiTrajectory:
    """Integrated family: node times plus (Y, Yd) matrices per node."""

    spec: FamilySpec
    step: float  # effective step (window span / node count)
    times: np.ndarray  # (N+1,)
    y: np.ndarray  # (N+1, d, d)
    yd: np.ndarray  # (N+1, d, d)

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    @property
    def alpha(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    @property
    def n_nodes(self) -> int:
        return self.times.size

    @cached_property
    def svals(self) -> np.ndarray:
        """Singular values of Y at every node, descending per node."""
        return np.linalg.svd(self.y, compute_uv=False)

    @property
    def sigma_min(self) -> np.ndarray:
        return self.svals[:, -1]

    @property
    def sigma_max(self) -> np.ndarray:
        return self.svals[:, 0]

    @cached_property
    def scale(self) -> float:
        """Largest singular value of Y over the whole grid."""
        return float(np.max(self.sigma_max))

    @cached_property
    def stacked_scale(self) -> float:
        """Largest singular value of the stacked matrix [Y; Yd] over the grid."""
        stacked = np.concatenate([self.y, self.yd], axis=1)
        return float(np.max(np.linalg.svd(stacked, compute_uv=False)))

    @cached_property
    def dets(self) -> np.ndarray:
        return np.linalg.det(self.y)

    def regular_mask(self, tol_sing: float = DEFAULT_TOL_SING) -> np.ndarray:
        """Boolean mask of nodes where Y has full rank relative to the
        grid-wide scale."""
        return self.sigma_min > tol_sing * self.scale

    def node_index(self, t: float) -> int:
        """Index of the grid node nearest to ``t`` (must lie within half a
        step of some node)."""
        j = int(round((float(t) - self.alpha) / self.step))
        if j < 0 or j >= self.n_nodes or abs(self.times[j] - t) > 0.5 * self.step + 1e-9:
            raise ValueError(f"time {t} is not aligned with the trajectory grid")
        return j

    def interpolate(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Cubic Hermite values (Y(t), Yd(t)) between nodes."""
        t = float(t)
        if not (self.alpha - 1e-12 <= t <= self.end + 1e-12):
            raise ValueError(f"time {t} outside trajectory window")
        j = int((t - self.alpha) / self.step)
        j = min(max(j, 0), self.n_nodes - 2)
        t0, t1 = self.times[j], self.times[j + 1]
        h = t1 - t0
        u = (t - t0) / h
        h00 = (1.0 + 2.0 * u) * (1.0 - u) ** 2
        h10 = u * (1.0 - u) ** 2
        h01 = u * u * (3.0 - 2.0 * u)
        h11 = u * u * (u - 1.0)
        y0, y1 = self.y[j], self.y[j + 1]
        yd0, yd1 = self.yd[j], self.yd[j + 1]
        yt = h00 * y0 + h01 * y1 + h * (h10 * yd0 + h11 * yd1)
        ydd0 = -self.spec.field.matrix(t0) @ y0
        ydd1 = -self.spec.field.matrix(t1) @ y1
        ydt = h00 * yd0 + h01 * yd1 + h * (h10 * ydd0 + h11 * ydd1)
        return yt, ydt


def _field_matrix(fld: CurvatureField, t: float) -> np.ndarray:
    try:
        return fld.matrix(t)
    except Exception as exc:
        raise ValueError(f"curvature field evaluation failed at t={t:.12g}: {exc}") from exc


def integrate(spec: FamilySpec, step: float = DEFAULT_STEP) -> JacobiTrajectory:
    """Integrate the family with classical RK4 at (approximately) the given
    step; the window is divided into round(span/step) uniform intervals."""
    if not step > 0:
        raise ValueError("step must be positive")
    span = spec.end - spec.alpha
    n_steps = max(1, int(round(span / step)))
    times = np.linspace(spec.alpha, spec.end, n_steps + 1)
    h = span / n_steps
    d = spec.dim
    y = np.empty((n_steps + 1, d, d))
    yd = np.empty((n_steps + 1, d, d))
    y[0] = spec.y0
    yd[0] = spec.yd0
    fld = spec.field
    r0 = _field_matrix(fld, times[0])
    for j in range(n_steps):
        t0, t1 = times[j], times[j + 1]
        rh = _field_matrix(fld, 0.5 * (t0 + t1))
        r1 = _field_matrix(fld, t1)
        yj, ydj = y[j], yd[j]
        k1y, k1d = ydj, -(r0 @ yj)
        y2 = yj + 0.5 * h * k1y
        k2y, k2d = ydj + 0.5 * h * k1d, -(rh @ y2)
        y3 = yj + 0.5 * h * k2y
        k3y, k3d = ydj + 0.5 * h * k2d, -(rh @ y3)
        y4 = yj + h * k3y
        k4y, k4d = ydj + h * k3d, -(r1 @ y4)
        y[j + 1] = yj + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        yd[j + 1] = ydj + (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        r0 = r1
    return JacobiTrajectory(spec=spec, step=h, times=times, y=y, yd=yd)


def wronskian(traj: JacobiTrajectory, t: float) -> GeneralOperator:
    """The antisymmetric form W(t) = Y^T Yd - Yd^T Y at the node nearest t.

    W is conserved along the flow; W = 0 certifies that the family's
    Riccati operator is self-adjoint wherever it exists.
    """
    j = traj.node_index(t)
    yj, ydj = traj.y[j], traj.yd[j]
    return GeneralOperator(yj.T @ ydj - ydj.T @ yj)


def riccati(
    traj: JacobiTrajectory, t: float, tol_sing: float = DEFAULT_TOL_SING
) -> GeneralOperator:
    """The Riccati operator S(t) = Yd(t) Y(t)^{-1} at the node nearest t.

    Raises SingularTimeError when Y(t) is singular relative to the
    trajectory scale (a conjugate/vanishing instant of the family).
    """
    j = traj.node_index(t)
    if traj.sigma_min[j] <= tol_sing * traj.scale:
        raise SingularTimeError(traj.times[j])
    s = np.linalg.solve(traj.y[j].T, traj.yd[j].T).T
    return GeneralOperator(s)


def riccati_series(
    traj: JacobiTrajectory, tol_sing: float = DEFAULT_TOL_SING
) -> tuple[np.ndarray, np.ndarray]:
    """(regular-node mask, S per node) with NaN blocks at singular nodes."""
    reg = traj.regular_mask(tol_sing)
    d = traj.dim
    s = np.full((traj.n_nodes, d, d), np.nan)
    if np.any(reg):
        yt = np.transpose(traj.y[reg], (0, 2, 1))
        ydt = np.transpose(traj.yd[reg], (0, 2, 1))
        s[reg] = np.transpose(np.linalg.solve(yt, ydt), (0, 2, 1))
    return reg, s


def evaluate_field(
    traj: JacobiTrajectory, coeffs, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Value and derivative of the member field with the given coefficient
    vector at the node nearest t: (Y(t)c, Yd(t)c)."""
    c = np.asarray(coeffs, dtype=float).ravel()
    if c.size != traj.dim:
        raise ValueError(f"coefficient vector must have length {traj.dim}")
    j = traj.node_index(t)
    return traj.y[j] @ c, traj.yd[j] @ c


def _hermite_sigma_min(traj: JacobiTrajectory, t: float) -> float:
    yt, _ = traj.interpolate(t)
    return float(np.linalg.svd(yt, compute_uv=False)[-1])


def _hermite_det(traj: JacobiTrajectory, t: float) -> float:
    yt, _ = traj.interpolate(t)
    return float(np.linalg.det(yt))


def _bisect_det(traj: JacobiTrajectory, lo: float, hi: float, iters: int = 80) -> float:
    flo = _hermite_det(traj, lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = _hermite_det(traj, mid)
        if fmid == 0.0:
            return mid
        if (flo < 0.0) == (fmid < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def first_singular_time(
    traj: JacobiTrajectory, from_time: float, tol_sing: float = DEFAULT_TOL_SING
) -> float | None:
    """Earliest time t >= from_time where Y(t) drops rank.

    A node is a direct hit when sigma_min(Y) <= tol_sing times the grid-wide
    scale; between nodes, a sign change of det(Y) brackets a crossing, which
    is refined by bisection on the Hermite interpolant. Rank drops of even
    multiplicity never flip det(Y), so dips of sigma_min between nodes are
    also resolved (through the same machinery as singular_events); without
    this, a scalar family touching zero quadratically would go unseen.
    Returns None when the rest of the window shows neither.
    """
    threshold = tol_sing * traj.scale
    j0 = int(np.searchsorted(traj.times, float(from_time) - 1e-12, side="left"))
    if j0 >= traj.n_nodes:
        return None
    dets = traj.dets
    direct: float | None = None
    for j in range(j0, traj.n_nodes):
        if traj.sigma_min[j] <= threshold:
            # refine against a neighboring det sign change if one brackets it
            if j > 0 and dets[j - 1] * dets[j] < 0.0:
                direct = _bisect_det(traj, traj.times[j - 1], traj.times[j])
            elif j + 1 < traj.n_nodes and dets[j] * dets[j + 1] < 0.0:
                direct = _bisect_det(traj, traj.times[j], traj.times[j + 1])
            else:
                direct = float(traj.times[j])
            break
        if j + 1 < traj.n_nodes and dets[j] * dets[j + 1] < 0.0:
            direct = _bisect_det(traj, traj.times[j], traj.times[j + 1])
            break
    events = singular_events(traj, t_min=float(from_time), t_max=traj.end)
    dipped = float(events[0].time) if events else None
    if direct is None:
        return dipped
    if dipped is None:
        return direct
    return min(direct, dipped)


@dataclass(frozen=True)
class ZeroEvent:
    """A refined singular instant of Y: time, residual sigma_min there, and
    the coefficient-space kernel directions (columns)."""

    time: float
    sigma: float
    kernel: np.ndarray
    node: int


def _parabola_vertex(ts, vals) -> float | None:
    """Vertex abscissa of the parabola through three points, or None when
    the fit is not convex."""
    t0, t1, t2 = ts
    v0, v1, v2 = vals
    d1 = (v1 - v0) / (t1 - t0)
    d2 = (v2 - v1) / (t2 - t1)
    curv = (d2 - d1) / (t2 - t0)
    if curv <= 0.0:
        return None
    return 0.5 * (t0 + t1 - d1 / curv)


def _kernel_at(traj: JacobiTrajectory, t: float, tol_zero: float) -> tuple[float, np.ndarray]:
    yt, _ = traj.interpolate(t)
    _, svals, vh = np.linalg.svd(yt)
    cut = tol_zero * traj.scale
    cols = vh[svals <= cut].T
    return float(svals[-1]), cols


def singular_events(
    traj: JacobiTrajectory,
    t_min: float | None = None,
    t_max: float | None = None,
    open_ends: bool = False,
    tol_zero: float = DEFAULT_TOL_ZERO,
) -> list[ZeroEvent]:
    """Locate and refine all instants in [t_min, t_max] where Y drops rank.

    Candidate nodes are local minima of sigma_min (or nodes already below
    the zero threshold). Each candidate is refined: by det-sign bisection
    when the determinant changes sign across the bracket, else by repeated
    parabola fits on sigma_min^2 over shrinking stencils. A refined
    candidate qualifies as an event when its sigma_min is at most
    ``tol_zero`` times the grid-wide scale. With ``open_ends`` set, events
    within half a step of the window ends are discarded.
    """
    lo = traj.alpha if t_min is None else float(t_min)
    hi = traj.end if t_max is None else float(t_max)
    if lo > hi:
        raise ValueError("empty window")
    pad = 1e-9 * max(1.0, abs(hi - lo))
    idx = np.nonzero((traj.times >= lo - pad) & (traj.times <= hi + pad))[0]
    if idx.size == 0:
        return []
    sig = traj.sigma_min
    scale = traj.scale
    zero_cut = tol_zero * scale
    coarse_cut = 0.05 * scale
    h = traj.step

    candidates: list[int] = []
    for pos, j in enumerate(idx):
        s = sig[j]
        if s <= zero_cut:
            candidates.append(j)
            continue
        if s > coarse_cut:
            continue
        left = sig[idx[pos - 1]] if pos > 0 else np.inf
        right = sig[idx[pos + 1]] if pos + 1 < idx.size else np.inf
        if (s < left and s <= right) or (s <= left and s < right):
            candidates.append(j)

    events: list[ZeroEvent] = []
    dets = traj.dets
    for j in candidates:
        if sig[j] <= zero_cut:
            t_star, s_star, cols = traj.times[j], None, None
        else:
            j_lo = max(j - 1, idx[0])
            j_hi = min(j + 1, idx[-1])
            t_star = None
            if dets[j_lo] * dets[j] < 0.0:
                t_star = _bisect_det(traj, traj.times[j_lo], traj.times[j])
            elif dets[j] * dets[j_hi] < 0.0:
                t_star = _bisect_det(traj, traj.times[j], traj.times[j_hi])
            elif j_lo < j < j_hi:
                ts = [traj.times[j_lo], traj.times[j], traj.times[j_hi]]
                vertex = _parabola_vertex(ts, [sig[i] ** 2 for i in (j_lo, j, j_hi)])
                if vertex is None:
                    continue
                t_star = min(max(vertex, ts[0]), ts[-1])
                for delta in (0.25 * h, 0.0625 * h):
                    probe = [
                        max(t_star - delta, traj.alpha),
                        t_star,
                        min(t_star + delta, traj.end),
                    ]
                    if probe[0] >= probe[1] or probe[1] >= probe[2]:
                        break
                    vals = [_hermite_sigma_min(traj, p) ** 2 for p in probe]
                    vertex = _parabola_vertex(probe, vals)
                    if vertex is None:
                        break
                    t_star = min(max(vertex, probe[0]), probe[-1])
            if t_star is None:
                continue
            t_star = min(max(t_star, lo), hi)
            s_star, cols = None, None
        if s_star is None:
            s_star, cols = _kernel_at(traj, t_star, tol_zero)
        if s_star > zero_cut or cols.shape[1] == 0:
            continue
        events.append(ZeroEvent(time=float(t_star), sigma=s_star, kernel=cols, node=int(j)))

    events.sort(key=lambda e: e.time)
    merged: list[ZeroEvent] = []
    for ev in events:
        if merged and ev.time - merged[-1].time <= 0.75 * h:
            prev = merged[-1]
            kernel = orthonormal_columns(np.hstack([prev.kernel, ev.kernel]))
            keep = prev if prev.sigma <= ev.sigma else ev
            merged[-1] = ZeroEvent(keep.time, keep.sigma, kernel, keep.node)
        else:
            merged.append(ev)

    if open_ends:
        merged = [e for e in merged if lo + 0.5 * h < e.time < hi - 0.5 * h]
    return merged


def default_resolvability_cap(step: float, tol: float) -> float:
    """Largest Riccati-operator norm at which a central difference of S on
    a grid of the given step can resolve S' to the given tolerance.

    The difference's truncation error grows like step^2 * (1 + |S|^2)^2 for
    cotangent-type blowup, so residual checks are restricted to nodes with
    |S| below this cap; beyond it the discretization itself exceeds tol.
    """
    return 0.5 * (tol / step**2) ** 0.25


@dataclass(frozen=True)
class ResidualReport:
    """Max and per-node values of a difference-quotient residual check."""

    times: np.ndarray
    values: np.ndarray
    max_residual: float
    cap: float
    n_checked: int


def riccati_residual(
    traj: JacobiTrajectory,
    fld: CurvatureField | None = None,
    s_cap: float | None = None,
    tol: float = 1e-4,
    tol_sing: float = DEFAULT_TOL_SING,
) -> ResidualReport:
    """Central-difference residual of S' + S^2 + R = 0 at interior nodes.

    Checks every interior node whose neighbors are regular too and where
    the operator norm of S stays below the resolvability cap (see
    ``default_resolvability_cap``; pass ``s_cap`` to override, or
    ``float('inf')`` to disable the cap).
    """
    fld = traj.spec.field if fld is None else fld
    reg, s = riccati_series(traj, tol_sing)
    cap = default_resolvability_cap(traj.step, tol) if s_cap is None else float(s_cap)
    norms = np.full(traj.n_nodes, np.inf)
    if np.any(reg):
        norms[reg] = np.linalg.svd(s[reg], compute_uv=False)[:, 0]
    ok = reg & (norms <= cap)
    check = ok[1:-1] & ok[:-2] & ok[2:]
    j_idx = np.nonzero(check)[0] + 1
    if j_idx.size == 0:
        return ResidualReport(np.empty(0), np.empty(0), float("nan"), cap, 0)
    h2 = 2.0 * traj.step
    vals = np.empty(j_idx.size)
    for out, j in enumerate(j_idx):
        ds = (s[j + 1] - s[j - 1]) / h2
        res = ds + s[j] @ s[j] + _field_matrix(fld, traj.times[j])
        vals[out] = np.linalg.norm(res, 2)
    return ResidualReport(
        times=traj.times[j_idx],
        values=vals,
        max_residual=float(np.max(vals)),
        cap=cap,
        n_checked=int(j_idx.size),
    )


def export_csv(traj: JacobiTrajectory, path) -> None:
    """Write the trajectory as CSV: header with label and step, then one row
    per node with t followed by row-major vec(Y) and vec(Yd)."""
    d = traj.dim
    cols = ["t"]
    cols += [f"y{i}{j}" for i in range(d) for j in range(d)]
    cols += [f"yd{i}{j}" for i in range(d) for j in range(d)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# label={traj.spec.label} step={traj.step:.12g}\n")
        fh.write(",".join(cols) + "\n")
        for j in range(traj.n_nodes):
            row = [f"{traj.times[j]:.12g}"]
            row += [f"{v:.17g}" for v in traj.y[j].ravel()]
            row += [f"{v:.17g}" for v in traj.yd[j].ravel()]
            fh.write(",".join(row) + "\n")
