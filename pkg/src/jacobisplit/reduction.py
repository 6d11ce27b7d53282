"""Reduction of a family of Jacobi fields modulo a vertical subfamily.

Given a trajectory and a subfamily spanned by coefficient vectors Psi, the
moving subspace V(t) = span{Y(t) c : c in Psi} is split off and the family
is studied on the horizontal complement H(t) = V(t)^perp. At nodes where
V(t) has full rank (dimension = dim Psi) and the horizontal basis can be
lifted through Y(t), the reduction produces:

* the orthogonal projectors PV(t), PH(t) and an orthonormal horizontal
  basis BH(t) (columns),
* the reduced Riccati operator S_hat(t) acting on H(t), computed
  algebraically as BH^T Yd C where C lifts BH through Y (Y C = BH),
* the vertical-derivative operator A(t): for v = Y(t) c in V(t) with c the
  minimum-norm Psi-coefficient, A maps v to the horizontal part of Yd(t) c;
  its columns are expressed against the singular directions of Y Psi, so
  A A^* is positive semidefinite by construction.

The reduced operator satisfies a horizontal Riccati equation whose
curvature term is the horizontal block of R plus 3 A A^*; the residual of
that equation (`hce_residual`) is the reduction's consistency measure,
computed exactly like the plain Riccati residual: central differences of
the ambient-coordinate reduced operator, restricted back to H, at interior
runs of regular nodes below the resolvability cap.

Differencing the ambient form BH S_hat BH^T rather than the BH-coordinate
matrix keeps the derivative basis-independent; the projector-derivative
terms it introduces are annihilated by the outer BH^T ... BH restriction,
so no finite-difference of the projectors themselves is needed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureField
from .jacobi import (
    DEFAULT_TOL_SING,
    JacobiTrajectory,
    ResidualReport,
    default_resolvability_cap,
    riccati,
)
from .symlin import orthonormal_columns, spectrum

__all__ = [
    "ReducedSystem",
    "reduce",
    "hce_residual",
    "recovered_curvature_deviation",
    "reduced_boundary_check",
    "export_reduction_csv",
]

DEFAULT_RANK_TOL = 1e-8
DEFAULT_LIFT_TOL = 1e-6


@dataclass(frozen=True)
class ReducedSystem:
    """Per-node reduction data. Arrays are NaN-filled at nodes where the
    reduction is not regular (rank drop of V or failed lift)."""

    traj: JacobiTrajectory
    psi: np.ndarray  # (d, p) orthonormal columns spanning the subfamily
    v_mask: np.ndarray  # (N+1,) bool: V(t) has full rank p
    regular: np.ndarray  # (N+1,) bool: v_mask and successful lift
    pv: np.ndarray  # (N+1, d, d)
    ph: np.ndarray  # (N+1, d, d)
    bh: np.ndarray  # (N+1, d, d-p) horizontal orthonormal basis
    shat_bh: np.ndarray  # (N+1, d-p, d-p) reduced operator in BH coordinates
    shat_amb: np.ndarray  # (N+1, d, d) ambient form BH @ shat_bh @ BH^T
    a_amb: np.ndarray  # (N+1, d, p) vertical-derivative columns (horizontal)
    aastar: np.ndarray  # (N+1, d, d) A @ A^T, PSD
    lift_err: np.ndarray  # (N+1,) worst column residual of the lift

    @property
    def dim_v(self) -> int:
        return self.psi.shape[1]

    @property
    def dim_h(self) -> int:
        return self.traj.dim - self.psi.shape[1]

    @property
    def regular_times(self) -> np.ndarray:
        return self.traj.times[self.regular]


def reduce(
    traj: JacobiTrajectory,
    psi_basis,
    rank_tol: float = DEFAULT_RANK_TOL,
    lift_tol: float = DEFAULT_LIFT_TOL,
) -> ReducedSystem:
    """Reduce a trajectory modulo the subfamily spanned by ``psi_basis``.

    ``psi_basis`` is a (d, p) array of coefficient columns (a single vector
    or an empty basis are accepted); it must have full column rank. With an
    empty basis the reduction is the identity: H is everything and the
    reduced operator coincides with the ordinary Riccati operator wherever
    the family is regular.
    """
    d = traj.dim
    psi_in = np.asarray(psi_basis, dtype=float)
    if psi_in.ndim == 1:
        psi_in = psi_in[:, None]
    if psi_in.ndim != 2 or psi_in.shape[0] != d:
        raise ValueError(f"psi basis must be ({d}, p), got {psi_in.shape}")
    p_in = psi_in.shape[1]
    psi = orthonormal_columns(psi_in) if p_in else np.zeros((d, 0))
    p = psi.shape[1]
    if p != p_in:
        raise ValueError("psi basis is rank-deficient")

    n_nodes = traj.times.size
    dim_h = d - p
    v_mask = np.ones(n_nodes, dtype=bool)
    regular = np.zeros(n_nodes, dtype=bool)
    pv = np.full((n_nodes, d, d), np.nan)
    ph = np.full((n_nodes, d, d), np.nan)
    bh = np.full((n_nodes, d, dim_h), np.nan)
    shat_bh = np.full((n_nodes, dim_h, dim_h), np.nan)
    shat_amb = np.full((n_nodes, d, d), np.nan)
    a_amb = np.full((n_nodes, d, p), np.nan)
    aastar = np.full((n_nodes, d, d), np.nan)
    lift_err = np.full(n_nodes, np.nan)
    eye = np.eye(d)

    if p:
        v = np.einsum("nij,jk->nik", traj.y, psi)  # (N+1, d, p)
        u_all, sig_all, wt_all = np.linalg.svd(v, full_matrices=True)
        v_scale = float(sig_all.max()) if sig_all.size else 0.0
        v_mask = sig_all[:, -1] >= rank_tol * max(v_scale, 1e-300)

    for j in range(n_nodes):
        if not v_mask[j]:
            continue
        if p:
            uj = u_all[j]
            pv_j = uj[:, :p] @ uj[:, :p].T
            bh_j = uj[:, p:]
        else:
            pv_j = np.zeros((d, d))
            bh_j = eye
        ph_j = eye - pv_j
        c, *_ = np.linalg.lstsq(traj.y[j], bh_j, rcond=None)
        resid = traj.y[j] @ c - bh_j
        err = float(np.linalg.norm(resid, axis=0).max()) if dim_h else 0.0
        pv[j], ph[j], bh[j], lift_err[j] = pv_j, ph_j, bh_j, err
        if err > lift_tol:
            continue
        regular[j] = True
        s_bh = bh_j.T @ traj.yd[j] @ c
        shat_bh[j] = s_bh
        shat_amb[j] = bh_j @ s_bh @ bh_j.T
        if p:
            gamma = psi @ wt_all[j].T @ np.diag(1.0 / sig_all[j])
            a_j = ph_j @ traj.yd[j] @ gamma
            a_amb[j] = a_j
            aastar[j] = a_j @ a_j.T
        else:
            aastar[j] = np.zeros((d, d))

    return ReducedSystem(
        traj=traj,
        psi=psi,
        v_mask=np.asarray(v_mask, dtype=bool),
        regular=regular,
        pv=pv,
        ph=ph,
        bh=bh,
        shat_bh=shat_bh,
        shat_amb=shat_amb,
        a_amb=a_amb,
        aastar=aastar,
        lift_err=lift_err,
    )


def _shat_norms(rs: ReducedSystem) -> np.ndarray:
    """Spectral norm of the ambient reduced operator per node (+inf where
    the reduction is irregular, so capped checks skip those nodes)."""
    norms = np.full(rs.traj.times.size, np.inf)
    idx = np.nonzero(rs.regular)[0]
    if idx.size and rs.dim_h:
        sv = np.linalg.svd(rs.shat_amb[idx], compute_uv=False)
        norms[idx] = sv[:, 0]
    elif idx.size:
        norms[idx] = 0.0
    return norms


def hce_residual(
    rs: ReducedSystem,
    fld: CurvatureField | None = None,
    s_cap: float | None = None,
    tol: float = 1e-3,
) -> ResidualReport:
    """Residual of the horizontal Riccati equation with the 3 A A^* term.

    At interior nodes whose neighbors are also regular and where the
    reduced operator stays below the resolvability cap, the central
    difference of the ambient reduced operator is combined with its
    square, the horizontal curvature block and three times A A^*, and the
    result is restricted to H; the report collects the worst spectral
    norm. Requires at least one interior node with both neighbors regular.
    """
    traj = rs.traj
    fld = fld if fld is not None else traj.spec.field
    if s_cap is None:
        s_cap = default_resolvability_cap(traj.step, tol)
    reg = rs.regular
    n_nodes = traj.times.size
    triple = np.zeros(n_nodes, dtype=bool)
    triple[1:-1] = reg[:-2] & reg[1:-1] & reg[2:]
    if not triple.any():
        raise ValueError("too few consecutive regular nodes for differencing")
    norms = _shat_norms(rs)
    capped = triple.copy()
    capped[1:-1] &= (norms[:-2] <= s_cap) & (norms[1:-1] <= s_cap) & (norms[2:] <= s_cap)
    idx = np.nonzero(capped)[0]
    times, values = [], []
    h = traj.step
    for j in idx:
        ds = (rs.shat_amb[j + 1] - rs.shat_amb[j - 1]) / (2.0 * h)
        r_amb = rs.ph[j] @ np.asarray(fld.matrix(traj.times[j])) @ rs.ph[j]
        total = ds + rs.shat_amb[j] @ rs.shat_amb[j] + r_amb + 3.0 * rs.aastar[j]
        res_h = rs.bh[j].T @ total @ rs.bh[j]
        value = float(np.linalg.norm(res_h, 2)) if rs.dim_h else 0.0
        times.append(traj.times[j])
        values.append(value)
    values_arr = np.asarray(values)
    return ResidualReport(
        times=np.asarray(times),
        values=values_arr,
        max_residual=float(values_arr.max()) if values_arr.size else math.nan,
        cap=float(s_cap),
        n_checked=int(values_arr.size),
    )


def recovered_curvature_deviation(
    rs: ReducedSystem,
    level: float,
    fld: CurvatureField | None = None,
) -> float:
    """Worst deviation of the recovered horizontal curvature operator
    (horizontal block of R plus 3 A A^*) from ``level`` times the identity
    on H, over regular nodes in spectral norm."""
    traj = rs.traj
    fld = fld if fld is not None else traj.spec.field
    if not rs.dim_h:
        return 0.0
    worst = 0.0
    eye_h = np.eye(rs.dim_h)
    for j in np.nonzero(rs.regular)[0]:
        r_mat = np.asarray(fld.matrix(traj.times[j]))
        r_hat = rs.bh[j].T @ (r_mat + 3.0 * rs.aastar[j]) @ rs.bh[j]
        worst = max(worst, float(np.linalg.norm(r_hat - level * eye_h, 2)))
    return worst


def reduced_boundary_check(
    rs: ReducedSystem,
    alpha: float,
    tol_eig: float = 1e-6,
    tol_sing: float = DEFAULT_TOL_SING,
) -> dict:
    """Eigenvalue-domination check at a boundary time: the largest
    eigenvalue of the reduced operator must not exceed the largest
    eigenvalue of the full operator (both symmetrized). The node must be
    regular for the reduction, and the full operator must exist there."""
    traj = rs.traj
    j = traj.node_index(alpha)
    if not rs.regular[j]:
        raise ValueError(f"alpha={alpha} is not a regular node of the reduction")
    s_full = np.asarray(riccati(traj, traj.times[j], tol_sing=tol_sing))
    eigs_full, _ = spectrum((s_full + s_full.T) / 2.0)
    s_max = float(eigs_full[-1])
    if rs.dim_h:
        s_bh = rs.shat_bh[j]
        eigs_red, _ = spectrum((s_bh + s_bh.T) / 2.0)
        shat_max = float(eigs_red[-1])
    else:
        shat_max = -math.inf
    return {
        "alpha": float(traj.times[j]),
        "shat_max": shat_max,
        "s_max": s_max,
        "margin": s_max + tol_eig - shat_max,
        "passed": bool(shat_max <= s_max + tol_eig),
    }


def export_reduction_csv(rs: ReducedSystem, path: str) -> None:
    """Write per-node reduction diagnostics as CSV: time, regular flag,
    lift residual, |A| and the extreme eigenvalues of the reduced
    operator."""
    traj = rs.traj
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "regular", "lift_err", "norm_a", "shat_min", "shat_max"])
        for j, t in enumerate(traj.times):
            if rs.regular[j] and rs.dim_h:
                s_bh = rs.shat_bh[j]
                eigs, _ = spectrum((s_bh + s_bh.T) / 2.0)
                smin, smax = float(eigs[0]), float(eigs[-1])
            else:
                smin = smax = math.nan
            if rs.regular[j] and rs.dim_v:
                norm_a = float(np.linalg.norm(rs.a_amb[j], 2))
            elif rs.regular[j]:
                norm_a = 0.0
            else:
                norm_a = math.nan
            writer.writerow(
                [
                    f"{t:.17g}",
                    int(rs.regular[j]),
                    f"{rs.lift_err[j]:.17g}",
                    f"{norm_a:.17g}",
                    f"{smin:.17g}",
                    f"{smax:.17g}",
                ]
            )
