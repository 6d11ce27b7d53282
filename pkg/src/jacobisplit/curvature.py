"""Curvature operator fields along a unit-speed geodesic.

A curvature field assigns to each parameter value ``t`` a self-adjoint
operator on the normal space of the geodesic: dimension ``n - 1`` when the
ambient dimension is ``n``. Everything is expressed in a parallel
orthonormal frame along the geodesic, so a field is just a matrix-valued
function of time. Three kinds exist:

* ``constant-sectional``: ``c`` times the identity.
* ``diagonal-constant``: a fixed diagonal operator (covers product metrics
  and the rank-one symmetric model with eigenvalues ``4, 1, ..., 1``).
* ``sampled``: node values on a time grid, linearly interpolated entrywise
  and re-symmetrized between nodes; loadable from JSON.

``ric_k_floor`` evaluates the minimum over orthonormal k-frames (orthogonal
to the geodesic direction) of the k-trace of the operator, which equals the
sum of its k smallest eigenvalues. ``ric_k_floor_sampled`` estimates the
same quantity by brute-force random frame sampling and is used as an
independent cross-check: it can only overshoot the true floor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .symlin import SymOperator, ky_fan_min

__all__ = [
    "CurvatureField",
    "constant_sectional",
    "diagonal_constant",
    "fubini_study_model",
    "sampled_field",
    "sampled_field_from_json",
    "load_sampled_field",
    "ric_k_floor",
    "ric_k_floor_sampled",
]

_KINDS = ("constant-sectional", "diagonal-constant", "sampled")


@dataclass(frozen=True)
class CurvatureField:
    """Time-dependent self-adjoint operator on the (n-1)-dim normal space.

    ``matrix(t)`` returns the operator entries at time ``t`` as a read-only
    array; for the constant kinds the same cached array object is returned
    for every ``t``. ``operator(t)`` wraps the entries in a SymOperator.
    """

    kind: str
    n: int  # ambient dimension; operators act on dimension n - 1
    label: str = ""
    _eval: Callable[[float], np.ndarray] = field(repr=False, default=None)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown curvature field kind: {self.kind!r}")
        if self.n < 2:
            raise ValueError("ambient dimension must be >= 2")

    @property
    def dim(self) -> int:
        """Dimension of the normal space the operators act on."""
        return self.n - 1

    def matrix(self, t: float) -> np.ndarray:
        return self._eval(float(t))

    def operator(self, t: float) -> SymOperator:
        return SymOperator(self.matrix(t))


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    m.flags.writeable = False
    return m


def constant_sectional(n: int, c: float, label: str = "") -> CurvatureField:
    """Field of constant sectional curvature ``c`` in ambient dimension ``n``."""
    if n < 2:
        raise ValueError("ambient dimension must be >= 2")
    cached = _frozen(float(c) * np.eye(n - 1))
    return CurvatureField(
        kind="constant-sectional",
        n=n,
        label=label or f"constant-sectional(c={c})",
        _eval=lambda t: cached,
    )


def diagonal_constant(eigs, label: str = "") -> CurvatureField:
    """Constant field with the given diagonal entries.

    The normal-space frame is an eigenbasis for all times; the ambient
    dimension is ``len(eigs) + 1``.
    """
    e = np.asarray(eigs, dtype=float).ravel()
    if e.size < 1:
        raise ValueError("need at least one diagonal entry")
    if not np.all(np.isfinite(e)):
        raise ValueError("diagonal entries must be finite")
    cached = _frozen(np.diag(e))
    return CurvatureField(
        kind="diagonal-constant",
        n=e.size + 1,
        label=label or "diagonal-constant",
        _eval=lambda t: cached,
    )


def fubini_study_model(n: int, label: str = "") -> CurvatureField:
    """Curvature operator along a geodesic of the rank-one model whose
    sectional curvatures are pinched in [1, 4].

    ``n`` is the ambient (real) dimension and must be even and >= 4. In a
    parallel frame adapted to the complex structure, with the first normal
    direction spanning the complex line of the velocity, the operator is the
    constant ``diag(4, 1, ..., 1)``.
    """
    if n < 4 or n % 2 != 0:
        raise ValueError("ambient dimension must be even and >= 4")
    e = np.ones(n - 1)
    e[0] = 4.0
    return diagonal_constant(e, label=label or f"fubini-study(n={n})")


def sampled_field(grid, ops, label: str = "") -> CurvatureField:
    """Field given by node samples, linearly interpolated.

    ``grid``: strictly increasing 1-D array of times (one node is allowed,
    giving a field defined only at that instant). ``ops``: array of shape
    ``(len(grid), d, d)`` with the operator entries at the nodes. Node
    operators must be finite and numerically symmetric; the interpolant is
    re-symmetrized so the field stays exactly self-adjoint between nodes.
    Evaluation outside ``[grid[0], grid[-1]]`` raises ValueError.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    ops = np.asarray(ops, dtype=float)
    if grid.size < 1:
        raise ValueError("sampled field needs at least one grid node")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid times must be strictly increasing")
    if ops.ndim != 3 or ops.shape[0] != grid.size or ops.shape[1] != ops.shape[2]:
        raise ValueError(f"ops must have shape (len(grid), d, d), got {ops.shape}")
    d = ops.shape[1]
    for i in range(grid.size):
        if not np.all(np.isfinite(ops[i])):
            raise ValueError(f"non-finite operator entries at node {i}")
        defect = float(np.max(np.abs(ops[i] - ops[i].T)))
        scale = max(1.0, float(np.max(np.abs(ops[i]))))
        if defect > 1e-8 * scale:
            raise ValueError(f"operator at node {i} is not symmetric (defect {defect:.3e})")
    sym_ops = (ops + np.transpose(ops, (0, 2, 1))) / 2.0
    t0, t1 = float(grid[0]), float(grid[-1])

    def _eval(t: float) -> np.ndarray:
        if not (t0 <= t <= t1):
            raise ValueError(f"time {t} outside sampled domain [{t0}, {t1}]")
        if grid.size == 1:
            return _frozen(sym_ops[0])
        j = int(np.searchsorted(grid, t, side="right")) - 1
        j = min(max(j, 0), grid.size - 2)
        w = (t - grid[j]) / (grid[j + 1] - grid[j])
        m = (1.0 - w) * sym_ops[j] + w * sym_ops[j + 1]
        return _frozen((m + m.T) / 2.0)

    return CurvatureField(kind="sampled", n=d + 1, label=label or "sampled", _eval=_eval)


def sampled_field_from_json(doc: dict, label: str = "") -> CurvatureField:
    """Build a sampled field from a parsed JSON document.

    Expected keys: ``n`` (ambient dimension), ``grid`` (list of times),
    ``ops`` (list with one entry per grid node, each a row-major flat list
    of the (n-1) x (n-1) operator entries). Malformed nodes are reported
    with their index.
    """
    try:
        n = int(doc["n"])
        grid = np.asarray(doc["grid"], dtype=float)
        raw = doc["ops"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed sampled-field document: {exc}") from exc
    d = n - 1
    if d < 1:
        raise ValueError("ambient dimension must be >= 2")
    if len(raw) != grid.size:
        raise ValueError(f"ops has {len(raw)} entries but grid has {grid.size} nodes")
    ops = np.empty((grid.size, d, d))
    for i, flat in enumerate(raw):
        flat = np.asarray(flat, dtype=float).ravel()
        if flat.size != d * d:
            raise ValueError(f"node {i}: expected {d * d} operator entries, got {flat.size}")
        ops[i] = flat.reshape(d, d)
    return sampled_field(grid, ops, label=label or str(doc.get("label", "sampled")))


def load_sampled_field(path, label: str = "") -> CurvatureField:
    """Read a sampled field from a JSON file (see sampled_field_from_json)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("sampled-field file must contain a JSON object")
    return sampled_field_from_json(doc, label=label)


def ric_k_floor(field: CurvatureField, t: float, k: int) -> float:
    """Minimum over orthonormal k-frames (orthogonal to the geodesic
    direction) of the k-trace of the curvature operator at time t: the sum
    of the k smallest eigenvalues."""
    return ky_fan_min(field.matrix(t), k)


def ric_k_floor_sampled(
    field: CurvatureField, t: float, k: int, samples: int = 2000, seed: int = 0
) -> float:
    """Randomized estimate of ``ric_k_floor``.

    Draws ``samples`` orthonormal k-frames (QR of standard Gaussian
    matrices, fixed ``seed``) and returns the smallest sampled k-trace.
    Always an upper bound for the true floor.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = field.dim
    if not (1 <= k <= d):
        raise ValueError(f"k out of range: k={k}, dim={d}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, d, k))
    q, _ = np.linalg.qr(g)
    a = np.asarray(field.matrix(t), dtype=float)
    vals = np.einsum("sik,ij,sjk->s", q, a, q)
    return float(np.min(vals))
