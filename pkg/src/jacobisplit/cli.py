"""Scenario registry, check runner and command-line interface.

A scenario bundles a curvature field, family initial data, an integration
window and a list of checks, each with an expected verdict. The built-in
registry covers the model geometries (round sphere, flat space, a product
with a flat factor, the complex projective plane, a holonomy-twisted
family), two deliberate counterexamples that must trip specific hypothesis
gates, and a batch of randomized self-adjoint families.

Check verdicts are three-valued: ``verified``, ``hypothesis-violated`` and
``falsified``. A ``falsified`` verdict means every hypothesis gate passed
while a conclusion failed; it must never occur on the built-in scenarios
and the test suite enforces that.

Exit codes: 0 when every check's verdict matches its expectation, 1 when
some check mismatches, 2 for input or numerical errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .comparison import export_scalar_csv, rigidity_check, scalar_traces
from .curvature import (
    CurvatureField,
    constant_sectional,
    diagonal_constant,
    fubini_study_model,
    load_sampled_field,
    ric_k_floor,
    ric_k_floor_sampled,
    sampled_field_from_json,
)
from .jacobi import (
    DEFAULT_STEP,
    FamilySpec,
    JacobiTrajectory,
    export_csv,
    integrate,
)
from .reduction import (
    export_reduction_csv,
    hce_residual,
    recovered_curvature_deviation,
    reduce,
    reduced_boundary_check,
)
from .splitting import check_splitting, self_adjoint_gate, vanishing_span

__all__ = [
    "VERSION",
    "CheckSpec",
    "Scenario",
    "CheckResult",
    "RunReport",
    "builtin_scenarios",
    "list_scenarios",
    "get_scenario",
    "scenario_from_config",
    "run_scenario",
    "main",
]

VERSION = "0.1.0"
REPORT_SCHEMA = "jacobisplit.report/1"
CHECK_KINDS = ("splitting", "rigidity", "hce", "vanishing-floor", "reduced-boundary")
VERDICTS = ("verified", "hypothesis-violated", "falsified")


@dataclass(frozen=True)
class CheckSpec:
    kind: str
    params: dict
    expectation: str

    def __post_init__(self):
        if self.kind not in CHECK_KINDS:
            raise ValueError(f"unknown check kind: {self.kind!r}")
        if self.expectation not in VERDICTS:
            raise ValueError(f"unknown expectation: {self.expectation!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    fld: CurvatureField
    alpha: float
    end: float
    y0: np.ndarray
    yd0: np.ndarray
    checks: tuple[CheckSpec, ...]
    step: float = DEFAULT_STEP

    def family(self) -> FamilySpec:
        return FamilySpec(
            field=self.fld,
            alpha=self.alpha,
            end=self.end,
            y0=self.y0,
            yd0=self.yd0,
            label=self.name,
        )


@dataclass(frozen=True)
class CheckResult:
    kind: str
    params: dict
    expectation: str
    verdict: str
    matched: bool
    details: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": _jsonable(self.params),
            "expectation": self.expectation,
            "verdict": self.verdict,
            "matched": self.matched,
            "details": _jsonable(self.details),
        }


@dataclass
class RunReport:
    scenario: str
    description: str
    step: float
    n_nodes: int
    window: tuple[float, float]
    checks: list[CheckResult]
    all_matched: bool
    seed: int | None = None
    wall_time_s: float = 0.0  # informational only; excluded from to_dict

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "tool": {"name": "jacobisplit", "version": VERSION},
            "scenario": self.scenario,
            "description": self.description,
            "step": self.step,
            "n_nodes": self.n_nodes,
            "window": list(self.window),
            "checks": [c.to_dict() for c in self.checks],
            "all_matched": self.all_matched,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    """Recursively convert report values to plain JSON-serializable types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


# ---------------------------------------------------------------------------
# built-in scenarios


def _builtin_list() -> list[Scenario]:
    eye2 = np.eye(2)
    eye3 = np.eye(3)
    scenarios: list[Scenario] = []

    scenarios.append(
        Scenario(
            name="sphere-zero",
            description="round unit sphere, family vanishing at the start",
            fld=constant_sectional(3, 1.0),
            alpha=0.0,
            end=math.pi,
            y0=np.zeros((2, 2)),
            yd0=eye2,
            checks=(
                CheckSpec("rigidity", {"alpha": 0.0}, "verified"),
                CheckSpec("splitting", {"theorem": "B", "alpha": 0.0}, "verified"),
            ),
        )
    )

    scenarios.append(
        Scenario(
            name="flat-parallel",
            description="flat space, constant parallel family",
            fld=constant_sectional(4, 0.0),
            alpha=0.0,
            end=math.pi,
            y0=eye3,
            yd0=np.zeros((3, 3)),
            checks=(
                CheckSpec("splitting", {"theorem": "A"}, "verified"),
                CheckSpec("splitting", {"theorem": "C", "k": 1}, "verified"),
            ),
        )
    )

    scenarios.append(
        Scenario(
            name="product-s2xr2",
            description="product of a round 2-sphere with a flat plane",
            fld=diagonal_constant([1.0, 0.0, 0.0], label="product-s2xr2"),
            alpha=0.0,
            end=math.pi,
            y0=np.diag([0.0, 1.0, 1.0]),
            yd0=np.diag([1.0, 0.0, 0.0]),
            checks=(
                CheckSpec("splitting", {"theorem": "A"}, "verified"),
                CheckSpec("splitting", {"theorem": "C", "k": 2}, "verified"),
            ),
        )
    )

    scenarios.append(
        Scenario(
            name="cp2-zero",
            description="complex projective plane, family vanishing at the start",
            fld=fubini_study_model(4),
            alpha=0.0,
            end=math.pi,
            y0=np.zeros((3, 3)),
            yd0=eye3,
            checks=(
                CheckSpec("splitting", {"theorem": "B", "alpha": 0.0}, "verified"),
                CheckSpec("splitting", {"theorem": "E", "k": 2, "alpha": 0.0}, "verified"),
                CheckSpec("rigidity", {"alpha": 0.0}, "hypothesis-violated"),
            ),
        )
    )

    scenarios.append(
        Scenario(
            name="example-nonselfadjoint",
            description="rotating family on the sphere with nonvanishing Wronskian",
            fld=constant_sectional(3, 1.0),
            alpha=0.0,
            end=math.pi,
            y0=np.array([[0.0, 1.0], [1.0, 0.0]]),
            yd0=np.array([[1.0, 0.0], [0.0, -1.0]]),
            checks=(
                CheckSpec("splitting", {"theorem": "B", "alpha": 0.0}, "hypothesis-violated"),
            ),
        )
    )

    eps = math.pi / 12.0
    scenarios.append(
        Scenario(
            name="example-shifted-sine",
            description="shifted sine family on the sphere violating the boundary bound",
            fld=constant_sectional(3, 1.0),
            alpha=math.pi / 2.0,
            end=math.pi,
            y0=math.sin(math.pi / 2.0 - eps) * eye2,
            yd0=math.cos(math.pi / 2.0 - eps) * eye2,
            checks=(
                CheckSpec(
                    "splitting", {"theorem": "B", "alpha": math.pi / 2.0}, "hypothesis-violated"
                ),
                CheckSpec("rigidity", {"alpha": math.pi / 2.0}, "hypothesis-violated"),
            ),
        )
    )

    scenarios.append(
        Scenario(
            name="hopf-holonomy",
            description="holonomy-twisted family on the sphere with a one-dim vertical subfamily",
            fld=constant_sectional(3, 1.0),
            alpha=0.0,
            end=math.pi,
            y0=np.array([[1.0, 0.0], [0.0, 0.0]]),
            yd0=np.array([[0.0, 0.0], [1.0, 1.0]]),
            checks=(
                CheckSpec(
                    "hce", {"psi": [[1.0, 0.0]], "tol": 1e-3, "level": 4.0}, "verified"
                ),
                CheckSpec("vanishing-floor", {"k": 1}, "verified"),
                CheckSpec(
                    "reduced-boundary", {"psi": [[1.0, 0.0]], "alpha": 0.2}, "verified"
                ),
            ),
        )
    )

    for idx in range(10):
        scenarios.append(_random_selfadjoint(idx))
    return scenarios


def _random_selfadjoint(idx: int) -> Scenario:
    """Randomized self-adjoint family on the unit-curvature model.

    Initial data Y = id, Yd = a random symmetric operator with separated
    eigenvalues in [-2, 2]; odd indices pin one eigenvalue to cot(alpha) so
    that exactly one member is of sine type. Each member crosses zero once,
    at a time determined by its eigenvalue, so the splitting dimensions are
    known in advance and the rigidity hypotheses must fail on regularity.
    """
    rng = np.random.default_rng(1000 + idx)
    alpha = 0.2
    pinned = idx % 2 == 1
    lams: list[float] = [math.cos(alpha) / math.sin(alpha)] if pinned else []
    n_free = 3 - (1 if pinned else 0)
    free: list[float] = []
    while len(free) < n_free:
        draw = float(rng.uniform(-2.0, 2.0))
        if all(abs(draw - x) >= 0.3 for x in free):
            free.append(draw)
    lams.extend(free)
    g = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r))
    yd0 = q @ np.diag(lams) @ q.T
    yd0 = (yd0 + yd0.T) / 2.0
    return Scenario(
        name=f"random-selfadjoint-{idx}",
        description="randomized self-adjoint family on the unit-curvature model"
        + (" (one sine-type eigenvalue)" if pinned else ""),
        fld=constant_sectional(4, 1.0),
        alpha=alpha,
        end=math.pi,
        y0=np.eye(3),
        yd0=yd0,
        checks=(
            CheckSpec("splitting", {"theorem": "B", "alpha": alpha}, "verified"),
            CheckSpec("rigidity", {"alpha": alpha}, "hypothesis-violated"),
        ),
    )


_REGISTRY: dict[str, Scenario] | None = None


def builtin_scenarios() -> dict[str, Scenario]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = {s.name: s for s in _builtin_list()}
    return _REGISTRY


def list_scenarios() -> list[Scenario]:
    return list(builtin_scenarios().values())


def get_scenario(name: str) -> Scenario:
    reg = builtin_scenarios()
    if name not in reg:
        raise KeyError(f"unknown scenario: {name!r} (see the list subcommand)")
    return reg[name]


# ---------------------------------------------------------------------------
# config files


def _field_from_config(doc: dict) -> CurvatureField:
    kind = doc.get("kind")
    if kind == "constant-sectional":
        return constant_sectional(int(doc["n"]), float(doc["c"]))
    if kind == "diagonal-constant":
        return diagonal_constant([float(x) for x in doc["eigs"]])
    if kind == "fubini-study":
        return fubini_study_model(int(doc["n"]))
    if kind == "sampled":
        if "path" in doc:
            return load_sampled_field(doc["path"])
        return sampled_field_from_json(doc)
    raise ValueError(f"unknown field kind in config: {kind!r}")


def scenario_from_config(path: str | Path) -> Scenario:
    """Build a scenario from a JSON config file.

    Required keys: name, field, alpha, end, y0, yd0, checks. Each check
    needs kind, params and expect. Optional: description, step.
    """
    with open(path) as fh:
        doc = json.load(fh)
    try:
        checks = tuple(
            CheckSpec(c["kind"], dict(c.get("params", {})), c["expect"])
            for c in doc["checks"]
        )
        return Scenario(
            name=str(doc["name"]),
            description=str(doc.get("description", "")),
            fld=_field_from_config(doc["field"]),
            alpha=float(doc["alpha"]),
            end=float(doc["end"]),
            y0=np.asarray(doc["y0"], dtype=float),
            yd0=np.asarray(doc["yd0"], dtype=float),
            checks=checks,
            step=float(doc.get("step", DEFAULT_STEP)),
        )
    except KeyError as exc:
        raise ValueError(f"config file is missing key {exc}") from exc


# ---------------------------------------------------------------------------
# check runner


def _psi_from_params(params: dict, dim: int) -> np.ndarray:
    rows = params.get("psi", [])
    if not rows:
        return np.zeros((dim, 0))
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[1] != dim:
        raise ValueError(f"psi vectors must have length {dim}, got {arr.shape[1]}")
    return arr.T


def _run_check(
    traj: JacobiTrajectory,
    scenario: Scenario,
    spec: CheckSpec,
    tol_zero: float | None,
    tol_eig: float | None,
    seed: int | None,
) -> CheckResult:
    params = dict(spec.params)
    details: dict = {}
    fld = scenario.fld
    if spec.kind == "splitting":
        kwargs = {}
        if tol_zero is not None:
            kwargs["tol_zero"] = tol_zero
        if tol_eig is not None:
            kwargs["tol_eig"] = tol_eig
        report = check_splitting(
            traj,
            params["theorem"],
            k=params.get("k"),
            alpha=params.get("alpha"),
            **kwargs,
        )
        verdict = report.verdict
        details = report.to_dict()
        if seed is not None:
            k_used = report.hypothesis_flags["ric_k_floor"]["k"]
            mid = (traj.alpha + traj.end) / 2.0
            details["floor_sampled"] = ric_k_floor_sampled(fld, mid, k_used, seed=seed)
    elif spec.kind == "rigidity":
        kwargs = {}
        if tol_eig is not None:
            kwargs["tol_eig"] = tol_eig
        if tol_zero is not None:
            kwargs["tol_zero"] = tol_zero
        report = rigidity_check(traj, fld, alpha=params.get("alpha"), **kwargs)
        verdict = "hypothesis-violated" if report.verdict == "hypothesis-fails" else report.verdict
        details = report.to_dict()
    elif spec.kind == "hce":
        gate = self_adjoint_gate(traj)
        details["self_adjoint"] = gate
        if not gate["passed"]:
            verdict = "hypothesis-violated"
        else:
            rs = reduce(traj, _psi_from_params(params, traj.dim))
            tol = float(params.get("tol", 1e-3))
            rep = hce_residual(rs, fld, tol=tol)
            details.update(
                residual=rep.max_residual,
                cap=rep.cap,
                n_checked=rep.n_checked,
                dim_v=rs.dim_v,
                dim_h=rs.dim_h,
            )
            ok = rep.n_checked > 0 and rep.max_residual <= tol
            if "level" in params:
                dev = recovered_curvature_deviation(rs, float(params["level"]), fld)
                details["curvature_deviation"] = dev
                ok = ok and dev <= tol
            verdict = "verified" if ok else "falsified"
    elif spec.kind == "vanishing-floor":
        k = int(params["k"])
        gate = self_adjoint_gate(traj)
        details["self_adjoint"] = gate
        if fld.kind == "sampled":
            floor = min(ric_k_floor(fld, t, k) for t in traj.times)
        else:
            floor = ric_k_floor(fld, traj.alpha, k)
        details["floor"] = floor
        if seed is not None:
            mid = (traj.alpha + traj.end) / 2.0
            details["floor_sampled"] = ric_k_floor_sampled(fld, mid, k, seed=seed)
        if not gate["passed"] or floor <= 0.0:
            verdict = "hypothesis-violated"
        else:
            kwargs = {"tol_zero": tol_zero} if tol_zero is not None else {}
            basis = vanishing_span(traj, open_ends=False, **kwargs)
            need = fld.n - k
            details.update(dim_z_closed=basis.shape[1], required=need)
            verdict = "verified" if basis.shape[1] >= need else "falsified"
    elif spec.kind == "reduced-boundary":
        gate = self_adjoint_gate(traj)
        details["self_adjoint"] = gate
        if not gate["passed"]:
            verdict = "hypothesis-violated"
        else:
            rs = reduce(traj, _psi_from_params(params, traj.dim))
            kwargs = {"tol_eig": tol_eig} if tol_eig is not None else {}
            rep = reduced_boundary_check(rs, float(params["alpha"]), **kwargs)
            details.update(rep)
            verdict = "verified" if rep["passed"] else "falsified"
    else:  # pragma: no cover - guarded by CheckSpec
        raise ValueError(f"unknown check kind: {spec.kind!r}")
    return CheckResult(
        kind=spec.kind,
        params=params,
        expectation=spec.expectation,
        verdict=verdict,
        matched=verdict == spec.expectation,
        details=details,
    )


def run_scenario(
    scenario: Scenario | str,
    step: float | None = None,
    tol_zero: float | None = None,
    tol_eig: float | None = None,
    seed: int | None = None,
) -> RunReport:
    """Integrate a scenario once and run all its checks against it."""
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    t0 = time.perf_counter()
    h = step if step is not None else scenario.step
    traj = integrate(scenario.family(), step=h)
    results = [
        _run_check(traj, scenario, c, tol_zero, tol_eig, seed) for c in scenario.checks
    ]
    report = RunReport(
        scenario=scenario.name,
        description=scenario.description,
        step=traj.step,
        n_nodes=int(traj.times.size),
        window=(traj.alpha, traj.end),
        checks=results,
        all_matched=all(r.matched for r in results),
        seed=seed,
    )
    report.wall_time_s = time.perf_counter() - t0
    return report


def _write_traces(report_traj: JacobiTrajectory, scenario: Scenario, out: Path) -> list[Path]:
    written = []
    traj_path = out / f"{scenario.name}-trajectory.csv"
    export_csv(report_traj, str(traj_path))
    written.append(traj_path)
    try:
        trace = scalar_traces(report_traj, scenario.fld)
    except ValueError:
        trace = None
    if trace is not None:
        sc_path = out / f"{scenario.name}-scalars.csv"
        export_scalar_csv(trace, str(sc_path))
        written.append(sc_path)
    for i, check in enumerate(scenario.checks):
        if check.kind in ("hce", "reduced-boundary"):
            rs = reduce(report_traj, _psi_from_params(dict(check.params), report_traj.dim))
            red_path = out / f"{scenario.name}-reduction-{i}.csv"
            export_reduction_csv(rs, str(red_path))
            written.append(red_path)
    return written


def _report_csv(report: RunReport) -> str:
    lines = ["scenario,check_index,kind,expectation,verdict,matched"]
    for i, c in enumerate(report.checks):
        lines.append(
            f"{report.scenario},{i},{c.kind},{c.expectation},{c.verdict},{int(c.matched)}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jacobisplit",
        description="numerical splitting, comparison and reduction checks "
        "for families of Jacobi fields",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list built-in scenarios")
    run = sub.add_parser("run", help="run a scenario's checks")
    run.add_argument("name", nargs="?", help="built-in scenario name")
    run.add_argument("--config", help="JSON scenario config file (instead of a name)")
    run.add_argument("--step", type=float, help="integration step override")
    run.add_argument("--tol-zero", type=float, help="zero-detection tolerance override")
    run.add_argument("--tol-eig", type=float, help="boundary eigenvalue tolerance override")
    run.add_argument("--seed", type=int, help="seed for sampled curvature cross-checks")
    run.add_argument("--traces", action="store_true", help="also write per-node CSV traces")
    run.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    run.add_argument("--out", default=".", help="output directory for reports and traces")
    return parser


def _cmd_list() -> int:
    for scenario in list_scenarios():
        print(f"{scenario.name:28s} {scenario.description}")
    return 0


def _cmd_run(args) -> int:
    if bool(args.name) == bool(args.config):
        print("error: give exactly one of a scenario name or --config", file=sys.stderr)
        return 2
    try:
        scenario = (
            scenario_from_config(args.config) if args.config else get_scenario(args.name)
        )
        report = run_scenario(
            scenario,
            step=args.step,
            tol_zero=args.tol_zero,
            tol_eig=args.tol_eig,
            seed=args.seed,
        )
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.format == "json":
            report_path = out / f"{scenario.name}-report.json"
            report_path.write_text(report.to_json())
        else:
            report_path = out / f"{scenario.name}-report.csv"
            report_path.write_text(_report_csv(report))
        if args.traces:
            traj = integrate(scenario.family(), step=args.step or scenario.step)
            _write_traces(traj, scenario, out)
    except (ValueError, KeyError, OSError, np.linalg.LinAlgError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    for check in report.checks:
        status = "OK" if check.matched else "MISMATCH"
        extra = ""
        if check.kind == "splitting":
            extra = f" theorem={check.params.get('theorem')}"
        print(
            f"{report.scenario}/{check.kind}{extra}: {check.verdict} "
            f"(expected {check.expectation}) [{status}]"
        )
    print(f"report: {report_path}")
    print(f"elapsed: {report.wall_time_s:.2f}s", file=sys.stderr)
    return 0 if report.all_matched else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        return _cmd_list()
    return _cmd_run(args)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
