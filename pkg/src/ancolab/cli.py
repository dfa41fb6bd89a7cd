"""Command-line entry point: ``ancolab {analyze,verify,topology,topology-sweep,demo}``.

Reports are JSON (sorted keys, fixed float repr) or CSV and contain no
timestamps, so repeated runs with the same config and seed are byte-identical.
Exit codes: 0 all checks pass, 2 verification or numeric failure, 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, _kernels, bundle, engine, geometry, lie, oracle, topology

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_INPUT = 3

OUTPUT_DIR_ENV = "ANCOLAB_OUTPUT_DIR"
OBSTRUCTION_T = 2.0**-6
SCHEMA_VERSION = 1


class InputError(ValueError):
    """Bad configuration or arguments (exit code 3)."""


@dataclass
class ExperimentConfig:
    """Everything needed to re-run an experiment.

    ``connection`` is a preset name (``hopf``, ``pkl:1:2``, ...) or a mapping
    ``{"base": ..., "algebra": ..., "potential": [[{coeff, powers, generator}, ...], ...]}``.
    """

    connection: object = "flat"
    t_grid: str = "2^0..2^-14"
    points: int = 5
    seed: int = 0
    criterion_tol: float = 1e-10
    anco_tol: float = 0.05
    use_oracle: bool = False
    verify_points: int = 1
    verify_t_grid: str = "1,0.75,0.5,0.375,0.25"
    inject_sign_error: bool = False
    name: str = "custom"

    def validate(self) -> "ExperimentConfig":
        if self.points < 1 or self.verify_points < 1:
            raise InputError("points and verify_points must be >= 1")
        if not (self.criterion_tol > 0 and self.anco_tol > 0):
            raise InputError("tolerances must be positive")
        parse_t_grid(self.t_grid)
        parse_t_grid(self.verify_t_grid)
        return self


PRESET_NAMES = ("flat", "hopf", "heisenberg", "pkl:k:l", "su2-demo", "su2-poly", "u2-central", "qhopf")


def preset_config(name: str) -> ExperimentConfig:
    try:
        bundle.from_name(name)
    except ValueError as exc:
        raise InputError(f"{exc}; known presets: {', '.join(PRESET_NAMES)}") from None
    return ExperimentConfig(connection=name, name=name, points=3 if name == "flat" else 5)


# parsing --------------------------------------------------------------------------

def parse_t_grid(spec: str) -> list[float]:
    """``"2^0..2^-14"`` (powers of two), ``"default"`` or a comma list; returned descending."""
    spec = str(spec).strip()
    if spec == "default":
        return list(engine.DEFAULT_T_GRID)
    try:
        if ".." in spec:
            lo, hi = (p.strip() for p in spec.split(".."))
            if not (lo.startswith("2^") and hi.startswith("2^")):
                raise ValueError
            a, b = int(lo[2:]), int(hi[2:])
            step = -1 if b < a else 1
            ts = [2.0**k for k in range(a, b + step, step)]
        else:
            ts = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad t-grid {spec!r}; use 2^a..2^b or a comma list") from None
    if not ts or any(not t > 0 for t in ts):
        raise InputError("t values must be positive")
    return sorted(ts, reverse=True)


def parse_range(spec: str) -> list[int]:
    try:
        lo, hi = (int(p) for p in spec.split(".."))
    except ValueError:
        raise InputError(f"bad range {spec!r}; expected a..b") from None
    if hi < lo:
        raise InputError("range end precedes start")
    return list(range(lo, hi + 1))


def parse_int_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise InputError(f"bad integer list {raw!r}") from None


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    known = {f.name for f in fields(ExperimentConfig)} | {"preset"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"{path}: unknown keys {unknown}")
    return data


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    data = load_config_file(args.config) if getattr(args, "config", None) else {}
    preset = args.preset or data.pop("preset", None)
    cfg = preset_config(preset) if preset else ExperimentConfig()
    for key, val in data.items():
        setattr(cfg, key, val)
    if "connection" in data and not preset:
        cfg.name = data["connection"] if isinstance(data["connection"], str) else "custom"
    for key in ("t_grid", "seed", "points"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "oracle", False):
        cfg.use_oracle = True
    if getattr(args, "inject_sign_error", False):
        cfg.inject_sign_error = True
    try:
        cfg.points = int(cfg.points)
        cfg.seed = int(cfg.seed)
        cfg.verify_points = int(cfg.verify_points)
        cfg.criterion_tol = float(cfg.criterion_tol)
        cfg.anco_tol = float(cfg.anco_tol)
    except (TypeError, ValueError):
        raise InputError("numeric config fields have the wrong type") from None
    return cfg.validate()


def build_bundle(cfg: ExperimentConfig) -> bundle.ConnectionChartData:
    spec = cfg.connection
    try:
        if isinstance(spec, str):
            return bundle.from_name(spec)
        if isinstance(spec, dict):
            base = geometry.from_name(spec["base"])
            algebra = lie.from_name(spec["algebra"])
            return bundle.polynomial_bundle(base, algebra, spec.get("potential", [[]] * base.dim_n), name="custom")
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad connection spec: {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    raise InputError("connection must be a preset name or an object")


def sample_points(C: bundle.ConnectionChartData, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [np.asarray(p, dtype=float) for p in C.base.sample_points(count, rng)]


def conventions() -> dict:
    return {
        "curvature": "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z; sec(X,Y) = R(X,Y,Y,X)",
        "operator_entry": "<R(e_i^e_j), e_k^e_l> = R(e_i,e_j,e_l,e_k)",
        "curvature_sign": 1.0,
        "gamma_bracket_sign": engine.CALIBRATED_GAMMA_SIGN,
        "literal_bracket_sign": bundle.BRACKET_SIGN,
        "calibrated_on": {"curvature_sign": "hopf", "gamma_bracket_sign": "qhopf"},
    }


def _config_echo(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


# runs -------------------------------------------------------------------------------

def run_analyze(cfg: ExperimentConfig) -> tuple[dict, int]:
    C = build_bundle(cfg)
    ts = parse_t_grid(cfg.t_grid)
    pts = sample_points(C, cfg.points, cfg.seed)
    report = {
        "command": "analyze",
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "backend": _kernels.backend(),
        "config": _config_echo(cfg),
        "bundle": C.name,
        "points": [p.tolist() for p in pts],
        "conventions": conventions(),
        "tolerances": {"criterion": cfg.criterion_tol, "anco": cfg.anco_tol,
                       "symmetry": engine.SYMMETRY_TOL, "obstruction_t": OBSTRUCTION_T},
    }
    try:
        crit = bundle.anco_criterion(C, pts, cfg.criterion_tol)
        report["criterion"] = {"holds": bool(crit["holds"]), "max_violation": float(crit["max_violation"])}
        per_point = [engine.t_sweep(C, [x], ts, use_oracle=cfg.use_oracle, criterion_tol=cfg.criterion_tol)
                     for x in pts]
    except (ArithmeticError, oracle.NumericError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        report["passed"] = False
        return report, EXIT_VERIFY
    report["per_point"] = [[r.as_dict() for r in rows] for rows in per_point]
    agg = []
    for k, t in enumerate(ts):
        lam = min(rows[k].lambda_min for rows in per_point)
        agg.append(engine.anco_report(C, t, lam, crit["holds"]))
    report["sweep"] = [r.as_dict() for r in agg]
    report["diagnostics"] = engine.sweep_diagnostics(agg)

    checks = {}
    if crit["holds"]:
        last = agg[-1].anco_quantity
        checks["anco_limit"] = {"value": last, "passed": bool(last >= -cfg.anco_tol)}
        checks["tail_monotone"] = {"passed": report["diagnostics"]["tail_abs_anco_monotone_nonincreasing"]}
    else:
        worst, applicable = -np.inf, 0
        for x, rows in zip(pts, per_point):
            lam_A = engine.min_eigenvalue(engine.block_A(C, x))
            if lam_A >= 0:
                continue
            applicable += 1
            small = [r for r in rows if r.t <= OBSTRUCTION_T] or rows[-1:]
            worst = max(worst, max(r.lambda_min - 0.5 * lam_A for r in small))
        checks["obstruction"] = {
            "points_with_negative_A": applicable,
            "max_gap_to_half_lambda_A": float(worst) if applicable else None,
            "passed": bool(applicable and worst <= 0.0),
        }
    report["checks"] = checks
    report["passed"] = all(c["passed"] for c in checks.values())
    return report, EXIT_OK if report["passed"] else EXIT_VERIFY


def run_verify(cfg: ExperimentConfig) -> tuple[dict, int]:
    C = build_bundle(cfg)
    ts = parse_t_grid(cfg.verify_t_grid)
    pts = sample_points(C, cfg.verify_points, cfg.seed)
    report = {
        "command": "verify",
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "backend": _kernels.backend(),
        "config": _config_echo(cfg),
        "bundle": C.name,
        "conventions": conventions(),
    }
    try:
        cal = oracle.calibrate_conventions()
        report["calibration"] = cal
        blocks = [oracle.compare_blocks(C, x, ts, inject_sign_error=cfg.inject_sign_error) for x in pts]
        consistency = []
        for x in pts:
            F = oracle.TrivializedMetricField(C, 1.0)
            p = F.point(x)
            s = oracle.sample(F, p)
            consistency.append({"defects": s.defects, "step_halving": oracle.step_halving_order(F, p)})
    except (ArithmeticError, oracle.NumericError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        report["passed"] = False
        return report, EXIT_VERIFY
    report["blocks"] = blocks
    report["oracle_consistency"] = consistency
    sym_ok = all(max(c["defects"].values()) <= 1e-4 for c in consistency)
    order_ok = all(c["step_halving"]["exact"] or c["step_halving"]["order"] >= 1.8 for c in consistency)
    cal_ok = cal["gamma_bracket_sign"] == cal["engine_gamma_sign"] and cal["curvature_sign"] == 1.0
    failed = sorted({f for b in blocks for f in b["failed_families"]})
    report["summary"] = {
        "families_passed": not failed,
        "failed_families": failed,
        "riemann_symmetries_passed": sym_ok,
        "step_halving_passed": order_ok,
        "calibration_consistent": cal_ok,
    }
    report["passed"] = bool(not failed and sym_ok and order_ok and cal_ok)
    return report, EXIT_OK if report["passed"] else EXIT_VERIFY


def run_topology(base: str, euler: tuple[int, ...]) -> tuple[dict, int]:
    try:
        R = topology.ProjectiveProductRing.from_spec(base)
        e = topology.EulerClass(euler)
        H = topology.gysin_total_space(R, e)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    pi1 = topology.pi1_circle_bundle(e)
    bound = topology.betti_bound_check(H, R.total_dim)
    d = H.diagnostics
    report = {
        "command": "topology",
        "schema_version": SCHEMA_VERSION,
        "base": base,
        "caps": list(R.caps),
        "euler": list(e.coeffs),
        "dimension": R.total_dim,
        "cohomology": H.as_dict(),
        "pi1": {"group": pi1["group"].as_dict(), "simply_connected": pi1["simply_connected"],
                "trivial_bundle": pi1["trivial_bundle"]},
        "betti_bound": bound,
        "flags": sorted(
            (["trivial_bundle_product_with_circle"] if e.is_zero else [])
            + ([] if pi1["simply_connected"] else ["not_simply_connected"])
        ),
    }
    ok = d["betti_symmetric"] and d["torsion_linked"] and d["euler_characteristic"] == 0 and d["gysin_rank_identity"]
    report["passed"] = bool(ok)
    return report, EXIT_OK if ok else EXIT_VERIFY


def run_topology_sweep(base: str, k: int, l_values: list[int]) -> tuple[dict, int]:
    try:
        R = topology.ProjectiveProductRing.from_spec(base)
        if len(R.caps) != 2:
            raise ValueError("topology-sweep needs a two-factor base")
        classes = [(k, l) for l in l_values]
        part = topology.distinct_homotopy_types(R, classes)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = []
    for (kk, l), cid in zip(classes, part["class_ids"]):
        H4 = topology.gysin_total_space(R, topology.EulerClass((kk, l)), rank_identity=False)[4]
        rows.append({"l": l, "H4_torsion_order": H4.torsion_order, "distinct_class_id": cid})
    report = {
        "command": "topology-sweep",
        "schema_version": SCHEMA_VERSION,
        "base": base,
        "k": k,
        "rows": rows,
        "distinct_classes": part["count"],
        "verdicts": part["verdicts"],
        "invariant": "graded integral cohomology (necessary condition only)",
        "passed": True,
    }
    return report, EXIT_OK


def run_demo(seed: int) -> tuple[dict, int]:
    short = "2^0..2^-8"
    out, code = {"command": "demo", "schema_version": SCHEMA_VERSION}, EXIT_OK
    for name in ("pkl:1:2", "su2-demo"):
        cfg = preset_config(name)
        cfg.t_grid, cfg.points, cfg.seed = short, 2, seed
        rep, c = run_analyze(cfg)
        out[f"analyze:{name}"] = {"criterion": rep["criterion"], "checks": rep["checks"],
                                  "last": rep["sweep"][-1]}
        code = max(code, c)
    vcfg = preset_config("hopf")
    vcfg.seed = seed
    rep, c = run_verify(vcfg)
    out["verify:hopf"] = rep["summary"]
    code = max(code, c)
    rep, c = run_topology("cp:1,cp:2", (1, 2))
    out["topology:1,2"] = {"H4": rep["cohomology"]["groups"]["H4"]["str"], "betti_bound": rep["betti_bound"]["pass"]}
    out["passed"] = code == EXIT_OK
    return out, code


# output -----------------------------------------------------------------------------

def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


SWEEP_COLUMNS = ["t", "lambda_min", "diam_bound", "anco_quantity", "criterion_verdict"]
TOPOLOGY_SWEEP_COLUMNS = ["l", "H4_torsion_order", "distinct_class_id"]
VERIFY_COLUMNS = ["point", "family", "c0_error", "c1_max", "fit_residual", "passed"]


def to_csv(report: dict) -> str:
    cmd = report.get("command")
    if cmd == "analyze":
        return _csv(report.get("sweep", []), SWEEP_COLUMNS)
    if cmd == "topology-sweep":
        return _csv(report["rows"], TOPOLOGY_SWEEP_COLUMNS)
    if cmd == "verify":
        rows = [dict(f, point=i) for i, b in enumerate(report.get("blocks", [])) for f in b["families"]]
        return _csv(rows, VERIFY_COLUMNS)
    raise InputError(f"--format csv is not available for {cmd}")


def emit(report: dict, fmt: str, out: str | None) -> None:
    text = to_csv(report) if fmt == "csv" else to_json(report)
    if not out:
        sys.stdout.write(text)
        return
    path = Path(out)
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir and not path.is_absolute():
        path = Path(env_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# argparse -------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ancolab", description="Curvature operators of collapsing principal bundles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, sweep=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"named experiment: {', '.join(PRESET_NAMES)}")
        p.add_argument("--seed", type=int, help="sample-point seed (default 0)")
        p.add_argument("--points", type=int, help="number of sample points")
        if sweep:
            p.add_argument("--t-grid", dest="t_grid", help="2^a..2^b or comma list (default 2^0..2^-14)")
        p.add_argument("--out", help=f"output file (relative paths go under ${OUTPUT_DIR_ENV} when set)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("analyze", help="t-sweep of the smallest curvature-operator eigenvalue")
    common(p)
    p.add_argument("--oracle", action="store_true", help="use the finite-difference operator instead of the truncated assembly")

    p = sub.add_parser("verify", help="compare closed-form blocks with the finite-difference oracle")
    common(p, sweep=False)
    p.add_argument("--inject-sign-error", action="store_true", help="test hook: flip the predicted hh leading term")

    p = sub.add_parser("topology", help="cohomology of a circle bundle over a product of CP^m")
    p.add_argument("--base", default="cp:1,cp:2")
    p.add_argument("--euler", required=True, help="comma list of Euler class coefficients")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json",), default="json")

    p = sub.add_parser("topology-sweep", help="H^4 torsion and distinct cohomology classes over l")
    p.add_argument("--base", default="cp:1,cp:2")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--l-range", dest="l_range", default="1..50")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="csv")

    p = sub.add_parser("demo", help="short tour of every subcommand")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json",), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            report, code = run_analyze(build_config(args))
        elif args.command == "verify":
            report, code = run_verify(build_config(args))
        elif args.command == "topology":
            report, code = run_topology(args.base, parse_int_list(args.euler))
        elif args.command == "topology-sweep":
            report, code = run_topology_sweep(args.base, args.k, parse_range(args.l_range))
        else:
            report, code = run_demo(args.seed)
        emit(report, args.format, args.out)
    except InputError as exc:
        print(f"ancolab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except geometry.DomainError as exc:
        print(f"ancolab: domain error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if code == EXIT_VERIFY:
        failed = report.get("summary", {}).get("failed_families") or report.get("error") or "checks failed"
        print(f"ancolab: verification failure: {failed}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
