"""Command line front end: ``gaugekit run | sweep | validate``.

Exit codes: 0 analyses completed (whatever the verdicts), 2 config error,
3 resource ceiling.  Reports are written with 17 significant digits and
contain no timing data, so identical configs give identical bytes; run
times go to a ``timings.json`` sidecar.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import _backend
from . import balayage as bl
from . import bounds
from . import domain as dom
from . import operator as opm
from . import riccati as rc
from .config import ConfigError, Experiment, build, load, set_path
from .errors import GaugekitError, ResourceError
from .measure import discretize, node_count

log = logging.getLogger("gaugekit")

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE = 0, 2, 3
REPORT_FORMAT = "gaugekit-report/1"
# Execution order; the report keeps the config order.
STAGES = ("gauge", "uf", "u_k", "sandwich", "kappa", "boundary_limit", "riccati", "existence")
SUMMARY_COLUMNS = ("value", "norm", "norm_lower", "norm_upper", "gauge_x0", "empirical_C", "criterion_C1",
                   "criterion_Csuff", "verdict")


# ---------------------------------------------------------------------------
# serialization


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return "%.17g" % x


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def dumps(obj, indent: int = 0) -> str:
    """JSON text with every real printed as ``%.17g`` and inf/nan as strings."""
    obj = _plain(obj)
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# analyses


class Study:
    """Discretization, operator and cached intermediate results of one config."""

    def __init__(self, exp: Experiment):
        self.exp = exp
        cfg = exp.config
        self.solver = cfg["solver"]
        self.ev = cfg["evaluation"]
        self.tol = float(self.solver["tol"])
        self.max_terms = int(self.solver["max_terms"])
        self.seed = int(self.solver["seed"])
        self.tables: dict[str, tuple] = {}
        self.cache: dict = {}
        self.scale = 1.0
        self._assemble()

    @property
    def d(self) -> dom.BallDomain:
        return self.exp.domain

    def _assemble(self):
        exp = self.exp
        limit = int(self.solver["max_nodes"])
        size = node_count(exp.spec, self.d, exp.resolution, exp.rule)
        if size > limit:
            raise ResourceError(f"measure discretization needs {size} nodes > max_nodes={limit}",
                                sizes=(size, limit))
        mu = discretize(exp.spec, self.d, exp.resolution, exp.rule)
        op = opm.assemble(self.d, mu, self.tol, self.seed, self.solver["norm_method"])
        if exp.target_norm is not None and not op.divergent:
            if op.norm_estimate == 0.0:
                raise ConfigError("measure.target_norm: measure has zero norm", "measure.target_norm")
            self.scale = exp.target_norm / op.norm_estimate
            op = opm.rescaled(op, self.scale)
        self.spec = exp.spec.scaled(self.scale)
        self.mu = op.measure
        self.op = op

    def discretization(self) -> dict:
        mu, exp = self.mu, self.exp
        return {
            "nodes": len(mu),
            "resolution": list(exp.resolution) if exp.spec.kind != "atoms" else None,
            "rule": exp.rule,
            "sphere_nodes": len(exp.quadrature),
            "sphere_rule": exp.quadrature.rule,
            "measure_scale": self.scale,
            "mass": mu.mass,
            "analytic_mass": self.spec.analytic_mass(self.d),
            "diagonal_clipped": mu.meta.get("diagonal_clipped", 0),
            "sphere_total_error": abs(exp.quadrature.total - self.d.surface_area),
        }

    def norm(self) -> dict:
        op = self.op
        return {
            "estimate": op.norm_estimate,
            "method": op.norm_method,
            "lower": op.norm_bracket[0],
            "upper": op.norm_bracket[1],
            "tol": op.norm_tol,
            "iterations": op.iterations,
            "contraction": op.contraction,
            "status": op.status,
        }

    # --- series -----------------------------------------------------------

    def _series(self, res: opm.NeumannResult, points) -> dict:
        out = {
            "status": res.status,
            "converged": res.converged,
            "terms": res.terms_used,
            "tail_bound": res.tail_bound,
            "tol": self.tol,
            "node_min": float(np.min(res.values)),
            "node_max": float(np.max(res.values)),
        }
        if res.point_values is not None:
            out["points"] = points
            out["values"] = res.point_values
            out["abs_error"] = res.point_tail
        return out

    def gauge_result(self):
        if "gauge" not in self.cache:
            self.cache["gauge"] = opm.gauge(self.d, self.op, self.exp.points, self.tol, self.max_terms)
        return self.cache["gauge"]

    def run_gauge(self) -> dict:
        res = self.gauge_result()
        pts = self.exp.points
        self.tables["gauge"] = (
            [f"x{i}" for i in range(self.d.dim)] + ["u1", "abs_error"],
            [list(p) + [v, res.point_tail] for p, v in zip(pts, res.point_values)],
        )
        return self._series(res, pts)

    def run_uf(self) -> dict:
        f, q, pts = self.exp.boundary, self.exp.quadrature, self.exp.points
        if f.is_measure:
            res = opm.minimal_solution_uh(self.d, self.op, (np.asarray(f.points), np.asarray(f.masses)),
                                          points=pts, tol=self.tol, max_terms=self.max_terms)
            kind = "u_h"
        else:
            res = opm.minimal_solution_uf(self.d, self.op, f, q, pts, self.tol, self.max_terms)
            kind = "u_f"
        self.cache["uf"] = res
        out = {"solution": kind}
        out.update(self._series(res, pts))
        return out

    def run_u_k(self) -> dict:
        uk = opm.u_K(self.d, self.op, self.exp.region, self.tol, self.max_terms, q=self.exp.quadrature)
        out = {
            "region": _region_dict(self.exp.region),
            "c_K": uk.c_K,
            "C_K": uk.C_K,
            "c_K_nodes": uk.c_K_nodes,
            "C_K_nodes": uk.C_K_nodes,
            "exp_constant": uk.exp_constant,
        }
        out.update(self._series(uk.series, None))
        if uk.series.converged:
            zs = self.z_sample()
            chk = bl.mu0_claim_check(self.d, self.op, self.exp.region, zs, tol=self.tol, q=self.exp.quadrature)
            out["claim"] = {
                "C": chk.C,
                "holds": chk.holds,
                "upper_margin_min": float(np.min(chk.upper_margin)),
                "lower_margin_min": float(np.min(chk.lower_margin)),
                "z_count": len(zs),
            }
        return out

    # --- bounds -----------------------------------------------------------

    def z_sample(self) -> np.ndarray:
        q = self.exp.quadrature
        k = min(int(self.ev["z_count"]), len(q))
        idx = np.round(np.linspace(0, len(q) - 1, k)).astype(int)
        return q.nodes[idx]

    def sandwich_sample(self):
        rng = np.random.default_rng(self.seed)
        count = int(self.ev["sample_count"])
        xs = bounds.ball_sampler(self.d.center, self.d.radius, 0.95)(rng, count)
        q = self.exp.quadrature
        zs = q.nodes[rng.integers(0, len(q), size=count)]
        return xs, zs

    def sandwich_result(self):
        if "sandwich" not in self.cache:
            xs, zs = self.sandwich_sample()
            self.cache["sandwich"] = bounds.verify_sandwich(self.d, self.op, xs, zs, self.tol)
        return self.cache["sandwich"]

    def run_sandwich(self) -> dict:
        sv = self.sandwich_result()
        n = self.d.dim
        self.tables["sandwich"] = (
            [f"x{i}" for i in range(n)] + [f"z{i}" for i in range(n)] + ["M", "TM", "M_perturbed", "lower_ok"],
            [list(x) + list(z) + [m, t, p, int(ok)]
             for x, z, m, t, p, ok in zip(sv.x, sv.z, sv.martin, sv.tm, sv.perturbed, sv.lower_ok)],
        )
        with np.errstate(invalid="ignore", over="ignore"):
            lower = sv.martin * np.exp(sv.tm / sv.martin)
            margin = np.where(np.isfinite(sv.perturbed), sv.perturbed / lower - 1.0, -np.inf)
        out = {
            "samples": len(sv.x),
            "lower_ok": int(np.sum(sv.lower_ok)),
            "all_lower_ok": sv.all_lower_ok,
            "slack": 10.0 * self.tol,
            "min_relative_margin": float(np.min(margin)),
            "empirical_C": sv.empirical_C,
            "complete": sv.complete,
            "failures": sv.failures,
        }
        f = self.exp.boundary
        if not f.is_measure and np.isfinite(sv.empirical_C):
            lo, hi = bounds.pointwise_solution_bounds(self.d, self.op, f, self.exp.points, self.exp.quadrature,
                                                      sv.empirical_C)
            out["solution_bracket"] = {"points": self.exp.points, "lower": lo, "upper": hi}
            if "uf" in self.cache and self.cache["uf"].point_values is not None:
                u = self.cache["uf"].point_values
                out["solution_bracket"]["inside"] = bool(np.all((lo <= u * (1 + 10 * self.tol))
                                                                & (u <= hi * (1 + 10 * self.tol))))
        return out

    def run_kappa(self) -> dict:
        s = int(self.ev["kappa_samples"])
        n = self.d.dim
        unit = bounds.quasimetric_kappa(bounds.riesz_kernel(n), bounds.unit_modifier, s, self.seed,
                                        bounds.ball_sampler(self.d.center, self.d.radius), "riesz/unit")
        green = bounds.green_kappa(self.d, s, self.seed)
        martin = [bounds.green_kappa(self.d, s, self.seed + 1 + i, z=z) for i, z in enumerate(self.z_sample())]

        def rep(r):
            return {"kernel": r.kernel_id, "kappa": r.kappa, "punctured_kappa": r.punctured_kappa,
                    "punctured_bound_ok": r.punctured_kappa <= 4 * r.kappa**2 + 1e-9,
                    "triples": r.triple_count, "skipped": r.skipped, "seed": r.seed}

        return {"riesz_unit": rep(unit), "green_m": rep(green), "green_martin": [rep(r) for r in martin],
                "martin_kappa_max": max(r.kappa for r in martin)}

    def run_boundary_limit(self) -> dict:
        steps = int(self.ev["boundary_steps"])
        rows, worst, monotone = [], 0.0, True
        for i, z in enumerate(self.z_sample()):
            r = bl.boundary_ratio_limit(self.d, self.mu, z, steps)
            monotone &= r.monotone
            worst = max(worst, float(r.errors[-1]), abs(float(r.ratio_m[-1]) - r.m_star))
            rows += [[i, k + 1, r.distances[k], r.ratio_green[k], r.ratio_m[k], r.m_star, r.errors[k]]
                     for k in range(steps)]
        self.tables["boundary_limit"] = (["z_index", "step", "distance", "ratio_green", "ratio_m", "m_star",
                                          "error"], rows)
        return {"steps": steps, "final_distance": self.d.radius * 2.0**-steps, "max_final_error": worst,
                "monotone": monotone, "z_count": len(self.z_sample())}

    def run_riccati(self) -> dict:
        spec = self.spec
        centered = spec.kind == "radial_density" or (
            spec.kind == "uniform_ball_density" and np.allclose(spec.center, self.d.center))
        if not centered:
            return {"skipped": "needs a density radial about the domain center"}
        M = int(self.ev["riccati_grid"])
        grids = [max(M // 4, 16), max(M // 2, 16), M]
        u = rc.radial_gauge_ode(self.d, spec, M)
        out = {"grid": M, "ode_exists": u.exists}
        if not u.exists:
            return out
        residuals = [rc.riccati_residual(self.d, rc.log_transform(rc.radial_gauge_ode(self.d, spec, g)), spec)
                     for g in grids]
        out.update({
            "ode_u0": u.values[0],
            "residual_grids": grids,
            "residuals": residuals,
            "residual_ratios": [residuals[i] / residuals[i + 1] if residuals[i + 1] > 0 else float("inf")
                                for i in range(len(grids) - 1)],
        })
        self.tables["riccati"] = (["grid", "residual"], [[g, r] for g, r in zip(grids, residuals)])
        res = self.gauge_result()
        if res.converged:
            center = np.atleast_2d(self.d.center)
            g0 = opm.gauge(self.d, self.op, center, self.tol, self.max_terms).point_values[0]
            out["series_u0"] = g0
            out["relative_difference"] = abs(g0 - u.values[0]) / abs(u.values[0])
            sup = rc.supersolution_check(self.d, self.op, np.log(res.values), self.tol)
            zero = rc.supersolution_check(self.d, self.op, np.zeros(self.op.size), self.tol)
            out["supersolution_margin"] = sup.margin
            out["supersolution_passed"] = sup.passed
            out["zero_v_passed"] = zero.passed
        return out

    def run_existence(self) -> dict:
        cs = self.ev.get("C_suff")
        if cs is None and "sandwich" in self.cache and np.isfinite(self.cache["sandwich"].empirical_C):
            cs = self.cache["sandwich"].empirical_C
        rep = bl.existence_verdict(self.d, self.mu, self.exp.boundary, self.exp.quadrature, cs, self.op,
                                   self.tol, self.max_terms, seed=self.seed)
        self.cache["existence"] = rep
        return {
            "verdict": rep.verdict,
            "norm": rep.norm,
            "norm_bracket": rep.norm_bracket,
            "C_suff": rep.C_suff,
            "criterion_C1": rep.necessary_integral,
            "criterion_Csuff": rep.sufficient_integral,
            "Mstar_min": float(np.min(rep.Mstar_values)),
            "Mstar_max": float(np.max(rep.Mstar_values)),
            "witness_converged": rep.witness_converged,
            "witness_terms": rep.witness_terms,
            "notes": rep.notes,
        }


def _region_dict(region) -> dict:
    if hasattr(region, "radius"):
        return {"center": list(region.center), "radius": region.radius}
    return {"center": list(region.center), "inner": region.inner, "outer": region.outer}


def run_study(doc: dict):
    """Build and run every analysis of ``doc``; returns (report, tables, timings)."""
    t0 = time.perf_counter()
    exp = build(doc)
    study = Study(exp)
    timings = {"assemble": time.perf_counter() - t0}
    results = {}
    requested = exp.config["analyses"]
    for name in STAGES:
        if name not in requested:
            continue
        t = time.perf_counter()
        try:
            results[name] = getattr(study, f"run_{name}")()
        except ResourceError:
            raise
        except GaugekitError as exc:
            results[name] = {"error": type(exc).__name__, "message": str(exc)}
        timings[name] = time.perf_counter() - t
    report = {
        "format": REPORT_FORMAT,
        "config": exp.config,
        "discretization": study.discretization(),
        "norm": study.norm(),
        "analyses": {name: results[name] for name in requested},
    }
    timings["total"] = time.perf_counter() - t0
    timings["backend"] = _backend.NAME
    return report, study.tables, timings, study


def write_outputs(out_dir: Path, report: dict, tables: dict, timings: dict, report_name: str, csv_on: bool):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / report_name).write_text(dumps(report) + "\n", encoding="utf-8")
    (out_dir / "timings.json").write_text(dumps(timings) + "\n", encoding="utf-8")
    if csv_on:
        for name, (header, rows) in tables.items():
            write_csv(out_dir / f"{name}.csv", header, rows)


def _summary_row(value, report: dict) -> list:
    a = report["analyses"]
    norm = report["norm"]
    g = a.get("gauge", {})
    ex = a.get("existence", {})
    sw = a.get("sandwich", {})
    gauge_x0 = g["values"][0] if "values" in g else float("nan")
    emp = sw.get("empirical_C", ex.get("C_suff"))
    cs = ex.get("criterion_Csuff")
    return [float(value), norm["estimate"], norm["lower"], norm["upper"], gauge_x0,
            float("nan") if emp is None else emp, ex.get("criterion_C1", float("nan")),
            float("nan") if cs is None else cs, ex.get("verdict", "")]


def _threads() -> int:
    raw = os.environ.get("GAUGEKIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GAUGEKIT_THREADS must be a positive integer, got {raw!r}", "GAUGEKIT_THREADS")
    if n < 1:
        raise ConfigError(f"GAUGEKIT_THREADS must be a positive integer, got {raw!r}", "GAUGEKIT_THREADS")
    return n


def _output_dir(doc: dict, arg, config_path: Path) -> Path:
    if arg is not None:
        return Path(arg)
    rel = Path(doc.get("output", {}).get("dir", "."))
    return rel if rel.is_absolute() else config_path.parent / rel


def cmd_validate(args) -> int:
    doc = load(args.config)
    build(doc)
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_run(args) -> int:
    _threads()
    doc = load(args.config)
    report, tables, timings, _ = run_study(doc)
    out = report["config"]["output"]
    out_dir = _output_dir(doc, args.out, Path(args.config))
    write_outputs(out_dir, report, tables, timings, out["report"], out["csv"])
    print(out_dir / out["report"])
    return EXIT_OK


def _sweep_point(doc):
    report, tables, timings, _ = run_study(doc)
    return report, tables, timings


def cmd_sweep(args) -> int:
    workers = _threads()
    doc = load(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values: {exc}", "--values") from exc
    if not values:
        raise ConfigError("--values: empty list", "--values")
    docs = []
    for v in values:
        point = set_path(doc, args.param, v)
        for needed in ("gauge", "existence"):
            if needed not in point["analyses"]:
                point["analyses"].append(needed)
        build(point)
        docs.append(point)
    if workers > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(docs))) as pool:
            results = list(pool.map(_sweep_point, docs))
    else:
        results = [_sweep_point(p) for p in docs]
    out_dir = _output_dir(doc, args.out, Path(args.config))
    out_cfg = {"report": "report.json", "csv": True}
    out_cfg.update(doc.get("output", {}))
    rows = []
    for i, (v, (report, tables, timings)) in enumerate(zip(values, results)):
        write_outputs(out_dir / f"point_{i:03d}", report, tables, timings, out_cfg["report"], out_cfg["csv"])
        rows.append(_summary_row(v, report))
    write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, rows)
    print(out_dir / "summary.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaugekit", description="Gauge and perturbed Martin kernel studies on balls.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the analyses of a config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="run a config over values of one numeric entry")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="dotted config path, e.g. measure.amplitude")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource error: {exc} (sizes {exc.sizes})", file=sys.stderr)
        return EXIT_RESOURCE
    except MemoryError:
        print("resource error: out of memory", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
