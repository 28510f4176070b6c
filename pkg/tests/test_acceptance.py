"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from gaugekit import balayage as bl
from gaugekit import bounds as bd
from gaugekit import cli
from gaugekit import domain as dom
from gaugekit import measure as ms
from gaugekit import operator as opm
from gaugekit import oracle as orc
from gaugekit import riccati as rc
from gaugekit.balayage import BoundaryData

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
D = dom.BallDomain.unit(3)
BALL = ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, f"acceptance {number} failed: {detail}"

    return emit


def _at_norm(spec, resolution, target, rule="gauss"):
    op = opm.assemble(D, ms.discretize(spec, D, resolution, rule=rule))
    return opm.rescaled(op, target / op.norm_estimate)


def test_01_unperturbed_identities(report):
    t0 = time.perf_counter()
    zero = opm.assemble(D, ms.discretize(ms.MeasureSpec.radial("constant", 0.0, (0.0, 0.5)), D, (4, 16)))
    q = dom.sphere_quadrature(D, 3200)
    rng = np.random.default_rng(1)
    x = bd.ball_sampler(D.center, 1.0, 0.9)(rng, 20)
    z = q.nodes[rng.integers(0, len(q), 20)]
    f = BoundaryData.on_nodes(1.0 + q.nodes[:, 0] + q.nodes[:, 1] * q.nodes[:, 2])
    errs = {
        "u1": np.max(np.abs(opm.gauge(D, zero, x).point_values - 1.0)),
        "uf": np.max(np.abs(opm.minimal_solution_uf(D, zero, f, q, points=x).point_values
                            / dom.harmonic_extension(D, f, x, q) - 1.0)),
        "M": np.max(np.abs(opm.perturbed_martin(D, zero, x, z) / dom.martin(D, x, z) - 1.0)),
        "U": np.max(np.abs(opm.conditional_gauge(D, zero, x, z) - 1.0)),
    }
    dt = time.perf_counter() - t0
    ok = all(e <= 1e-10 for e in errs.values()) and dt < 1.0
    report(1, "unperturbed identities", ok, " ".join(f"{k}={v:.1e}" for k, v in errs.items()) + f" t={dt:.2f}s")


def test_02_oracle_equivalence(report):
    t0 = time.perf_counter()
    worst_solve = worst_norm = 0.0
    specs = [(BALL, (5, 40), "spiral"), (ms.MeasureSpec.radial("linear", 3.0, (0.1, 0.7)), (6, 72), "gauss")]
    sizes = []
    for spec, res, rule in specs:
        base = opm.assemble(D, ms.discretize(spec, D, res, rule=rule))
        sizes.append(base.size)
        lam = orc.dense_spectrum(base)[-1]
        worst_norm = max(worst_norm, abs(base.norm_estimate - lam) / lam)
        for target in (0.3, 0.6, 0.9):
            op = opm.rescaled(base, target / base.norm_estimate)
            assert op.certified and op.norm_bracket[1] <= 0.9 + 1e-9
            g0 = 1.0 + op.nodes[:, 0]
            ns = opm.neumann_sum(op, g0, tol=1e-12)
            ref = orc.direct_solve(op, g0)
            worst_solve = max(worst_solve, np.max(np.abs(ns.values - ref)) / np.max(np.abs(ref)))
    dt = time.perf_counter() - t0
    ok = max(sizes) <= 500 and worst_solve <= 1e-8 and worst_norm <= 1e-6 and dt < 10
    report(2, "Neumann vs direct, power vs dense", ok,
           f"N={sizes} solve={worst_solve:.1e} norm={worst_norm:.1e} t={dt:.1f}s")


def test_03_radial_cross_validation(report):
    t0 = time.perf_counter()
    base = opm.assemble(D, ms.discretize(BALL, D, (64, 200)))
    scale = 0.5 / base.norm_estimate
    op = opm.rescaled(base, scale)
    g = opm.gauge(D, op, D.x0).point_values
    g = float(np.ravel(g)[0])
    u = rc.radial_gauge_ode(D, ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, scale), 4000)
    err = abs(g - u.values[0]) / u.values[0]
    dt = time.perf_counter() - t0
    report(3, "gauge at the center vs radial ODE", err < 1e-4 and dt < 60 and base.size >= 64 * 200,
           f"N={base.size} rel={err:.2e} t={dt:.1f}s")


def test_04_bilateral_sandwich(report):
    t0 = time.perf_counter()
    base = opm.assemble(D, ms.discretize(BALL, D, (24, 128)))
    q = dom.sphere_quadrature(D, 200)
    rng = np.random.default_rng(4)
    x = bd.ball_sampler(D.center, 1.0, 0.95)(rng, 50)
    z = q.nodes[rng.integers(0, len(q), 50)]
    Cs, lower = [], True
    for target in (0.25, 0.5, 0.75):
        v = bd.verify_sandwich(D, opm.rescaled(base, target / base.norm_estimate), x, z)
        lower &= v.all_lower_ok and v.complete
        Cs.append(v.empirical_C)
    dt = time.perf_counter() - t0
    ok = lower and all(np.isfinite(Cs)) and Cs[0] <= Cs[1] <= Cs[2] and dt < 120
    report(4, "bilateral sandwich", ok, f"C={['%.3f' % c for c in Cs]} t={dt:.1f}s")


def test_05_solution_bracket(report):
    op = _at_norm(BALL, (12, 64), 0.5)
    q = dom.sphere_quadrature(D, 200)
    rng = np.random.default_rng(5)
    x = bd.ball_sampler(D.center, 1.0, 0.9)(rng, 20)
    X, Z = np.repeat(x, 10, 0), np.tile(q.nodes[::20], (20, 1))
    C = bd.verify_sandwich(D, op, X, Z).empirical_C
    ok, detail = True, []
    for name, f in (("1", BoundaryData.constant(1.0)), ("1+z1", BoundaryData.on_nodes(1.0 + q.nodes[:, 0]))):
        lo, up = bd.pointwise_solution_bounds(D, op, f, x, q, C)
        uf = opm.minimal_solution_uf(D, op, f, q, points=x).point_values
        slack = 1e-9
        good = np.all(lo <= uf * (1 + slack)) and np.all(uf <= up * (1 + slack))
        ok &= bool(good)
        detail.append(f"f={name}:{'ok' if good else 'violated'}")
    report(5, "solution bracket", ok, f"C={C:.3f} " + " ".join(detail))


def test_06_existence_dichotomy(report):
    base = opm.assemble(D, ms.discretize(BALL, D, (5, 40), rule="spiral"))
    lam = orc.dense_spectrum(base)[-1]
    q = dom.sphere_quadrature(D, 200)
    f = BoundaryData.on_nodes(1.0 + q.nodes[:, 0])

    def verdict(s, witness=True):
        op = opm.rescaled(base, s / lam)
        return bl.existence_verdict(D, op.measure, f, q, op=op, witness=witness)

    factors = [0.5, 0.8, 0.95, 1.05, 1.2, 1.5]
    reps = [verdict(s) for s in factors]
    labels = [r.verdict for r in reps]
    flips = sum(a != b for a, b in zip(labels, labels[1:]))
    below = [r for s, r in zip(factors, reps) if s < 1]
    above = [r for s, r in zip(factors, reps) if s > 1]
    ok = flips == 1 and labels[0] == "exists_certified" and labels[-1] == "nonexistence_certified"
    ok &= all(r.witness_converged and np.isfinite(r.criterion[1.0]) for r in below)
    for s in factors[3:]:
        op = opm.rescaled(base, s / lam)
        res = opm.gauge(D, op)
        ok &= (not res.converged) and res.partial_max[-1] > 1e6
    ok &= all(not r.witness_converged for r in above)
    lo, hi = 0.5, 1.5
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if verdict(mid, witness=False).verdict == "exists_certified":
            lo = mid
        else:
            hi = mid
    crossing = 0.5 * (lo + hi)  # in units of 1 / lambda_dense
    ok &= abs(crossing - 1.0) < 0.01
    report(6, "existence dichotomy", ok, f"verdicts={labels} crossing={crossing:.6f}/lambda")


def test_07_atomic_obstruction(report):
    q = dom.sphere_quadrature(D, 200)
    ok, norms = True, []
    for atoms in ([((0.3, 0.0, 0.0), 1e-8)], [((0.0, 0.1, 0.2), 2.0), ((-0.5, 0.0, 0.0), 0.5)]):
        mu = ms.discretize(ms.MeasureSpec.from_atoms(atoms), D)
        rep = bl.existence_verdict(D, mu, BoundaryData.constant(1.0), q)
        norms.append(rep.norm)
        ok &= rep.norm == np.inf and rep.verdict == "nonexistence_certified"
    report(7, "atomic obstruction", ok, f"norms={norms}")


def test_08_quasimetric_suite(report):
    riesz = bd.quasimetric_kappa(bd.riesz_kernel(3), bd.unit_modifier, 100_000, 8,
                                 bd.ball_sampler(np.zeros(3), 1.0))
    ok = riesz.kappa <= 1 + 1e-12 and riesz.punctured_kappa <= 4 * riesz.kappa**2 + 1e-9
    q = dom.sphere_quadrature(D, 200)
    zs = q.nodes[np.random.default_rng(8).choice(len(q), 12, replace=False)]
    kappas = []
    for z in zs:
        a = bd.green_kappa(D, 4000, seed=8, z=z)
        b = bd.green_kappa(D, 4000, seed=8, z=z)
        ok &= a == b and np.isfinite(a.kappa) and a.punctured_kappa <= 4 * a.kappa**2 + 1e-9
        kappas.append(a.kappa)
    report(8, "quasi-metric suite", ok,
           f"riesz={riesz.kappa:.15f} punctured={riesz.punctured_kappa:.4f} martin_max={max(kappas):.3f}")


def test_09_boundary_limit(report):
    mu = ms.discretize(ms.MeasureSpec.radial("linear", 2.0, (0.1, 0.6)), D, (12, 800))
    q = dom.sphere_quadrature(D, 200)
    worst_g = worst_m = 0.0
    for z in q.nodes[::40]:
        lim = bl.boundary_ratio_limit(D, mu, z, steps=10)
        worst_g = max(worst_g, lim.errors[-1])
        worst_m = max(worst_m, abs(lim.ratio_m[-1] - lim.m_star))
    ok = worst_g < 1e-3 and worst_m < 1e-3
    report(9, "boundary limit", ok, f"green={worst_g:.1e} m={worst_m:.1e} at distance 2^-10")


def test_10_riccati(report):
    tol = 1e-10
    base = opm.assemble(D, ms.discretize(BALL, D, (12, 64)))
    scale = 0.5 / base.norm_estimate
    spec = ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, scale)
    grids = (500, 1000, 2000, 4000)
    res = [rc.riccati_residual(D, rc.log_transform(rc.radial_gauge_ode(D, spec, m)), spec) for m in grids]
    rates = [a / b for a, b in zip(res, res[1:])]
    op = opm.rescaled(base, scale)
    g = opm.gauge(D, op, tol=tol)
    sup = rc.supersolution_check(D, op, np.log(g.values), tol)
    zero = rc.supersolution_check(D, op, np.zeros(op.size), tol)
    ok = res[2] < 1e-3 and all(r >= 2 for r in rates) and sup.margin >= -10 * tol and not zero.passed
    report(10, "Riccati transform", ok,
           f"residual@2000={res[2]:.1e} rates={['%.2f' % r for r in rates]} margin={sup.margin:.1e}")


def test_11_determinism(report, tmp_path):
    doc = json.loads((CONFIGS / "radial_study.json").read_text())
    cfg = tmp_path / "study.json"
    cfg.write_text(json.dumps(doc))
    for name in ("a", "b"):
        assert cli.main(["run", str(cfg), "--out", str(tmp_path / name)]) == 0
    same = (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same &= all((tmp_path / "a" / c).read_bytes() == (tmp_path / "b" / c).read_bytes() for c in csvs)
    report(11, "determinism", same, f"report.json and {len(csvs)} CSVs compared")
