import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaugekit import balayage as bl
from gaugekit import domain as dom
from gaugekit import measure as ms
from gaugekit import operator as opm
from gaugekit.balayage import BoundaryData
from gaugekit.errors import DataError, UsageError, ValidationError

from conftest import scaled_operator


@pytest.fixture(scope="module")
def half(small_ball_op):
    return scaled_operator(small_ball_op, 0.5)


@pytest.fixture(scope="module")
def fine_ball(unit3):
    return ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), unit3, (8, 800))


@pytest.mark.parametrize("bad", [
    lambda: BoundaryData.constant(-1.0),
    lambda: BoundaryData.constant(0.0),
    lambda: BoundaryData.on_nodes([1.0, np.nan]),
    lambda: BoundaryData.atoms([[1.0, 0, 0]], [1.0, 2.0]),
    lambda: BoundaryData("weird", value=1.0),
])
def test_boundary_data_validation(bad):
    with pytest.raises(ValidationError):
        bad()


def test_boundary_data_access(unit3, q200):
    with pytest.raises(DataError):
        BoundaryData.on_nodes([1.0, 2.0]).node_values(q200)
    with pytest.raises(UsageError):
        BoundaryData.atoms([[1.0, 0, 0]], [1.0]).node_values(q200)
    f = BoundaryData.from_function(lambda z: 1.0 + z[:, 0], q200)
    pts, w = f.boundary_measure(unit3, q200)
    assert np.allclose(w, (1.0 + q200.nodes[:, 0]) * dom.harmonic_measure_weights(unit3, q200))
    assert BoundaryData.harmonic_measure(unit3, q200).is_measure


def test_m_star_zero_and_mass(unit3, q200, fine_ball):
    empty = ms.restrict(fine_ball, ms.EmptyRegion())
    assert np.all(bl.m_star(unit3, empty, q200.nodes) == 0)
    # for a radial measure the spherical mean of M(., z) is M(0, z) = 1
    vals = bl.m_star(unit3, fine_ball, q200.nodes)
    assert np.allclose(vals, np.pi / 6, rtol=1e-8)


@given(st.floats(0, 2 * np.pi), st.floats(-1, 1))
def test_balayage_rotation_invariant(theta, c):
    d = dom.BallDomain.unit(3)
    mu = _fine()
    s = np.sqrt(1 - c * c)
    z1 = np.array([s * np.cos(theta), s * np.sin(theta), c])
    ref = bl.balayage_m(d, mu, np.array([0.0, 0.0, 1.0]))
    assert bl.balayage_m(d, mu, z1) == pytest.approx(ref, rel=1e-8)


_cache = {}


def _fine():
    if "mu" not in _cache:
        d = dom.BallDomain.unit(3)
        _cache["mu"] = ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), d, (8, 800))
    return _cache["mu"]


def test_criterion_integral(unit3, q200, half):
    zero = ms.weight_by(half.measure, lambda x: 0.0 * x[:, 0])
    one = BoundaryData.constant(1.0)
    assert bl.criterion_integral(unit3, zero, one, q200, 1.0) == pytest.approx(1.0, rel=1e-12)
    vals = [bl.criterion_integral(unit3, half.measure, one, q200, C) for C in (0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(vals) > 0)
    ms_ = bl.balayage_m(unit3, half.measure, q200.nodes)
    assert vals[1] == pytest.approx(np.sum(np.exp(ms_) * dom.harmonic_measure_weights(unit3, q200)), rel=1e-14)
    with pytest.raises(ValidationError):
        bl.criterion_integral(unit3, half.measure, one, q200, 0.0)
    huge = ms.weight_by(half.measure, lambda x: 1e6 + 0 * x[:, 0])
    assert bl.criterion_integral(unit3, huge, one, q200, 1.0) == np.inf


def test_harmonic_measure_matches_constant(unit3, q200, half):
    a = bl.criterion_integral(unit3, half.measure, BoundaryData.constant(1.0), q200, 1.5)
    b = bl.criterion_integral(unit3, half.measure, BoundaryData.harmonic_measure(unit3, q200), q200, 1.5)
    assert a == pytest.approx(b, rel=1e-12)


def test_phi_psi(unit3, q200):
    pp = bl.phi_psi(unit3, q200)
    assert np.all(pp.phi == 1) and np.all(pp.psi == 1)


def test_verdict_zero(unit3, q200, half):
    zero = ms.weight_by(half.measure, lambda x: 0.0 * x[:, 0])
    rep = bl.existence_verdict(unit3, zero, BoundaryData.constant(1.0), q200)
    assert rep.verdict == "exists_certified" and rep.C_suff == 1.0 and rep.witness_converged


def test_verdict_atoms(unit3, q200):
    mu = ms.discretize(ms.MeasureSpec.from_atoms([((0.2, 0.0, 0.0), 0.01)]), unit3)
    rep = bl.existence_verdict(unit3, mu, BoundaryData.constant(1.0), q200)
    assert rep.norm == np.inf and rep.verdict == "nonexistence_certified"
    assert rep.witness_converged is False


@pytest.mark.parametrize("target,verdict", [(0.5, "exists_certified"), (1.5, "nonexistence_certified")])
def test_verdict_scaling(unit3, q200, small_ball_op, target, verdict):
    op = scaled_operator(small_ball_op, target)
    f = BoundaryData.on_nodes(1.0 + q200.nodes[:, 0])
    rep = bl.existence_verdict(unit3, op.measure, f, q200, op=op)
    assert rep.verdict == verdict
    assert rep.witness_converged is (verdict == "exists_certified")
    assert np.isfinite(rep.necessary_integral)
    if verdict == "exists_certified":
        assert rep.C_suff >= 1 and np.isfinite(rep.sufficient_integral)


def test_verdict_explicit_C(unit3, q200, half):
    rep = bl.existence_verdict(unit3, half.measure, BoundaryData.constant(1.0), q200, C_suff=3.0, op=half,
                               witness=False)
    assert rep.C_suff == 3.0 and set(rep.criterion) == {1.0, 3.0} and rep.witness_converged is None


def test_boundary_limit(unit3, q200, fine_ball):
    for z in q200.nodes[:3]:
        lim = bl.boundary_ratio_limit(unit3, fine_ball, z, steps=10)
        assert lim.errors[-1] < 1e-3
        assert abs(lim.ratio_m[-1] - lim.m_star) < 1e-3
        assert lim.monotone
    empty = ms.restrict(fine_ball, ms.EmptyRegion())
    assert bl.boundary_ratio_limit(unit3, empty, q200.nodes[0]).limit == 0.0


def test_mu0_claim(unit3, q200, half):
    chk = bl.mu0_claim_check(unit3, half, ms.BallRegion((0, 0, 0), 0.25), q200.nodes[::25], q=q200)
    assert chk.holds and chk.c_K > 0 and chk.C_K >= chk.c_K
    assert np.all(chk.lhs > 0)


def test_verdict_budget_exhausted(unit3, q200, small_ball_op):
    op = scaled_operator(small_ball_op, 0.999)
    assert op.certified
    rep = bl.existence_verdict(unit3, op.measure, BoundaryData.constant(1.0), q200, op=op, max_terms=20)
    assert rep.verdict == "inconclusive" and rep.C_suff is None
    assert rep.witness_converged is False
    assert any("budget" in n for n in rep.notes)
