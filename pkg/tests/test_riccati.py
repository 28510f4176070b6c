import numpy as np
import pytest
from numpy.polynomial import Polynomial

from gaugekit import domain as dom
from gaugekit import measure as ms
from gaugekit import operator as opm
from gaugekit import riccati as rc
from gaugekit.errors import DomainError, UsageError, ValidationError
from gaugekit.potential import RadialDensity

from conftest import scaled_operator


def _constant(k2, R=1.0):
    return RadialDensity([(0.0, R, Polynomial([k2]))])


def _closed_form(k, r, R=1.0):
    # u'' + 2u'/r + k^2 u = 0, u'(0) = 0, u(R) = 1
    return np.sinc(k * r / np.pi) / np.sinc(k * R / np.pi)


def test_zero_density(unit3):
    u = rc.radial_gauge_ode(unit3, RadialDensity.zero(), 200)
    assert u.exists and np.allclose(u.values, 1.0, atol=1e-14)
    v = rc.log_transform(u)
    assert rc.riccati_residual(unit3, v, RadialDensity.zero()) < 1e-12


def test_constant_closed_form(unit3):
    k = 2.0
    u = rc.radial_gauge_ode(unit3, _constant(k * k), 4000)
    assert u.exists
    assert u.values[0] == pytest.approx(k / np.sin(k), rel=1e-5)
    r = np.array([0.0, 0.25, 0.5, 0.75])
    assert np.allclose(u.at(r), _closed_form(k, r), rtol=1e-5)


def test_constant_past_eigenvalue(unit3):
    # first Dirichlet eigenvalue of the unit ball is pi^2
    assert rc.radial_gauge_ode(unit3, _constant(0.99 * np.pi**2), 2000).exists
    bad = rc.radial_gauge_ode(unit3, _constant(1.01 * np.pi**2), 2000)
    assert not bad.exists and np.all(np.isnan(bad.values))
    with pytest.raises(DomainError):
        rc.log_transform(bad)


def test_threshold_matches_operator(unit3):
    # the ODE flips at the same amplitude where the discretized ||T|| crosses 1
    mu = ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), unit3, (8, 32))
    a_star = 1.0 / opm.assemble(unit3, mu).norm_estimate
    spec = lambda a: ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, a)
    assert rc.radial_gauge_ode(unit3, spec(0.99 * a_star)).exists
    assert not rc.radial_gauge_ode(unit3, spec(1.01 * a_star)).exists


def test_log_transform(unit3):
    u = rc.radial_gauge_ode(unit3, _constant(4.0), 500)
    v = rc.log_transform(u)
    assert np.allclose(np.exp(v.values), u.values, rtol=1e-14)
    assert v.values[-1] == 0.0
    assert np.allclose(v.derivative, u.derivative / u.values)


def test_residual_and_convergence(unit3):
    spec = ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 8.0)
    res = []
    for m in (500, 1000, 2000):
        v = rc.log_transform(rc.radial_gauge_ode(unit3, spec, m))
        res.append(rc.riccati_residual(unit3, v, spec))
    assert res[-1] < 1e-3
    assert res[0] / res[1] >= 2 and res[1] / res[2] >= 2
    v = rc.log_transform(rc.radial_gauge_ode(unit3, spec, 2000))
    doubled = rc.RadialProfile(v.grid, 2 * v.values, 2 * v.derivative)
    assert rc.riccati_residual(unit3, doubled, spec) > 100 * res[-1]


def test_radial_green_potential(unit3):
    # G 1 on the unit ball is (1 - r^2) / 6
    r = np.linspace(0, 1, 2001)
    w = rc.radial_green_potential(unit3, r, np.ones_like(r))
    assert np.allclose(w, (1 - r**2) / 6, atol=1e-7)
    w2 = rc.radial_green_potential(unit3, r, np.zeros_like(r), _constant(1.0))
    assert np.allclose(w2, (1 - r**2) / 6, atol=1e-13)


def test_profile_validation():
    with pytest.raises(ValidationError):
        rc.RadialProfile(np.array([0.1, 0.2, 0.3]), np.ones(3), np.zeros(3))
    with pytest.raises(ValidationError):
        rc.radial_gauge_ode(dom.BallDomain.unit(3), RadialDensity.zero(), 2)


def test_supersolution(unit3, small_ball_op):
    op = scaled_operator(small_ball_op, 0.5)
    g = opm.gauge(unit3, op, tol=1e-12)
    v = np.log(g.values)
    assert rc.supersolution_check(unit3, op, v).passed
    assert rc.supersolution_check(unit3, op, v + 0.1).passed
    zero = rc.supersolution_check(unit3, op, np.zeros(op.size))
    assert not zero.passed and zero.margin < 0
    assert not rc.supersolution_check(unit3, op, 0.5 * v).passed
    with pytest.raises(UsageError):
        rc.supersolution_check(unit3, op, np.zeros(3))
    with pytest.raises(DomainError):
        rc.supersolution_check(unit3, op, -np.ones(op.size))


def test_ode_vs_neumann(unit3):
    spec = ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0)
    op = opm.assemble(unit3, ms.discretize(spec, unit3, (16, 200)))
    a = 0.5 / op.norm_estimate
    r = np.array([0.0, 0.25, 0.5, 0.75])
    xs = np.column_stack([r, np.zeros(4), np.zeros(4)])
    g = opm.gauge(unit3, opm.rescaled(op, a), xs).point_values
    u = rc.radial_gauge_ode(unit3, ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, a), 2000)
    # the center and exterior points converge fast; points inside the
    # support only at the rate of the near-field averaging
    assert g[0] == pytest.approx(u.values[0], rel=1e-3)
    assert g[3] == pytest.approx(u.at(0.75), rel=1e-5)
    assert np.allclose(g, u.at(r), rtol=1e-2)
