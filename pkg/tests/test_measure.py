import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaugekit import domain as dom
from gaugekit import measure as ms
from gaugekit.errors import DataError, ValidationError

PI_OVER_6 = 0.5235987755982988  # (4/3) pi (1/2)^3


def test_uniform_ball_mass(unit3):
    spec = ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0)
    assert spec.analytic_mass(unit3) == pytest.approx(PI_OVER_6, rel=1e-15)
    mu = ms.discretize(spec, unit3, (8, 32))
    assert abs(mu.mass - PI_OVER_6) < 1e-6
    assert np.all(unit3.relative_radius(mu.nodes) < 1)
    assert np.all(mu.weights > 0) and np.all(mu.cell_radii > 0)


@pytest.mark.parametrize("profile", ["constant", "linear", "bump"])
@pytest.mark.parametrize("rule", ["gauss", "spiral"])
def test_radial_mass(unit3, profile, rule):
    spec = ms.MeasureSpec.radial(profile, 2.5, (0.1, 0.6))
    mu = ms.discretize(spec, unit3, (12, 64), rule)
    assert mu.mass == pytest.approx(spec.analytic_mass(unit3), rel=1e-6)


def test_refinement_mass(unit3):
    spec = ms.MeasureSpec.radial("bump", 1.0, (0.2, 0.7))
    a = ms.discretize(spec, unit3, (8, 32), self_values=False).mass
    b = ms.discretize(spec, unit3, (16, 64), self_values=False).mass
    assert abs(a - b) < 1e-8 * b


def test_off_center_ball(unit3):
    spec = ms.MeasureSpec.uniform_ball((0.2, 0.1, 0.0), 0.3, 2.0)
    mu = ms.discretize(spec, unit3, (6, 32))
    assert mu.mass == pytest.approx(spec.analytic_mass(unit3), rel=1e-6)
    assert np.all(np.linalg.norm(mu.nodes - [0.2, 0.1, 0.0], axis=1) < 0.3)


def test_atoms_pass_through(unit3):
    mu = ms.discretize(ms.MeasureSpec.from_atoms([((0.3, 0, 0), 2.0)]), unit3)
    assert len(mu) == 1 and mu.weights[0] == 2.0 and mu.cell_radii[0] == 0.0
    assert mu.atomic.tolist() == [True]


@pytest.mark.parametrize("spec", [
    ms.MeasureSpec.radial("constant", 1.0, (0.3, 0.3)),
    ms.MeasureSpec.radial("constant", 1.0, (0.0, 1.0)),
    ms.MeasureSpec.radial("constant", -1.0, (0.0, 0.5)),
    ms.MeasureSpec.radial("quartic", 1.0, (0.0, 0.5)),
    ms.MeasureSpec.uniform_ball((0.6, 0, 0), 0.4, 1.0),
    ms.MeasureSpec.uniform_ball((0, 0), 0.4, 1.0),
    ms.MeasureSpec.from_atoms([((1.0, 0, 0), 1.0)]),
    ms.MeasureSpec.from_atoms([((0.1, 0, 0), -1.0)]),
    ms.MeasureSpec("unknown"),
])
def test_invalid_specs(unit3, spec):
    with pytest.raises(ValidationError):
        ms.discretize(spec, unit3)


def test_weight_by(unit3):
    mu = ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), unit3, (4, 16))
    same = ms.weight_by(mu, lambda x: np.ones(len(x)))
    assert np.array_equal(same.weights, mu.weights) and np.array_equal(same.nodes, mu.nodes)
    mm = ms.weight_by(mu, lambda x: dom.modifier_m(unit3, x))
    assert np.all(mm.weights <= mu.weights)
    zero = ms.weight_by(mu, 0.0)
    assert zero.mass == 0.0 and len(zero) == len(mu)
    bad = np.ones(len(mu))
    bad[0] = np.inf
    with pytest.raises(DataError):
        ms.weight_by(mu, bad)


def test_restrict(unit3):
    mu = ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), unit3, (16, 64))
    whole = ms.restrict(mu, ms.BallRegion((0, 0, 0), 1.0))
    assert np.array_equal(whole.weights, mu.weights)
    half = ms.restrict(mu, ms.BallRegion((0, 0, 0), 0.25))
    assert half.mass / mu.mass == pytest.approx(1 / 8, rel=0.05)
    empty = ms.restrict(mu, ms.EmptyRegion())
    assert len(empty) == 0 and empty.degenerate


@given(st.floats(0.0, 0.6), st.floats(0.0, 0.3), st.floats(0.05, 0.5))
def test_restrict_additive_and_monotone(r_in, cx, extra):
    d = dom.BallDomain.unit(3)
    mu = ms.discretize(ms.MeasureSpec.radial("linear", 1.0, (0.0, 0.7)), d, (4, 16), self_values=False)
    a = ms.BallRegion((cx, 0.0, 0.0), r_in)
    b = ms.BallRegion((cx, 0.0, 0.0), r_in + extra)
    inside, outside = ms.restrict(mu, a), ms.restrict(mu, ms.Complement(a))
    assert inside.mass + outside.mass == pytest.approx(mu.mass, rel=1e-14, abs=1e-300)
    assert np.all(b.contains(mu.nodes[a.contains(mu.nodes)]))


def test_region_checks(unit3):
    with pytest.raises(ValidationError):
        ms.check_region(ms.BallRegion((0, 0, 0), 0.0), unit3)
    with pytest.raises(ValidationError):
        ms.check_region(ms.AnnulusRegion((0, 0, 0), 0.5, 0.2), unit3)
    ms.check_region(ms.AnnulusRegion((0, 0, 0), 0.2, 0.5), unit3)


def test_diagonal_self_values(unit3):
    mu = ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), unit3, (8, 32))
    assert mu.diagonal is not None and np.all(mu.diagonal >= 0)
    assert mu.meta["diagonal_clipped"] == 0
    plain = ms.discretize(ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0), unit3, (8, 32), self_values=False)
    assert plain.diagonal is None
