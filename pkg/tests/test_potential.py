import numpy as np
import pytest
from numpy.polynomial import Polynomial

from gaugekit import domain as dom
from gaugekit import measure as ms
from gaugekit import potential as pot

# ∫_{B(0,a)} G(0, y) dy on the unit 3-ball: a^2/2 - a^3/3, a = 1/2
CENTER_VALUE = 1 / 8 - 1 / 24


def test_center_values(unit3):
    spec = ms.MeasureSpec.uniform_ball((0, 0, 0), 0.5, 1.0)
    assert pot.ball_potential(unit3, (0, 0, 0), 0.5, np.zeros(3))[0] == pytest.approx(CENTER_VALUE, rel=1e-14)
    radial = ms.MeasureSpec.radial("constant", 1.0, (0.0, 0.5))
    assert pot.spec_potential(radial, unit3, np.zeros(3))[0] == pytest.approx(CENTER_VALUE, rel=1e-14)
    assert pot.spec_potential(spec, unit3, np.zeros(3))[0] == pytest.approx(CENTER_VALUE, rel=1e-14)


def test_ball_and_radial_agree(unit3, rng):
    x = rng.uniform(-0.55, 0.55, (50, 3))
    a = pot.ball_potential(unit3, (0, 0, 0), 0.5, x)
    b = pot.radial_potential(unit3, pot.RadialDensity([(0.0, 0.5, Polynomial([1.0]))]), x)
    assert np.allclose(a, b, rtol=1e-12)


def test_potential_matches_quadrature(unit3):
    # off-center ball, compared with a fine product quadrature of G(x, .)
    spec = ms.MeasureSpec.uniform_ball((0.2, -0.1, 0.1), 0.3, 1.0)
    mu = ms.discretize(spec, unit3, (40, 800), self_values=False)
    x = np.array([[0.7, 0.1, 0.0], [-0.5, 0.3, 0.2]])
    quad = dom.green_matrix(unit3, x, mu.nodes) @ mu.weights
    assert np.allclose(pot.spec_potential(spec, unit3, x), quad, rtol=1e-6)


def test_callable_density_moments():
    q = pot.RadialDensity(func=lambda r: 1.0 + r**2)
    exact = pot.RadialDensity([(0.0, 1.0, Polynomial([1.0, 0.0, 1.0]))])
    edges = np.linspace(0, 1, 11)
    assert np.allclose(q.moments(edges, 2), exact.moments(edges, 2), rtol=1e-13)
    assert np.allclose(q.cumulative(np.array([0.3, 0.9]), 1), exact.cumulative(np.array([0.3, 0.9]), 1), rtol=1e-12)


def test_newton_ball_continuous():
    r = np.array([[0.5 - 1e-12, 0, 0], [0.5 + 1e-12, 0, 0]])
    v = pot.newton_ball(3, np.zeros(3), 0.5, r)
    assert v[0] == pytest.approx(v[1], rel=1e-10)
