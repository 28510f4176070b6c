import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gaugekit import domain as dom
from gaugekit import measure as ms
from gaugekit import operator as opm

settings.register_profile("gaugekit", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gaugekit")


def interior_points(rng, count, dim=3, shrink=0.9, center=None, radius=1.0):
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = shrink * radius * rng.random(count) ** (1.0 / dim)
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    return c + r[:, None] * g


def scaled_operator(op, target):
    return opm.rescaled(op, target / op.norm_estimate)


@pytest.fixture(scope="session")
def unit3():
    return dom.BallDomain.unit(3)


@pytest.fixture(scope="session")
def small_ball_op(unit3):
    """Uniform density on B(0, 1/2), 8 x 32 nodes, unit density."""
    spec = ms.MeasureSpec.uniform_ball((0.0, 0.0, 0.0), 0.5, 1.0)
    mu = ms.discretize(spec, unit3, (8, 32))
    return opm.assemble(unit3, mu)


@pytest.fixture(scope="session")
def q200(unit3):
    return dom.sphere_quadrature(unit3, 200)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
