import numpy as np
import pytest

from liouville_max.geometry import (AnnulusModel, BoundaryCurve, ConformalMap,
                                    DoublyConnectedDomain, build_conformal_map, free_boundary)


@pytest.fixture(scope="session")
def model():
    return AnnulusModel(2.0, 0.5)


@pytest.fixture(scope="session")
def identity_map(model):
    return ConformalMap.identity(model)


@pytest.fixture(scope="session")
def concentric_fb(identity_map):
    return free_boundary(identity_map)


@pytest.fixture(scope="session")
def built_concentric_map():
    return build_conformal_map(DoublyConnectedDomain.annulus(2.0, 0.5))


@pytest.fixture(scope="session")
def circles_domain():
    return DoublyConnectedDomain(BoundaryCurve.circle(0, 2.0), BoundaryCurve.circle(0.3, 0.5))


@pytest.fixture(scope="session")
def circles_map(circles_domain):
    return build_conformal_map(circles_domain)


@pytest.fixture(scope="session")
def circles_fb(circles_map):
    return free_boundary(circles_map, n=65)


@pytest.fixture(scope="session")
def perturbed_domain():
    outer = BoundaryCurve.from_fourier([[1, 2, 0], [4, 0.1, 0], [-2, 0.1, 0]])
    inner = BoundaryCurve.from_fourier([[0, 0.1, 0], [1, 0.5, 0], [-3, 0.03, 0]])
    return DoublyConnectedDomain(outer, inner)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
