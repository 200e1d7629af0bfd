import numpy as np
import pytest

from hardyheat.kernel import build_profile


@pytest.fixture(scope="session")
def prof_1_05():
    return build_profile(1, 0.5, 50.0, 321)


@pytest.fixture(scope="session")
def prof_3_05():
    return build_profile(3, 0.5, 50.0, 321)


@pytest.fixture(scope="session")
def prof_2_05():
    return build_profile(2, 0.5, 50.0, 321)


@pytest.fixture(scope="session")
def prof_2_025():
    return build_profile(2, 0.25, 50.0, 161)


@pytest.fixture(scope="session")
def prof_2_075():
    return build_profile(2, 0.75, 50.0, 161)


@pytest.fixture(scope="session")
def prof_3_025():
    return build_profile(3, 0.25, 50.0, 321)


@pytest.fixture(scope="session")
def prof_1_025():
    return build_profile(1, 0.25, 60.0, 321)


def poisson_profile(N, sigma):
    """Closed-form s=1/2 kernel profile (the Poisson kernel)."""
    import math
    c = math.gamma((N + 1) / 2.0) / math.pi ** ((N + 1) / 2.0)
    sigma = np.asarray(sigma, dtype=float)
    return c * (1.0 + sigma ** 2) ** (-(N + 1) / 2.0)


def poisson_profile_derivative(N, sigma):
    import math
    c = math.gamma((N + 1) / 2.0) / math.pi ** ((N + 1) / 2.0)
    sigma = np.asarray(sigma, dtype=float)
    return -c * (N + 1) * sigma * (1.0 + sigma ** 2) ** (-(N + 3) / 2.0)
