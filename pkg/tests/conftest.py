import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

from orbitfab.astro import ChiefOrbit  # noqa: E402

REFERENCE_CHIEF = ChiefOrbit.at_altitude(650e3)
A_C = REFERENCE_CHIEF.semi_major_axis  # 7,028 km


@pytest.fixture(scope="session")
def chief() -> ChiefOrbit:
    return REFERENCE_CHIEF


def wrapped_diff(a: float, b: float) -> float:
    """Absolute angular difference modulo 2*pi."""
    return abs(math.remainder(a - b, 2.0 * math.pi))
