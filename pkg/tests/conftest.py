import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from plcheck.lie_su import random_cartan_form, random_su, random_unitary

settings.register_profile(
    "plcheck",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("plcheck")

seeds = st.integers(min_value=0, max_value=2**32 - 1)
ranks = st.sampled_from([2, 3])
t_values = st.sampled_from([0.1, 0.3, 0.5, 0.7, 1.0, -0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def draw(seed, n):
    """Independent (a, X, Y, eps, g, u) drawn from one seed."""
    r = np.random.default_rng(seed)
    return {
        "a": random_su(r, n),
        "X": random_su(r, n),
        "Y": random_su(r, n),
        "Z": random_su(r, n),
        "eps": random_su(r, n),
        "g": random_unitary(r, n),
        "u": random_cartan_form(r, n),
    }
