from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def rationals(min_value=-50, max_value=50, max_den=12):
    return st.builds(Fraction, st.integers(min_value, max_value), st.integers(1, max_den))


def nonneg_rationals(max_value=20, max_den=8):
    return st.builds(Fraction, st.integers(0, max_value), st.integers(1, max_den))
