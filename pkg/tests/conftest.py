import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# deterministic reductions regardless of the host machine
os.environ.setdefault("GMT_THREADS", "1")
