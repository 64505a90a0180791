import os
import sys

from hypothesis import HealthCheck, settings

settings.register_profile(
    "geoflow",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("geoflow")

sys.path.insert(0, os.path.dirname(__file__))
