import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nebcluster import DatasetSpec, FilterConfig, FitConfig, filter_components, fit, generate


@pytest.fixture(scope="session")
def moons_fit():
    """Student-t mixture fitted on two moons, shared by the slower tests."""
    ps = generate(DatasetSpec(kind="noisy_moons", n_points=1000, seed=0))
    model = fit(ps, FitConfig(n_components=15, family="student_t", df=1.0, seed=0))
    filtered = filter_components(model, ps, FilterConfig())
    return filtered, ps
