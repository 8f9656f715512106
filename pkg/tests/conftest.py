import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

# acceptance criterion lines, printed in the terminal summary
CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_path(tmp_path_factory):
    from delivery_eta.synth import synth_csv

    path = tmp_path_factory.mktemp("data") / "orders.csv"
    synth_csv(path, n=1000, seed=7, missing_rate=0.05)
    return path


SMALL_GRIDS = {
    "Tree": [{"max_depth": 4}, {"max_depth": 6}],
    "Bagging": [{"n_estimators": 10}],
    "RandomForest": [{"n_estimators": 30, "max_depth": 8}],
    "GbdtLevelWise": [{"n_estimators": 50, "max_depth": 4}],
    "GbdtLeafWise": [{"n_estimators": 50, "max_leaves": 15}],
    "ElasticNet": [{"alpha": 0.01}, {"alpha": 0.1}],
    "Svr": [{"c": 10.0}],
}


@pytest.fixture
def small_config(synth_path, tmp_path):
    from delivery_eta.config import config_from_dict

    def make(**kw):
        d = {"dataset": str(synth_path), "output_dir": str(tmp_path / "run"), "grids": SMALL_GRIDS}
        d.update(kw)
        return config_from_dict(d)

    return make
