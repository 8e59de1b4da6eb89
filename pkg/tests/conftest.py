import os
from pathlib import Path

import numpy as np
import pytest

from wmknn.dataset import Dataset, PROFILES, load_profile, parse_schema_spec, resolve_profile_path

DATA_DIR = Path(os.environ.get("WMKNN_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))


def make_dataset(X, y, class_set=None, ids=None, name="toy"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    spec = ",".join(f"f{j}:numeric" for j in range(X.shape[1])) + ",label:label"
    labels = [str(v) for v in y]
    class_set = tuple(class_set or sorted(set(labels)))
    codes = [class_set.index(v) for v in labels]
    ids = np.arange(len(X)) if ids is None else ids
    return Dataset(parse_schema_spec(spec), X, codes, ids, class_set, name)


def profile_available(name):
    try:
        resolve_profile_path(PROFILES[name], DATA_DIR)
        return True
    except FileNotFoundError:
        return False


@pytest.fixture
def line4():
    """1-d points 0, 1, 2, 10 with ids 0..3."""
    return make_dataset([0.0, 1.0, 2.0, 10.0], ["a", "a", "b", "b"])


@pytest.fixture(scope="session")
def glass():
    return load_profile("glass", data_dir=DATA_DIR)


@pytest.fixture(scope="session")
def wine():
    return load_profile("wine", data_dir=DATA_DIR)


@pytest.fixture(scope="session")
def ilpd():
    if not profile_available("ilpd"):
        pytest.skip(f"ILPD file not found in {DATA_DIR}")
    return load_profile("ilpd", data_dir=DATA_DIR)


_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
