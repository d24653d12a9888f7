import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_report_header(config):
    from powerslic import backend_name

    return f"powerslic kernel backend: {backend_name()}"
