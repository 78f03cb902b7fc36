import sys

import numpy as np
import pytest
from hypothesis import settings

from ftlab.models import make_model

settings.register_profile("ftlab", max_examples=60, deadline=None)
settings.load_profile("ftlab")


@pytest.fixture
def iso():
    return make_model("isothermal")


@pytest.fixture
def burgers():
    return make_model("burgers")


@pytest.fixture
def temple():
    return make_model("temple-toy")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
