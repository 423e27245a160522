import warnings

import numpy as np
import pytest

from onlinenp.core import Hyperparams


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def quiet_params(**kw) -> Hyperparams:
    """Hyperparams without the beta/eta range warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Hyperparams(**kw)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
