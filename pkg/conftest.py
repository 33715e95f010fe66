# content of conftest.py
import os

import pytest

try:
    import matplotlib.pyplot
    matplotlib.pyplot.__name__
    _has_matplotlib = True
except ImportError:
    _has_matplotlib = False

_run_slow = os.environ.get('UNFITTED_HDG_RUN_SLOW', '0') == '1'

collect_ignore = ["setup.py", "examples"]


@pytest.fixture(scope="session")
def check_has_matplotlib():
    if not _has_matplotlib:
        pytest.skip("Optional package 'matplotlib.pyplot' required to run this test")


@pytest.fixture(scope="session")
def check_run_slow():
    if not _run_slow:
        pytest.skip("Slow acceptance test, set UNFITTED_HDG_RUN_SLOW=1 to run it")
