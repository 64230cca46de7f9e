import pytest

from spdc_walkoff.core import reference_config


@pytest.fixture
def experiment():
    """Experimental configuration; ws = 0 (the pinhole sets q = 0, not a filter)."""
    return reference_config()


@pytest.fixture
def filtered():
    return reference_config(w0=100.0, ws=50.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
