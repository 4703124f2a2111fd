import pytest

from fblab.acceptance import SharedRuns


@pytest.fixture(scope="session")
def shared_runs():
    """Solver artifacts shared between the acceptance gate and unit tests."""
    return SharedRuns()
