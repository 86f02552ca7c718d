import pytest

from cuspwave.cusp_parametrix import clear_caches


@pytest.fixture(autouse=True)
def _fresh_profile_caches():
    # profile caches are keyed by scale; clearing keeps long runs within memory
    yield
    clear_caches()
