import pytest

from rotres import resonance


@pytest.fixture(scope="session")
def triad_cache(tmp_path_factory):
    return tmp_path_factory.mktemp("triad-cache")


@pytest.fixture(scope="session")
def rset4(triad_cache):
    return resonance.resonant_set_for_box(4, cache_dir=triad_cache)


@pytest.fixture(scope="session")
def rset6(triad_cache):
    return resonance.resonant_set_for_box(6, cache_dir=triad_cache)


@pytest.fixture(scope="session")
def rset8(triad_cache):
    return resonance.resonant_set_for_box(8, cache_dir=triad_cache)
