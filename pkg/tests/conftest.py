import pytest

from kgspectral.io import BUNDLED, load_bundled
from kgspectral.metric import make_context

from oracles import BUNDLED_EXACT


@pytest.fixture(scope="session")
def graphs():
    return {name: load_bundled(name).to_graph() for name in BUNDLED}


@pytest.fixture(scope="session")
def context(graphs):
    cache = {}

    def make(name, delta=0.5):
        key = (name, delta)
        if key not in cache:
            cache[key] = make_context(graphs[name], delta)
        return cache[key]

    return make


@pytest.fixture(scope="session")
def exact():
    return BUNDLED_EXACT
