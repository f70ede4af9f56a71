import pytest

from strand.core.elements import GroupElement, element_from_trees, word_element
from strand.services.evaluation import evaluator_registry, make_evaluator


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long oracle sweeps")


@pytest.fixture(autouse=True, scope="module")
def _fresh_registry():
    yield
    evaluator_registry.clear()


@pytest.fixture
def A() -> GroupElement:
    return element_from_trees([1, 1], [1, 2], 2)


@pytest.fixture
def X() -> GroupElement:
    return element_from_trees([1, 1, 2], [1, 1, 3], 2)


@pytest.fixture
def N() -> GroupElement:
    return word_element([(1, 1), (0, -1), (1, -1), (2, 1)], 2)


@pytest.fixture
def tl():
    return make_evaluator("tl", d="3")


@pytest.fixture
def tl_exact():
    return make_evaluator("tl", d="3", exact=True)


@pytest.fixture
def tl_symbolic():
    return make_evaluator("tl", d="symbolic", exact=True)


@pytest.fixture
def tensor():
    return make_evaluator("tensor", model="coloring3")

