import pytest

from csptree.itree import tau_closure
from csptree.registry import load_compiled


@pytest.fixture(scope="session")
def patrol_mod():
    return load_compiled("patrol")


@pytest.fixture(scope="session")
def chemical_mod():
    return load_compiled("chemical")


def settle(tree, budget=10_000):
    node, _ = tau_closure(tree, budget)
    return node


def step(node, index1, budget=10_000):
    """Descend into the index1-th (1-based) menu event and settle."""
    return settle(node.child(node.events()[index1 - 1]), budget)


@pytest.fixture
def walk():
    return settle, step
