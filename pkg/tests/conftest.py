import pytest

from coarse_lab.coxeter import Presentation
from coarse_lab.graphs import SimpleGraph, ladder_graph
from coarse_lab.rays import CayleySpace, grid_space, tree_space


@pytest.fixture(scope="session")
def tree():
    return tree_space()


@pytest.fixture(scope="session")
def grid():
    return grid_space()


@pytest.fixture(scope="session")
def free3():
    return Presentation(SimpleGraph.build(["s", "t", "u"], []), "coxeter")


@pytest.fixture(scope="session")
def c4():
    g = SimpleGraph.build(
        ["s", "t", "u", "v"], [("s", "t"), ("t", "u"), ("u", "v"), ("v", "s")]
    )
    return Presentation(g, "coxeter")


@pytest.fixture(scope="session")
def W5():
    return Presentation(ladder_graph(5), "coxeter")


@pytest.fixture(scope="session")
def W13():
    return Presentation(ladder_graph(13), "coxeter")


@pytest.fixture(scope="session")
def ladder13_space(W13):
    return CayleySpace(W13)
