"""Shared trees, built once per session; tree construction dominates runtime.

Connected filled sets give one piece per depth at any depth; disconnected
ones shrink geometrically, so those trees are built to the last depth the
grid resolves (depth 2 at these resolutions).
"""

import pytest

from polypuzzle import build_tree, build_tree_capped
from polypuzzle import corpus


@pytest.fixture(scope="session")
def quad_setup():
    return corpus.setup("quad_basic", 1024)


@pytest.fixture(scope="session")
def quad_tree(quad_setup):
    return build_tree(quad_setup, 10)


@pytest.fixture(scope="session")
def quad_tree_2048():
    return build_tree(corpus.setup("quad_basic", 2048), 12)


@pytest.fixture(scope="session")
def conj_tree():
    return build_tree(corpus.setup("quad_conj", 1024), 10)


@pytest.fixture(scope="session")
def cubic_tree():
    return build_tree(corpus.setup("cubic_unicrit", 1024), 8)


@pytest.fixture(scope="session")
def bh_setup():
    return corpus.setup("cubic_bh", 2048)


@pytest.fixture(scope="session")
def bh_tree(bh_setup):
    return build_tree_capped(bh_setup, 12)


@pytest.fixture(scope="session")
def per1_tree():
    return build_tree_capped(corpus.setup("cubic_per1", 2048), 12)


@pytest.fixture(scope="session")
def per2_tree():
    return build_tree_capped(corpus.setup("cubic_per2", 2048), 12)


@pytest.fixture(scope="session")
def quart_feed_tree():
    return build_tree_capped(corpus.setup("quart_feed", 4096), 12)


@pytest.fixture(scope="session")
def quart_twin_tree():
    return build_tree_capped(corpus.setup("quart_twin", 2048), 12)
