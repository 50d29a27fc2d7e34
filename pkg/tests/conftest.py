import pytest

from tfpack.oracle import connected_graphs


@pytest.fixture(scope="session")
def small_connected_graphs():
    """Connected graphs on at most 8 vertices, built once per session."""
    return {n: connected_graphs(n) for n in range(1, 9)}
