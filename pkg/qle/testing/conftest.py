import numpy as np
import pytest

from qle.testing.helpers import bundle_from, complete_weights, path_weights


@pytest.fixture
def p2():
    return bundle_from(path_weights(2))


@pytest.fixture
def p3():
    return bundle_from(path_weights(3))


@pytest.fixture
def p5():
    return bundle_from(path_weights(5))


@pytest.fixture
def k4():
    return bundle_from(complete_weights(4))


@pytest.fixture
def two_p2():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = W[2, 3] = W[3, 2] = 1.0
    return bundle_from(W)


@pytest.fixture
def write_csv(tmp_path):
    """Writes raw text to a CSV file in tmp_path and returns its path."""

    def _write(text: str, name: str = "points.csv"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write
