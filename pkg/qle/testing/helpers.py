import numpy as np

from qle.graph_functions import build_knn_graph, degree_and_laplacian, graph_from_weights
from qle.models import LaplacianBundle, PointCloud


def path_weights(m: int) -> np.ndarray:
    W = np.zeros((m, m))
    for i in range(m - 1):
        W[i, i + 1] = W[i + 1, i] = 1.0
    return W


def complete_weights(m: int) -> np.ndarray:
    return np.ones((m, m)) - np.eye(m)


def bundle_from(W: np.ndarray) -> LaplacianBundle:
    return degree_and_laplacian(graph_from_weights(W))


def random_connected_weights(rng: np.random.Generator, m: int, density: float = 0.3) -> np.ndarray:
    """Random spanning tree plus random extra edges, weights in [0.1, 2)."""
    upper = np.zeros((m, m))
    for i in range(1, m):
        j = int(rng.integers(0, i))
        upper[min(i, j), max(i, j)] = rng.uniform(0.1, 2.0)
    extra = np.triu(rng.random((m, m)) < density, k=1) & (upper == 0)
    upper[extra] = rng.uniform(0.1, 2.0, size=int(extra.sum()))
    return upper + upper.T


def random_connected_bundles(count: int = 100, max_m: int = 12, seed: int = 2024) -> list:
    rng = np.random.default_rng(seed)
    return [bundle_from(random_connected_weights(rng, int(rng.integers(2, max_m + 1)))) for _ in range(count)]


def random_knn_bundles(count: int = 100, max_m: int = 12, seed: int = 7) -> list:
    """kNN graphs of random clouds; small k leaves many of them disconnected."""
    rng = np.random.default_rng(seed)
    bundles = []
    for _ in range(count):
        m = int(rng.integers(3, max_m + 1))
        cloud = PointCloud(points=rng.normal(size=(m, int(rng.integers(1, 4)))))
        k = int(rng.integers(1, min(3, m - 1) + 1))
        kernel = "binary" if rng.random() < 0.5 else "heat"
        bundles.append(degree_and_laplacian(build_knn_graph(cloud, k, kernel)))
    return bundles
