import logging
from typing import Literal, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist
from sklearn.neighbors import NearestNeighbors

from qle.models import ConfigError, LaplacianBundle, NeighborhoodGraph, PointCloud

logger = logging.getLogger(__name__)

MODULE = "graph_core"


def count_components(W: np.ndarray) -> int:
    n_components, _ = connected_components(csr_matrix(W > 0), directed=False)
    return int(n_components)


def nearest_neighbors(sq_distances: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest neighbors of every row, self excluded; ties go to the lower index."""
    m = sq_distances.shape[0]
    search = NearestNeighbors(n_neighbors=m - 1, metric="precomputed").fit(sq_distances)
    distances, indices = search.kneighbors()
    # the search orders equal distances arbitrarily
    order = np.lexsort((indices, distances), axis=-1)
    return np.take_along_axis(indices, order, axis=1)[:, :k]


def build_knn_graph(
    pc: PointCloud,
    k: int,
    kernel: Literal["heat", "binary"] = "heat",
    heat_t: Optional[float] = None,
) -> NeighborhoodGraph:
    """
    Builds the symmetric k-nearest-neighbor graph of a point cloud.

    Edge (i, j) exists when j is among the k nearest neighbors of i or i among those of j.
    Heat weights are exp(-|x_i - x_j|^2 / t); binary weights are 1.

    Args:
        pc (PointCloud): The samples.
        k (int): Neighbor count, 1 <= k <= m - 1.
        kernel (str): 'heat' or 'binary'.
        heat_t (float, optional): Heat kernel width. Defaults to the mean squared distance
                                  over the directed neighbor pairs.

    Raises:
        ConfigError: k out of range, unknown kernel, or non-positive heat_t.
    """
    m = pc.m
    if not 1 <= k <= m - 1:
        raise ConfigError(f"k must lie in [1, {m - 1}] for {m} samples, got {k}", module=MODULE)

    sq_distances = cdist(pc.points, pc.points, "sqeuclidean")
    neighbors = nearest_neighbors(sq_distances, k)
    rows = np.repeat(np.arange(m), k)
    cols = neighbors.ravel()

    adjacency = np.zeros((m, m), dtype=bool)
    adjacency[rows, cols] = True
    adjacency |= adjacency.T

    if kernel == "heat":
        if heat_t is None:
            heat_t = float(np.mean(sq_distances[rows, cols]))
            if heat_t == 0:
                # every neighbor is a duplicate point
                heat_t = 1.0
            logger.debug(f"Heat kernel width set to the mean squared neighbor distance t={heat_t:.6g}")
        elif heat_t <= 0:
            raise ConfigError(f"heat kernel width must be > 0, got {heat_t}", module=MODULE)
        weights = np.exp(-sq_distances / heat_t)
    elif kernel == "binary":
        weights = np.ones((m, m))
    else:
        raise ConfigError(f"unknown kernel '{kernel}', use heat or binary", module=MODULE)

    W = np.where(adjacency, weights, 0.0)
    np.fill_diagonal(W, 0.0)
    W = np.maximum(W, W.T)

    components = count_components(W)
    if components > 1:
        logger.warning(f"The {k}-NN graph has {components} connected components")

    return NeighborhoodGraph(W=W, k=k, kernel=kernel, heat_t=heat_t, components=components)


def graph_from_weights(W: np.ndarray) -> NeighborhoodGraph:
    """Wraps an explicit symmetric weight matrix (path, complete graph, ...) as a graph."""
    W = np.asarray(W, dtype=float)
    return NeighborhoodGraph(W=W, kernel="explicit", components=count_components(W))


def incidence_factor(g: NeighborhoodGraph) -> np.ndarray:
    """
    Weighted incidence matrix B (m x |E|) with L = B B^T.

    Edges are the pairs i < j with w_ij > 0 in lexicographic order; the column of edge (i, j)
    holds +sqrt(w_ij) at row i and -sqrt(w_ij) at row j.
    """
    rows, cols = np.nonzero(np.triu(g.W, k=1))
    edges = np.arange(rows.size)
    roots = np.sqrt(g.W[rows, cols])

    B = np.zeros((g.m, rows.size))
    B[rows, edges] = roots
    B[cols, edges] = -roots
    return B


def degree_and_laplacian(g: NeighborhoodGraph) -> LaplacianBundle:
    degrees = g.W.sum(axis=1)
    D = np.diag(degrees)
    L = D - g.W
    return LaplacianBundle(W=g.W, D=D, L=L, B=incidence_factor(g), components=g.components)


def _as_coordinates(bundle: LaplacianBundle, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if Y.shape[0] != bundle.m:
        raise ConfigError(f"Y has {Y.shape[0]} rows but the graph has {bundle.m} nodes", module=MODULE)
    return Y


def objective_value(bundle: LaplacianBundle, Y) -> float:
    """Sum over ordered pairs (i, j) of w_ij * |y_i - y_j|^2."""
    Y = _as_coordinates(bundle, Y)
    return float(np.sum(bundle.W * cdist(Y, Y, "sqeuclidean")))


def trace_objective(bundle: LaplacianBundle, Y) -> float:
    """2 * trace(Y^T L Y), the closed form of objective_value."""
    Y = _as_coordinates(bundle, Y)
    return float(2.0 * np.trace(Y.T @ bundle.L @ Y))
