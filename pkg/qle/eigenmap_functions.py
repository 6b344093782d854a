import logging

import numpy as np
from pydantic import ValidationError

from qle.models import ComputationError, ConfigError, Embedding, GeneralizedEigenpair, LaplacianBundle

logger = logging.getLogger(__name__)

MODULE = "classical_eigenmap"
EPS_RANK = 1e-10
DEGENERACY_TOL = 1e-9


def normalize_sign(v: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Flips v so its first component with |v_i| > tol is positive."""
    significant = np.flatnonzero(np.abs(v) > tol)
    if significant.size and v[significant[0]] < 0:
        return -v
    return v


def check_degrees(bundle: LaplacianBundle, module: str = MODULE) -> np.ndarray:
    degrees = bundle.degrees
    isolated = np.flatnonzero(degrees <= 0)
    if isolated.size:
        raise ComputationError(
            f"vertex {int(isolated[0])} is isolated (D_ii = 0); the generalized problem needs positive degrees",
            module=module,
        )
    return degrees


def normalized_laplacian(bundle: LaplacianBundle) -> np.ndarray:
    """N = D^{-1/2} L D^{-1/2}, the symmetric reduction of L v = lambda D v."""
    inv_sqrt = 1.0 / np.sqrt(check_degrees(bundle))
    N = bundle.L * inv_sqrt[:, None] * inv_sqrt[None, :]
    return (N + N.T) / 2


def random_walk_matrix(bundle: LaplacianBundle) -> np.ndarray:
    """D^{-1} L; its eigenpairs are exactly the generalized eigenpairs of (L, D)."""
    return bundle.L / check_degrees(bundle)[:, None]


def _ordered_cluster(cluster: list) -> list:
    # vectors go lexicographic, eigenvalues keep their ascending positions
    values = [value for value, _ in cluster]
    vectors = sorted((vector for _, vector in cluster), key=tuple)
    return list(zip(values, vectors))


def _ordered(values: np.ndarray, vectors: np.ndarray) -> list:
    """Ascending by eigenvalue; inside a degenerate cluster, lexicographic by vector."""
    scale = max(1.0, float(np.max(np.abs(values))))
    pairs = [(float(values[i]), normalize_sign(vectors[:, i])) for i in np.argsort(values, kind="stable")]

    ordered, cluster = [], [pairs[0]]
    for pair in pairs[1:]:
        if pair[0] - cluster[0][0] <= DEGENERACY_TOL * scale:
            cluster.append(pair)
        else:
            ordered.extend(_ordered_cluster(cluster))
            cluster = [pair]
    ordered.extend(_ordered_cluster(cluster))
    return ordered


def generalized_eigenpairs(bundle: LaplacianBundle) -> list:
    """
    Solves L v = lambda D v exactly for all m pairs.

    The problem is reduced to the symmetric eigenproblem of N = D^{-1/2} L D^{-1/2}; eigenvectors
    w of N map back to v = D^{-1/2} w, which gives v^T D v = 1. Signs follow normalize_sign.

    Args:
        bundle (LaplacianBundle): Graph matrices with all degrees positive.

    Returns:
        list[GeneralizedEigenpair]: Ascending by eigenvalue, every eigenvalue in [0, 2].

    Raises:
        ComputationError: Some vertex is isolated (D_ii = 0).
    """
    degrees = check_degrees(bundle)
    values, w = np.linalg.eigh(normalized_laplacian(bundle))
    vectors = w / np.sqrt(degrees)[:, None]
    return [GeneralizedEigenpair(eigenvalue=value, vector=vector) for value, vector in _ordered(values, vectors)]


def zero_threshold(pairs: list, eps_rank: float = EPS_RANK) -> float:
    return eps_rank * max(pair.eigenvalue for pair in pairs)


def embed(pairs: list, d: int, components: int, eps_rank: float = EPS_RANK) -> Embedding:
    """
    Builds the d-dimensional embedding from the d smallest nonzero eigenpairs.

    One zero mode is dropped per connected component, so `components` smallest pairs are skipped.

    Raises:
        ConfigError: d < 1, or fewer than d nonzero eigenvalues exist.
        ComputationError: a selected eigenvalue sits at or below the zero threshold.
    """
    if d < 1:
        raise ConfigError(f"the embedding dimension must be >= 1, got {d}", module=MODULE)

    threshold = zero_threshold(pairs, eps_rank)
    zero_modes = pairs[:components]
    if any(pair.eigenvalue > threshold for pair in zero_modes):
        logger.warning(
            f"{components} zero modes expected but some of the smallest eigenvalues exceed {threshold:.3g}"
        )

    remaining = pairs[components:]
    if d > len(remaining):
        raise ConfigError(
            f"requested d={d} but only {len(remaining)} nonzero eigenvalue(s) are available "
            f"({len(pairs)} nodes, {components} component(s))",
            module=MODULE,
        )

    selected = remaining[:d]
    if selected[0].eigenvalue <= threshold:
        raise ComputationError(
            f"selected eigenvalue {selected[0].eigenvalue:.3g} is at the zero threshold; "
            "the component count does not match the spectrum",
            module=MODULE,
        )

    Y = np.column_stack([pair.vector for pair in selected])
    try:
        return Embedding(Y=Y, eigenvalues=tuple(pair.eigenvalue for pair in selected))
    except ValidationError as e:
        raise ComputationError(f"invalid embedding: {e.errors()[0]['msg']}", module=MODULE)


def classical_embedding(bundle: LaplacianBundle, d: int, eps_rank: float = EPS_RANK) -> Embedding:
    return embed(generalized_eigenpairs(bundle), d, bundle.components, eps_rank)
