import logging
from typing import Optional

import numpy as np

from qle.eigenmap_functions import EPS_RANK, check_degrees, normalize_sign, normalized_laplacian
from qle.models import ChainOperator, ComputationError, ConfigError, GeneralizedEigenpair, LaplacianBundle, max_abs

logger = logging.getLogger(__name__)

MODULE = "chain_product"


def sqrt_psd(A: np.ndarray, eps_rank: float = EPS_RANK) -> np.ndarray:
    """
    Square root of a symmetric positive semidefinite matrix by spectral decomposition.

    Eigenvalues below eps_rank * lambda_max are clamped to zero, so the result squared
    reproduces A on its range and vanishes on its (numerical) kernel.

    Raises:
        ComputationError: A is not square, not symmetric within 1e-12, or has an eigenvalue
                          below -eps_rank * lambda_max.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ComputationError(f"sqrt_psd needs a square matrix, got shape {A.shape}", module=MODULE)
    if max_abs(A - A.T) > 1e-12 * max(1.0, max_abs(A)):
        raise ComputationError("sqrt_psd needs a symmetric matrix", module=MODULE)

    values, Q = np.linalg.eigh((A + A.T) / 2)
    threshold = eps_rank * max(float(values.max()), 0.0)
    if values.min() < -threshold:
        raise ComputationError(
            f"matrix is not positive semidefinite (eigenvalue {values.min():.3g})", module=MODULE
        )

    clamped = np.where(values > threshold, values, 0.0)
    root = (Q * np.sqrt(clamped)) @ Q.T
    return (root + root.T) / 2


def build_chain_operator(bundle: LaplacianBundle, s: float = 0.25, eps_rank: float = EPS_RANK) -> ChainOperator:
    """
    Builds F = L^{1/2} D^{-1/2} and G = F F^T = L^{1/2} D^{-1} L^{1/2}.

    The nonzero spectrum of G is the nonzero generalized spectrum of (L, D). The spectral scale s
    maps it into phases s * lambda < 1; if the given s leaves no headroom it is halved (with a
    warning) until it does.

    Raises:
        ConfigError: s outside (0, 1/2].
        ComputationError: an isolated vertex (D_ii = 0).
    """
    if not 0 < s <= 0.5:
        raise ConfigError(f"the spectral scale must lie in (0, 1/2], got {s}", module=MODULE)

    degrees = check_degrees(bundle, module=MODULE)
    F = sqrt_psd(bundle.L, eps_rank) / np.sqrt(degrees)[None, :]
    G = F @ F.T
    G = (G + G.T) / 2

    lambda_max = max(float(np.linalg.eigvalsh(G).max()), 0.0)
    while s * lambda_max >= 1:
        s /= 2
        logger.warning(f"s * lambda_max >= 1, halving the spectral scale to s={s}")

    return ChainOperator(F=F, G=G, s=s, eps_rank=eps_rank, lambda_max=lambda_max)


def chain_eigenpairs(chain: ChainOperator) -> tuple:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of G."""
    return np.linalg.eigh(chain.G)


def eigenspace_basis(chain: ChainOperator, eigenvalue: float, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenspace of G closest to `eigenvalue`, with all
    eigenvalues within tol of that closest one."""
    values, vectors = chain_eigenpairs(chain)
    nearest = values[np.argmin(np.abs(values - eigenvalue))]
    return vectors[:, np.abs(values - nearest) <= tol * max(1.0, chain.lambda_max)]


def recover_eigenvector(
    u: np.ndarray,
    eigenvalue: float,
    bundle: LaplacianBundle,
    eps_rank: float = EPS_RANK,
    residual_tol: Optional[float] = 1e-8,
) -> GeneralizedEigenpair:
    """
    Maps an eigenvector u of G = L^{1/2} D^{-1} L^{1/2} to a solution of L v = lambda D v.

    v = D^{-1} L^{1/2} u, rescaled to v^T D v = 1 and sign normalized. L^{1/2} alone does not
    solve the generalized problem; the D^{-1} factor does: L D^{-1} L^{1/2} u = L^{1/2} G u.

    Args:
        u (ndarray): Eigenvector of G. A complex vector is accepted when its imaginary part vanishes.
        eigenvalue (float): Eigenvalue of u, above the zero threshold.
        bundle (LaplacianBundle): The graph the chain operator was built from.
        eps_rank (float): Relative zero threshold.
        residual_tol (float, optional): Maximum |G u - lambda u|. None skips the check, which is how
            estimated eigenpairs coming out of phase estimation are lifted.

    Raises:
        ComputationError: eigenvalue at or below the zero threshold, u not an eigenvector,
                          or L^{1/2} u numerically zero (u in the kernel).
    """
    u = np.asarray(u)
    if np.iscomplexobj(u):
        if max_abs(u.imag) > 1e-8:
            raise ComputationError("u must be real; remove the global phase first", module=MODULE)
        u = u.real
    u = np.asarray(u, dtype=float)
    if u.shape != (bundle.m,):
        raise ComputationError(f"u has shape {u.shape}, expected ({bundle.m},)", module=MODULE)
    u = u / np.linalg.norm(u)

    degrees = check_degrees(bundle, module=MODULE)
    lambda_max = float(np.linalg.eigvalsh(normalized_laplacian(bundle)).max())
    if eigenvalue <= eps_rank * lambda_max:
        raise ComputationError(
            f"eigenvalue {eigenvalue:.3g} is at or below the zero threshold; zero modes carry no embedding",
            module=MODULE,
        )

    root_L = sqrt_psd(bundle.L, eps_rank)
    if residual_tol is not None:
        G = root_L @ (root_L / degrees[:, None])
        residual = float(np.linalg.norm(G @ u - eigenvalue * u))
        if residual > residual_tol:
            raise ComputationError(
                f"u is not an eigenvector of G for lambda={eigenvalue:.6g} (residual {residual:.3g})",
                module=MODULE,
            )

    lifted = root_L @ u
    if np.linalg.norm(lifted) <= 1e-12:
        raise ComputationError("L^{1/2} u vanishes; u lies in the kernel of L", module=MODULE)

    v = lifted / degrees
    v = v / np.sqrt(v @ (degrees * v))
    return GeneralizedEigenpair(eigenvalue=eigenvalue, vector=normalize_sign(v))
