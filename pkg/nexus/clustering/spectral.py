# nexus/clustering/spectral.py
#
# Spectral clustering on a precomputed similarity matrix:
#   L = I - D^-1/2 S D^-1/2
#   U = eigenvectors of the k smallest eigenvalues, rows normalised
#   k-means on the rows of U

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh

from core.errors import InputError, ParameterError
from nexus.clustering.cluster_engine import ClusterAssignment, kmeans


logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-9
ISOLATED_SELF_SIMILARITY = 1e-12


def check_similarity(sim, unit_diagonal: bool = False) -> np.ndarray:
    S = np.asarray(sim, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"similarity matrix must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InputError("similarity matrix has non-finite entries")
    if np.max(np.abs(S - S.T), initial=0.0) > SYMMETRY_TOLERANCE:
        raise InputError("similarity matrix is not symmetric")
    if np.any(S < 0):
        raise InputError("similarity matrix has negative entries")
    if unit_diagonal and not np.allclose(np.diag(S), 1.0, atol=SYMMETRY_TOLERANCE):
        raise InputError("similarity matrix must have a unit diagonal")
    return S


def spectral_embedding(sim, k: int) -> np.ndarray:
    """Row-normalised n x k matrix of the bottom-k normalised Laplacian eigenvectors."""
    S = check_similarity(sim).copy()
    n = S.shape[0]

    degree = S.sum(axis=1)
    isolated = degree <= 0.0
    if np.any(isolated):
        logger.warning("%d isolated vertices in similarity matrix", int(isolated.sum()))
        idx = np.flatnonzero(isolated)
        S[idx, idx] = ISOLATED_SELF_SIMILARITY
        degree = S.sum(axis=1)

    inv_sqrt = 1.0 / np.sqrt(degree)
    L = np.eye(n) - (inv_sqrt[:, None] * S * inv_sqrt[None, :])
    L = (L + L.T) / 2.0

    _, vecs = eigh(L, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.divide(vecs, norms, out=np.zeros_like(vecs), where=norms > 0)


def spectral_cluster(
    sim,
    k: int,
    seed: int = 0,
    candidate_ids: Optional[Sequence[str]] = None,
) -> ClusterAssignment:
    S = check_similarity(sim)
    n = S.shape[0]
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k > n:
        raise ParameterError(f"k={k} exceeds the number of points ({n})")

    U = spectral_embedding(S, k)
    inner = kmeans(U, k, seed=seed)
    return ClusterAssignment(
        labels=inner.labels,
        k=k,
        method="spectral",
        seed=seed,
        candidate_ids=tuple(candidate_ids) if candidate_ids is not None else None,
    )
