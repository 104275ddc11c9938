# nexus/clustering/pca.py
#
# Principal components of the encoded answer matrix, used to check that
# the candidate features separate before clustering.

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.decomposition import PCA

from core.errors import ParameterError
from nexus.clustering.cluster_engine import Points, as_points


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PCAResult:
    components: np.ndarray        # (n_components, dim), orthonormal rows
    explained_variance_ratio: np.ndarray
    mean: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    def to_frame(self) -> pd.DataFrame:
        ratios = self.explained_variance_ratio
        return pd.DataFrame(
            {
                "component": np.arange(1, len(ratios) + 1),
                "explained_variance_ratio": ratios,
                "cumulative": np.cumsum(ratios),
            }
        )


def pca(points: Points, n_components: int) -> PCAResult:
    """
    Covariance eigendecomposition of mean-centred points. Each component is
    signed so that its largest-magnitude entry is positive.
    """
    X = as_points(points)
    n, dim = X.shape
    if not 1 <= n_components <= min(n, dim):
        raise ParameterError(f"n_components must be in [1, {min(n, dim)}], got {n_components}")

    model = PCA(n_components=n_components, svd_solver="full")
    model.fit(X)

    components = np.array(model.components_, dtype=float)
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(n_components), pivots])
    signs[signs == 0] = 1.0
    components *= signs[:, None]

    ratios = np.nan_to_num(np.asarray(model.explained_variance_ratio_, dtype=float))
    logger.debug("pca: ratios=%s", np.round(ratios, 4).tolist())

    for arr in (components, ratios):
        arr.setflags(write=False)
    mean = np.array(model.mean_, dtype=float)
    mean.setflags(write=False)
    return PCAResult(components=components, explained_variance_ratio=ratios, mean=mean)


def project(result: PCAResult, points: Points) -> np.ndarray:
    X = as_points(points)
    if X.shape[1] != result.components.shape[1]:
        raise ParameterError(
            f"points have dimension {X.shape[1]}, components expect {result.components.shape[1]}"
        )
    return (X - result.mean) @ result.components.T


def reconstruct(result: PCAResult, scores: np.ndarray) -> np.ndarray:
    return np.asarray(scores, dtype=float) @ result.components + result.mean
