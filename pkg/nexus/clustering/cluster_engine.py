# nexus/clustering/cluster_engine.py
#
# Point clustering (k-means, average-linkage agglomerative) and the
# within-cluster dispersion W used by the elbow method.

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import cdist, pdist, squareform
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from core.errors import InputError, ParameterError
from nexus.intake.survey_ingest import PointMatrix


logger = logging.getLogger(__name__)

Points = Union[PointMatrix, np.ndarray, Sequence[Sequence[float]]]

MAX_LLOYD_ITERATIONS = 300


@dataclass(frozen=True)
class ClusterAssignment:
    """Point index -> cluster id, ids dense in [0, n_clusters) by first appearance."""

    labels: Tuple[int, ...]
    k: int
    method: str
    seed: Optional[int] = None
    candidate_ids: Optional[Tuple[str, ...]] = None

    @property
    def n_points(self) -> int:
        return len(self.labels)

    @property
    def n_clusters(self) -> int:
        return len(set(self.labels))

    def members(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for i, c in enumerate(self.labels):
            out.setdefault(c, []).append(i)
        return out

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=int)


def as_points(points: Points) -> np.ndarray:
    if isinstance(points, PointMatrix):
        return np.asarray(points.rows, dtype=float)
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InputError(f"points must be a 2-D array, got shape {arr.shape}")
    return arr


def _ids_of(points: Points) -> Optional[Tuple[str, ...]]:
    return points.candidate_ids if isinstance(points, PointMatrix) else None


def canonical_labels(raw: Sequence[int]) -> Tuple[int, ...]:
    """Renumber cluster ids in order of first appearance."""
    mapping: Dict[int, int] = {}
    out = []
    for c in raw:
        if c not in mapping:
            mapping[c] = len(mapping)
        out.append(mapping[c])
    return tuple(out)


def _check_k(k: int, n: int) -> None:
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k > n:
        raise ParameterError(f"k={k} exceeds the number of points ({n})")


# ---------------------------------------------------------
# k-means
# ---------------------------------------------------------

def kmeans(
    points: Points,
    k: int,
    seed: int = 0,
    n_init: int = 1,
    max_iter: int = MAX_LLOYD_ITERATIONS,
) -> ClusterAssignment:
    """
    Lloyd iterations from a seeded k-means++ start (best of n_init starts).
    Final labels are recomputed as nearest centroid, ties to the lowest
    centroid index.
    """
    X = as_points(points)
    _check_k(k, X.shape[0])

    if k == 1:
        labels = (0,) * X.shape[0]
    else:
        model = KMeans(
            n_clusters=k,
            init="k-means++",
            n_init=n_init,
            max_iter=max_iter,
            tol=0.0,
            random_state=seed,
            algorithm="lloyd",
        )
        with warnings.catch_warnings():
            # fewer distinct points than k is legitimate input here
            warnings.simplefilter("ignore", ConvergenceWarning)
            model.fit(X)
        nearest = np.argmin(cdist(X, model.cluster_centers_, "sqeuclidean"), axis=1)
        labels = canonical_labels(int(c) for c in nearest)

    return ClusterAssignment(labels=labels, k=k, method="kmeans", seed=seed, candidate_ids=_ids_of(points))


# ---------------------------------------------------------
# Dispersion
# ---------------------------------------------------------

def dispersion(points: Points, assignment: ClusterAssignment) -> float:
    """
    W = sum_k D_k / (2 n_k), with D_k the sum of squared Euclidean
    distances over ordered pairs inside cluster k.
    """
    X = as_points(points)
    if len(assignment.labels) != X.shape[0]:
        raise InputError("assignment does not cover every point")

    total = 0.0
    labels = assignment.as_array()
    for c in sorted(set(assignment.labels)):
        block = X[labels == c]
        n_k = block.shape[0]
        if n_k < 2:
            continue
        d_k = 2.0 * float(pdist(block, "sqeuclidean").sum())
        total += d_k / (2.0 * n_k)
    return total


def wcss(points: Points, assignment: ClusterAssignment) -> float:
    """Centroid form of the same quantity: sum of squared distances to cluster means."""
    X = as_points(points)
    labels = assignment.as_array()
    total = 0.0
    for c in sorted(set(assignment.labels)):
        block = X[labels == c]
        total += float(((block - block.mean(axis=0)) ** 2).sum())
    return total


# ---------------------------------------------------------
# Agglomerative (average linkage)
# ---------------------------------------------------------

AGGLOMERATIVE_TAG = "agglomerative-average[plumbing]"


def agglomerative_cluster(
    k: int,
    points: Optional[Points] = None,
    distances: Optional[np.ndarray] = None,
) -> ClusterAssignment:
    """
    Average-linkage hierarchy cut into at most k clusters, either on
    Euclidean points or on a precomputed square distance matrix.
    """
    if (points is None) == (distances is None):
        raise ParameterError("pass exactly one of points or distances")

    if points is not None:
        X = as_points(points)
        n = X.shape[0]
        condensed = pdist(X, "euclidean") if n > 1 else np.zeros(0)
        ids = _ids_of(points)
    else:
        D = np.asarray(distances, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InputError("distance matrix must be square")
        n = D.shape[0]
        condensed = squareform(np.clip((D + D.T) / 2.0, 0.0, None), checks=False)
        ids = None

    _check_k(k, n)
    if n == 1 or k == 1:
        return ClusterAssignment(labels=(0,) * n, k=k, method=AGGLOMERATIVE_TAG, candidate_ids=ids)

    tree = linkage(condensed, method="average")
    raw = fcluster(tree, t=k, criterion="maxclust")
    return ClusterAssignment(
        labels=canonical_labels(int(c) for c in raw),
        k=k,
        method=AGGLOMERATIVE_TAG,
        candidate_ids=ids,
    )
