# nexus/clustering/k_selection.py
#
# Choosing the number of clusters: elbow (maximum discrete curvature of
# the dispersion curve W(k)) and mean silhouette.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import silhouette_samples

from core.errors import DegenerateInputError, ParameterError
from nexus.clustering.cluster_engine import Points, as_points, dispersion, kmeans


logger = logging.getLogger(__name__)

ELBOW_RESTARTS = 10
ZERO_DISPERSION = 1e-9


@dataclass(frozen=True)
class KSelectionReport:
    table: Tuple[Tuple[int, float], ...]  # (k, statistic)
    chosen_k: int
    rule: str                             # "elbow" | "silhouette"
    seed: int
    curvature: Optional[Tuple[Tuple[int, float], ...]] = None

    def statistic(self, k: int) -> float:
        return dict(self.table)[k]

    def to_frame(self) -> pd.DataFrame:
        stat_name = "dispersion" if self.rule == "elbow" else "mean_silhouette"
        frame = pd.DataFrame(self.table, columns=["k", stat_name])
        if self.curvature is not None:
            curv = dict(self.curvature)
            frame["second_difference"] = [curv.get(k, float("nan")) for k in frame["k"]]
        frame["chosen"] = frame["k"] == self.chosen_k
        return frame


def select_k_elbow(points: Points, k_max: int, seed: int = 0) -> KSelectionReport:
    """
    W(k) for k = 1..k_max (best of ten seeded restarts each); pick the k
    with the largest W(k-1) - 2W(k) + W(k+1). Data with W(1) ~ 0 gives k = 1.
    """
    X = as_points(points)
    if k_max < 3:
        raise ParameterError(f"elbow selection needs k_max >= 3, got {k_max}")
    if X.shape[0] < k_max:
        raise ParameterError(f"k_max={k_max} exceeds the number of points ({X.shape[0]})")

    curve: Dict[int, float] = {}
    for k in range(1, k_max + 1):
        assignment = kmeans(X, k, seed=seed, n_init=ELBOW_RESTARTS)
        curve[k] = dispersion(X, assignment)
        logger.debug("elbow: k=%d W=%.6g", k, curve[k])

    table = tuple(sorted(curve.items()))
    if curve[1] < ZERO_DISPERSION:
        return KSelectionReport(table=table, chosen_k=1, rule="elbow", seed=seed, curvature=())

    curvature = {k: curve[k - 1] - 2.0 * curve[k] + curve[k + 1] for k in range(2, k_max)}
    chosen = max(sorted(curvature), key=lambda k: curvature[k])  # first max wins -> smaller k
    logger.info("Elbow selection picked k=%d", chosen)
    return KSelectionReport(
        table=table,
        chosen_k=chosen,
        rule="elbow",
        seed=seed,
        curvature=tuple(sorted(curvature.items())),
    )


def silhouette_values(points: Points, labels) -> np.ndarray:
    """
    Per-point silhouette (b - a) / max(a, b). Points in singleton clusters
    score 0; with a single cluster overall every point scores 0.
    """
    X = as_points(points)
    labels = np.asarray(labels)
    n_labels = len(set(labels.tolist()))
    if n_labels < 2 or n_labels >= X.shape[0]:
        return np.zeros(X.shape[0])
    return silhouette_samples(X, labels, metric="euclidean")


def select_k_silhouette(points: Points, k_max: int, seed: int = 0) -> KSelectionReport:
    """Pick k in 2..k_max with the highest mean silhouette (ties -> smaller k)."""
    X = as_points(points)
    if k_max < 2:
        raise ParameterError(f"silhouette selection needs k_max >= 2, got {k_max}")
    if X.shape[0] <= k_max:
        raise ParameterError(f"silhouette selection needs more than k_max={k_max} points")
    if np.all(X == X[0]):
        raise DegenerateInputError("all points are identical; silhouette is undefined")

    scores: Dict[int, float] = {}
    for k in range(2, k_max + 1):
        assignment = kmeans(X, k, seed=seed, n_init=ELBOW_RESTARTS)
        scores[k] = float(np.mean(silhouette_values(X, assignment.labels)))
        logger.debug("silhouette: k=%d s=%.6f", k, scores[k])

    chosen = max(sorted(scores), key=lambda k: scores[k])
    logger.info("Silhouette selection picked k=%d (s=%.3f)", chosen, scores[chosen])
    return KSelectionReport(table=tuple(sorted(scores.items())), chosen_k=chosen, rule="silhouette", seed=seed)
