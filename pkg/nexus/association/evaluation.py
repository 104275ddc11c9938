# nexus/association/evaluation.py
#
# Accuracy of a clustering against reference labels, under the best
# one-to-one mapping between cluster ids and labels.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, Mapping, Tuple, Union

import numpy as np
import pandas as pd

from core.errors import InputError, UnsupportedScaleError
from nexus.association.teams import TeamAssignment
from nexus.clustering.cluster_engine import ClusterAssignment


logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_LABELS = 8


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    mapping: Dict[int, str]        # cluster id -> label
    n_matched: int
    n_total: int
    confusion: pd.DataFrame = field(repr=False, compare=False)

    def mapping_frame(self) -> pd.DataFrame:
        return pd.DataFrame(sorted(self.mapping.items()), columns=["cluster", "label"])


def _ids_and_labels(a: Union[ClusterAssignment, TeamAssignment]) -> Tuple[Tuple[str, ...], Tuple[int, ...]]:
    if isinstance(a, TeamAssignment):
        return a.candidate_ids, a.labels
    if a.candidate_ids is None:
        raise InputError(f"{a.method} assignment carries no candidate ids")
    return a.candidate_ids, a.labels


def evaluate_accuracy(
    a: Union[ClusterAssignment, TeamAssignment],
    labels: Mapping[str, str],
) -> AccuracyReport:
    """
    Fraction of candidates whose cluster maps to their label, maximised
    over all one-to-one cluster -> label mappings (exhaustive search).
    """
    ids, predicted = _ids_and_labels(a)
    missing = [cid for cid in ids if cid not in labels]
    if missing:
        raise InputError(f"no reference label for candidate(s) {', '.join(missing)}")

    truth = [str(labels[cid]) for cid in ids]
    label_set = sorted(set(truth))
    cluster_set = sorted(set(predicted))
    if len(label_set) > MAX_EXHAUSTIVE_LABELS or len(cluster_set) > MAX_EXHAUSTIVE_LABELS:
        raise UnsupportedScaleError(
            f"exhaustive mapping supports at most {MAX_EXHAUSTIVE_LABELS} labels and clusters, "
            f"got {len(label_set)} labels and {len(cluster_set)} clusters"
        )

    confusion = pd.crosstab(
        pd.Series(predicted, name="cluster"),
        pd.Series(truth, name="label"),
    ).reindex(index=cluster_set, columns=label_set, fill_value=0)
    counts = confusion.to_numpy()

    best_matched, best_map = -1, {}
    if len(cluster_set) <= len(label_set):
        for perm in permutations(range(len(label_set)), len(cluster_set)):
            matched = int(counts[np.arange(len(cluster_set)), list(perm)].sum())
            if matched > best_matched:
                best_matched = matched
                best_map = {cluster_set[i]: label_set[j] for i, j in enumerate(perm)}
    else:
        for perm in permutations(range(len(cluster_set)), len(label_set)):
            matched = int(counts[list(perm), np.arange(len(label_set))].sum())
            if matched > best_matched:
                best_matched = matched
                best_map = {cluster_set[i]: label_set[j] for j, i in enumerate(perm)}

    n = len(ids)
    accuracy = best_matched / n if n else 0.0
    logger.info("Accuracy %.3f (%d/%d) under mapping %s", accuracy, best_matched, n, best_map)
    return AccuracyReport(
        accuracy=accuracy,
        mapping=dict(sorted(best_map.items())),
        n_matched=best_matched,
        n_total=n,
        confusion=confusion,
    )

