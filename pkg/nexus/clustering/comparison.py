# nexus/clustering/comparison.py
#
# Agreement between clusterings of the same candidates: a membership
# table (method x candidate) and pairwise Rand indices.

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import comb
from sklearn.metrics import rand_score

from core.errors import InputError
from nexus.clustering.cluster_engine import ClusterAssignment


logger = logging.getLogger(__name__)


def _labels(a) -> np.ndarray:
    if isinstance(a, ClusterAssignment):
        return a.as_array()
    return np.asarray(a, dtype=int)


def rand_index(a, b) -> float:
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise InputError(f"partitions cover {la.size} and {lb.size} points")
    if la.size < 2:
        return 1.0
    return float(rand_score(la, lb))


def expected_rand_index(a, b) -> float:
    """Expected Rand index of two random partitions with the same cluster sizes."""
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise InputError(f"partitions cover {la.size} and {lb.size} points")
    n = la.size
    if n < 2:
        return 1.0
    pairs = comb(n, 2)
    same_a = float(sum(comb(c, 2) for c in np.bincount(la)))
    same_b = float(sum(comb(c, 2) for c in np.bincount(lb)))
    expected_same = same_a * same_b / pairs
    return float((pairs - same_a - same_b + 2.0 * expected_same) / pairs)


# ---------------------------------------------------------
# Agreement report
# ---------------------------------------------------------

@dataclass(frozen=True)
class AgreementReport:
    methods: Tuple[str, ...]
    candidate_ids: Tuple[str, ...]
    memberships: Tuple[Tuple[int, ...], ...]          # one row per method
    rand: Tuple[Tuple[str, str, float], ...]          # (method_a, method_b, RI)

    def rand_index_of(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        for x, y, r in self.rand:
            if {x, y} == {a, b}:
                return r
        raise KeyError(f"no comparison between {a!r} and {b!r}")

    def membership_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [list(row) for row in self.memberships],
            index=pd.Index(self.methods, name="method"),
            columns=list(self.candidate_ids),
        )

    def rand_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.rand), columns=["method_a", "method_b", "rand_index"])


def _unique_names(names: Sequence[str]) -> List[str]:
    seen: Dict[str, int] = {}
    out = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        out.append(name if seen[name] == 1 else f"{name}#{seen[name]}")
    return out


def compare_memberships(assignments: Sequence[ClusterAssignment]) -> AgreementReport:
    if not assignments:
        raise InputError("no assignments to compare")

    n = assignments[0].n_points
    ids = next((a.candidate_ids for a in assignments if a.candidate_ids is not None), None)
    for a in assignments:
        if a.n_points != n:
            raise InputError(f"{a.method} covers {a.n_points} points, expected {n}")
        if a.candidate_ids is not None and ids is not None and a.candidate_ids != ids:
            raise InputError(f"{a.method} covers a different candidate set")
    if ids is None:
        ids = tuple(str(i) for i in range(n))

    methods = _unique_names([a.method for a in assignments])
    rand = []
    for i, j in combinations(range(len(assignments)), 2):
        r = rand_index(assignments[i], assignments[j])
        logger.info("Rand index %s vs %s: %.4f", methods[i], methods[j], r)
        rand.append((methods[i], methods[j], r))

    return AgreementReport(
        methods=tuple(methods),
        candidate_ids=tuple(ids),
        memberships=tuple(a.labels for a in assignments),
        rand=tuple(rand),
    )


def membership_long_table(report: AgreementReport) -> pd.DataFrame:
    """Plot-ready (method, candidate, cluster) rows, one per method and candidate."""
    rows = [
        (method, cid, int(label))
        for method, labels in zip(report.methods, report.memberships)
        for cid, label in zip(report.candidate_ids, labels)
    ]
    return pd.DataFrame(rows, columns=["method", "candidate", "cluster"])
