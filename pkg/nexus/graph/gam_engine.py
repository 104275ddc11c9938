# nexus/graph/gam_engine.py
#
# Graphical association between two candidate graphs.
#
#   1. find corresponding nodes (greedy on pair contribution, best pair
#      first, followed by a small local exchange pass)
#   2. every matched pair contributes
#        match_score * min(share_1, share_2) * core_factor
#      where share = node weight / graph weight and core_factor is 1 when
#      both nodes sit at (almost) the same distance-to-core rank, else 0.5
#
# The score is symmetric, bounded in [0, 1] and exactly 1 for a graph
# compared with itself.

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from core.errors import ParameterError
from nexus.graph.context_graph import CandidateGraph, NodeKind
from nexus.lexicon.embeddings import EmbeddingTable


logger = logging.getLogger(__name__)

CORE_MISALIGNED_FACTOR = 0.5
REPAIR_PAIRS = 2      # matched pairs released per exchange
REPAIR_EPS = 1e-12


@dataclass(frozen=True)
class NodeMatch:
    left: str
    right: str
    score: float


@dataclass(frozen=True)
class NodeCorrespondence:
    matches: Tuple[NodeMatch, ...]
    unmatched_left: Tuple[str, ...]
    unmatched_right: Tuple[str, ...]

    def as_dict(self) -> Dict[str, str]:
        return {m.left: m.right for m in self.matches}


# ---------------------------------------------------------
# Pair scores
# ---------------------------------------------------------

def _pair_scores(
    g1: CandidateGraph,
    g2: CandidateGraph,
    table: Optional[EmbeddingTable],
) -> Dict[Tuple[str, str], float]:
    """
    1.0 for identical ids of the same kind, embedding cosine (clipped to
    [0, 1]) between text terms, 0 otherwise.
    """
    left = sorted(g1.nodes, key=lambda n: n.id)
    right = sorted(g2.nodes, key=lambda n: n.id)

    sims = None
    if table is not None and len(table):
        lt = [n.id for n in left if n.kind is NodeKind.TERM]
        rt = [n.id for n in right if n.kind is NodeKind.TERM]
        if lt and rt:
            block = table.unit_matrix(lt) @ table.unit_matrix(rt).T
            sims = {(a, b): float(block[i, j]) for i, a in enumerate(lt) for j, b in enumerate(rt)}

    scores: Dict[Tuple[str, str], float] = {}
    for a in left:
        for b in right:
            if a.id == b.id and a.kind is b.kind:
                s = 1.0
            elif a.kind is NodeKind.TERM and b.kind is NodeKind.TERM and sims is not None:
                s = min(1.0, max(0.0, sims[(a.id, b.id)]))
            else:
                s = 0.0
            scores[(a.id, b.id)] = s
    return scores


def _check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"match threshold must be in [0, 1], got {threshold}")


# ---------------------------------------------------------
# Matching
# ---------------------------------------------------------

def _contribution(
    g1: CandidateGraph,
    g2: CandidateGraph,
) -> Callable[[str, str, float], float]:
    s1, s2 = g1.shares(), g2.shares()
    r1, r2 = g1.ranks(), g2.ranks()

    def contrib(a: str, b: str, score: float) -> float:
        factor = 1.0 if abs(r1[a] - r2[b]) <= 1 else CORE_MISALIGNED_FACTOR
        return score * min(s1[a], s2[b]) * factor

    return contrib


def _gain_matrix(
    g1: CandidateGraph,
    g2: CandidateGraph,
    table: Optional[EmbeddingTable],
    threshold: float,
) -> Tuple[List[str], List[str], Dict[Tuple[str, str], float], np.ndarray]:
    """Eligible pair scores and their contributions, rows and columns in id order."""
    scores = _pair_scores(g1, g2, table)
    contrib = _contribution(g1, g2)

    left, right = sorted(g1.node_ids), sorted(g2.node_ids)
    eligible = {p: s for p, s in scores.items() if s > 0.0 and s >= threshold}
    gain = np.zeros((len(left), len(right)))
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            if (a, b) in eligible:
                gain[i, j] = contrib(a, b, eligible[(a, b)])
    return left, right, eligible, gain


def _repair(gain: np.ndarray, matched: Dict[int, int]) -> Dict[int, int]:
    """
    Local exchange pass over a greedy matching (row -> column of gain).
    Releases every set of at most REPAIR_PAIRS matched pairs, re-solves the
    released nodes together with all free nodes, and applies the best
    strict gain. Stops when no exchange helps or the matching reaches the
    assignment bound.
    """
    rows, cols = linear_sum_assignment(gain, maximize=True)
    bound = math.fsum(gain[rows, cols])

    while math.fsum(gain[r, c] for r, c in matched.items()) < bound - REPAIR_EPS:
        free_r = [r for r in range(gain.shape[0]) if r not in matched]
        used = set(matched.values())
        free_c = [c for c in range(gain.shape[1]) if c not in used]

        best, swap = REPAIR_EPS, None
        for size in range(1, REPAIR_PAIRS + 1):
            for released in combinations(sorted(matched.items()), size):
                rs = [r for r, _ in released] + free_r
                cs = [c for _, c in released] + free_c
                sub = gain[np.ix_(rs, cs)]
                i, j = linear_sum_assignment(sub, maximize=True)
                delta = math.fsum(sub[i, j]) - math.fsum(gain[r, c] for r, c in released)
                if delta > best:
                    best = delta
                    swap = (released, [(rs[a], cs[b]) for a, b in zip(i, j) if sub[a, b] > 0.0])

        if swap is None:
            break
        released, chosen = swap
        for r, _ in released:
            del matched[r]
        matched.update(chosen)
    return matched


def match_nodes(
    g1: CandidateGraph,
    g2: CandidateGraph,
    table: Optional[EmbeddingTable] = None,
    threshold: float = 0.5,
) -> NodeCorrespondence:
    """
    Greedy correspondence: repeatedly take the unmatched pair (score at or
    above the threshold) that adds the most to the association score,
    score * min(share) * core_factor. Ties prefer the higher score, then
    identical ids, then lexicographic (left, right). A local exchange pass
    then repairs picks that block two better pairs.
    """
    _check_threshold(threshold)
    left, right, eligible, gain = _gain_matrix(g1, g2, table, threshold)

    ranked = sorted(
        ((i, j) for i, a in enumerate(left) for j, b in enumerate(right) if (a, b) in eligible),
        key=lambda p: (-gain[p], -eligible[(left[p[0]], right[p[1]])], left[p[0]] != right[p[1]], p),
    )
    matched: Dict[int, int] = {}
    for i, j in ranked:
        if i in matched or j in matched.values():
            continue
        matched[i] = j

    matched = _repair(gain, matched)
    pairs = [(left[i], right[j]) for i, j in matched.items()]
    matches = [NodeMatch(a, b, eligible[(a, b)]) for a, b in pairs if (a, b) in eligible]
    used_l = {m.left for m in matches}
    used_r = {m.right for m in matches}

    return NodeCorrespondence(
        matches=tuple(sorted(matches, key=lambda m: (m.left, m.right))),
        unmatched_left=tuple(sorted(set(left) - used_l)),
        unmatched_right=tuple(sorted(set(right) - used_r)),
    )


# ---------------------------------------------------------
# Association score
# ---------------------------------------------------------

def _canonical(g1: CandidateGraph, g2: CandidateGraph) -> Tuple[CandidateGraph, CandidateGraph]:
    # fixed orientation makes the score exactly symmetric
    return (g1, g2) if g1.signature() <= g2.signature() else (g2, g1)


def gam_similarity(
    g1: CandidateGraph,
    g2: CandidateGraph,
    table: Optional[EmbeddingTable] = None,
    threshold: float = 0.5,
) -> float:
    _check_threshold(threshold)
    if g1.signature() == g2.signature():
        return 1.0

    a, b = _canonical(g1, g2)
    corr = match_nodes(a, b, table, threshold)
    contrib = _contribution(a, b)

    total = math.fsum(contrib(m.left, m.right, m.score) for m in corr.matches)
    return float(min(1.0, max(0.0, total)))


def optimal_gam_similarity(
    g1: CandidateGraph,
    g2: CandidateGraph,
    table: Optional[EmbeddingTable] = None,
    threshold: float = 0.5,
) -> float:
    """
    Same score as gam_similarity but over the best possible matching
    (assignment problem on pair contributions). Reference bound for the
    greedy matcher.
    """
    _check_threshold(threshold)
    if g1.signature() == g2.signature():
        return 1.0

    a, b = _canonical(g1, g2)
    _, _, _, gain = _gain_matrix(a, b, table, threshold)

    rows, cols = linear_sum_assignment(gain, maximize=True)
    total = math.fsum(gain[rows, cols])
    return float(min(1.0, max(0.0, total)))
