# nexus/association/teams.py
#
# Team formation: spectral clustering of the association matrix, one
# team per cluster.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from core.errors import InputError, ParameterError
from nexus.clustering.cluster_engine import ClusterAssignment, canonical_labels
from nexus.clustering.spectral import spectral_cluster
from nexus.graph.context_graph import CandidateGraph, merge_graphs


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TeamAssignment:
    """Team id -> member candidate ids; team ids ordered by smallest member index."""

    teams: Tuple[Tuple[str, ...], ...]
    candidate_ids: Tuple[str, ...]
    k: int
    method: str = "spectral"
    seed: Optional[int] = None

    @property
    def labels(self) -> Tuple[int, ...]:
        team_of = self.team_of()
        return tuple(team_of[cid] for cid in self.candidate_ids)

    def team_of(self) -> Dict[str, int]:
        return {cid: t for t, members in enumerate(self.teams) for cid in members}

    def as_cluster_assignment(self) -> ClusterAssignment:
        return ClusterAssignment(
            labels=self.labels,
            k=self.k,
            method=f"teams-{self.method}",
            seed=self.seed,
            candidate_ids=self.candidate_ids,
        )

    def to_frame(self, names: Optional[Mapping[int, str]] = None) -> pd.DataFrame:
        rows = []
        for t, members in enumerate(self.teams):
            for cid in members:
                row = {"team": t, "candidate_id": cid}
                if names is not None:
                    row["team_name"] = names.get(t, "")
                rows.append(row)
        return pd.DataFrame(rows)


def _fill_empty_teams(labels: List[int], k: int) -> List[int]:
    # move the last member of the largest team into a new one until k teams exist
    labels = list(labels)
    while len(set(labels)) < k:
        sizes: Dict[int, int] = {}
        for c in labels:
            sizes[c] = sizes.get(c, 0) + 1
        largest = min(sizes, key=lambda c: (-sizes[c], c))
        last = max(i for i, c in enumerate(labels) if c == largest)
        labels[last] = max(labels) + 1
    return labels


def form_teams(
    sim,
    k: int,
    seed: int = 0,
    candidate_ids: Optional[Sequence[str]] = None,
) -> TeamAssignment:
    n = len(sim)
    if k < 1 or k > n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    ids = tuple(candidate_ids) if candidate_ids is not None else tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise InputError(f"{len(ids)} candidate ids for a {n}x{n} matrix")

    assignment = spectral_cluster(sim, k, seed=seed, candidate_ids=ids)
    labels = list(assignment.labels)
    if len(set(labels)) < k:
        logger.warning("Spectral step produced %d of %d teams; splitting the largest", len(set(labels)), k)
        labels = _fill_empty_teams(labels, k)
    labels = list(canonical_labels(labels))

    teams: List[List[str]] = [[] for _ in range(k)]
    for cid, t in zip(ids, labels):
        teams[t].append(cid)

    logger.info("Formed %d teams, sizes %s", k, [len(t) for t in teams])
    return TeamAssignment(
        teams=tuple(tuple(t) for t in teams),
        candidate_ids=ids,
        k=k,
        method="spectral",
        seed=seed,
    )


def cluster_names(
    teams: TeamAssignment,
    graphs: Mapping[str, Optional[CandidateGraph]],
) -> Dict[int, str]:
    """Each team is named by the core theme of its members' merged graph."""
    names: Dict[int, str] = {}
    for t, members in enumerate(teams.teams):
        member_graphs = [graphs[cid] for cid in members if graphs.get(cid) is not None]
        names[t] = merge_graphs(member_graphs).core if member_graphs else f"team_{t}"
    return names
