# nexus/graph/context_graph.py
#
# Per-candidate context graphs. Every graph is a star: the core theme
# (heaviest node) sits in the middle, every other node hangs off it with
# an edge carrying the leaf's weight.

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.errors import EmptyGraphError, InputError
from nexus.lexicon.text_pipeline import ContextVector


logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    FEATURE = "feature"
    TERM = "term"


@dataclass(frozen=True)
class GraphNode:
    id: str
    weight: float
    kind: NodeKind
    sign: int = 1  # sign of the raw feature value; terms are always +1

    @property
    def value(self) -> float:
        return self.sign * self.weight


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    weight: float


@dataclass(frozen=True)
class CandidateGraph:
    core: str
    nodes: Tuple[GraphNode, ...]
    edges: Tuple[GraphEdge, ...]

    def __post_init__(self) -> None:
        if not self.nodes:
            raise EmptyGraphError("a candidate graph needs at least one node")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InputError("node ids must be unique")
        if self.core not in ids:
            raise InputError(f"core '{self.core}' is not a node")
        for n in self.nodes:
            if not np.isfinite(n.weight) or n.weight < 0:
                raise InputError(f"node '{n.id}' has invalid weight {n.weight}")

        leaves = {n.id for n in self.nodes if n.id != self.core}
        targets = [e.target for e in self.edges]
        if any(e.source != self.core for e in self.edges) or sorted(targets) != sorted(leaves):
            raise InputError("edges must form a star around the core")

    # -----------------------------------------------------
    # Views
    # -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def node_ids(self) -> Tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def weights(self) -> Dict[str, float]:
        return {n.id: n.weight for n in self.nodes}

    @property
    def total_weight(self) -> float:
        # correctly rounded, independent of node order
        return math.fsum(n.weight for n in self.nodes)

    def node(self, node_id: str) -> GraphNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def shares(self) -> Dict[str, float]:
        """Node weight over total weight; uniform when every weight is 0."""
        total = self.total_weight
        if total <= 0.0:
            return {n.id: 1.0 / len(self.nodes) for n in self.nodes}
        return {n.id: n.weight / total for n in self.nodes}

    def ranks(self) -> Dict[str, int]:
        """Position by descending weight (ties by id); the core is rank 0."""
        ordered = sorted(self.nodes, key=lambda n: (-n.weight, n.id))
        return {n.id: pos for pos, n in enumerate(ordered)}

    def signature(self) -> Tuple:
        """Insertion-order independent identity of the graph."""
        return tuple(sorted((n.id, n.kind.value, n.sign, n.weight) for n in self.nodes))


# ---------------------------------------------------------
# Construction
# ---------------------------------------------------------

def core_theme(nodes: Mapping[str, float]) -> str:
    """Heaviest node; ties go to the lexicographically smallest id."""
    if not nodes:
        raise EmptyGraphError("core theme of an empty node set")
    return min(nodes.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def _star(nodes: List[GraphNode]) -> CandidateGraph:
    core = core_theme({n.id: n.weight for n in nodes})
    edges = tuple(GraphEdge(core, n.id, n.weight) for n in nodes if n.id != core)
    return CandidateGraph(core=core, nodes=tuple(nodes), edges=edges)


def build_graph(
    features: Mapping[str, float],
    ctx: Optional[ContextVector] = None,
) -> CandidateGraph:
    """
    One node per feature (|value| as weight, sign kept) and one per
    context term (score as weight), wired as a star around the core theme.
    """
    ctx = ctx or ContextVector()
    if not features and not len(ctx):
        raise EmptyGraphError("empty graph: no features and no context terms")

    nodes: List[GraphNode] = []
    for name, value in features.items():
        value = float(value)
        nodes.append(GraphNode(id=name, weight=abs(value), kind=NodeKind.FEATURE, sign=-1 if value < 0 else 1))

    seen = set(features)
    for term, score in ctx:
        if term in seen:
            raise InputError(f"context term '{term}' collides with a feature name")
        nodes.append(GraphNode(id=term, weight=float(score), kind=NodeKind.TERM))

    return _star(nodes)


def merge_graphs(graphs: Sequence[CandidateGraph]) -> CandidateGraph:
    """
    Weight-summed union of several graphs (signed values are summed for
    features). Used to name a group of candidates by its merged core theme.
    """
    if not graphs:
        raise EmptyGraphError("nothing to merge")

    values: Dict[str, float] = {}
    kinds: Dict[str, NodeKind] = {}
    for g in graphs:
        for n in g.nodes:
            values[n.id] = values.get(n.id, 0.0) + n.value
            kinds.setdefault(n.id, n.kind)

    nodes = [
        GraphNode(id=nid, weight=abs(v), kind=kinds[nid], sign=-1 if v < 0 else 1)
        for nid, v in values.items()
    ]
    return _star(nodes)


# ---------------------------------------------------------
# Matrix form
# ---------------------------------------------------------

@dataclass(frozen=True)
class GraphMatrix:
    """Outer product W f^T of node weights and node scores."""

    node_ids: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.values)) if self.values.size else 0


def outer_matrix(
    weights: Sequence[float],
    scores: Sequence[float],
    node_ids: Optional[Sequence[str]] = None,
) -> GraphMatrix:
    w = np.asarray(weights, dtype=float)
    f = np.asarray(scores, dtype=float)
    ids = tuple(node_ids) if node_ids is not None else tuple(str(i) for i in range(len(w)))
    return GraphMatrix(node_ids=ids, values=np.outer(w, f))


def graph_matrix(g: CandidateGraph) -> GraphMatrix:
    """
    Node weights as the column, signed node values as the feature-score
    row, both in insertion order.
    """
    return outer_matrix(
        [n.weight for n in g.nodes],
        [n.value for n in g.nodes],
        node_ids=g.node_ids,
    )
