# nexus/graph/graph_export.py

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Union

import networkx as nx
import pandas as pd
from networkx.readwrite import json_graph

from nexus.graph.context_graph import CandidateGraph, GraphMatrix


def to_networkx(g: CandidateGraph) -> nx.Graph:
    G = nx.Graph(core=g.core)
    for n in g.nodes:
        G.add_node(n.id, weight=n.weight, kind=n.kind.value, sign=n.sign, core=(n.id == g.core))
    for e in g.edges:
        G.add_edge(e.source, e.target, weight=e.weight)
    return G


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(g: CandidateGraph, name: str = "candidate") -> str:
    """Undirected DOT; the core is drawn as a double circle, edges labelled by weight."""
    lines = [f"graph {_dot_id(name)} {{"]
    for n in g.nodes:
        attrs = [f'label={_dot_id(f"{n.id} ({n.value:.4g})")}', f'kind="{n.kind.value}"']
        if n.id == g.core:
            attrs += ["shape=doublecircle", 'core="true"']
        lines.append(f"  {_dot_id(n.id)} [{', '.join(attrs)}];")
    for e in g.edges:
        lines.append(f'  {_dot_id(e.source)} -- {_dot_id(e.target)} [label="{e.weight:.4g}", weight={e.weight:.6g}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_adjacency(g: CandidateGraph) -> Dict[str, Any]:
    return json_graph.adjacency_data(to_networkx(g))


def write_graph_json(graphs: Dict[str, CandidateGraph], path: Union[str, Path]) -> Path:
    """Several named graphs in one JSON document of adjacency records."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {name: graph_to_adjacency(g) for name, g in graphs.items()}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def graph_matrix_to_frame(m: GraphMatrix) -> pd.DataFrame:
    return pd.DataFrame(m.values, index=list(m.node_ids), columns=list(m.node_ids))


def export_graph_matrix_csv(m: GraphMatrix, path: Union[str, Path]) -> Path:
    """Weight-by-score outer product, node ids on both axes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # + 0.0 folds the -0.0 entries of zero-weight rows into 0
    (graph_matrix_to_frame(m) + 0.0).to_csv(path, float_format="%.10g", lineterminator="\n")
    return path
