# nexus/pipeline/stages.py
#
# The pipeline stages, in run order. Each stage reads what earlier stages
# left in the shared RunState, adds its own results and writes its
# artefacts through the run's ReportWriter.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional

import pandas as pd

from core.base_module import CultureModule
from core.errors import DegenerateInputError, ParameterError
from nexus.association.association_engine import AssociationEngine, AssociationReport, CandidateProfile
from nexus.association.evaluation import AccuracyReport, evaluate_accuracy
from nexus.association.teams import TeamAssignment, cluster_names, form_teams
from nexus.clustering.cluster_engine import ClusterAssignment, agglomerative_cluster, kmeans
from nexus.clustering.comparison import AgreementReport, compare_memberships, membership_long_table
from nexus.clustering.k_selection import KSelectionReport, select_k_elbow, select_k_silhouette
from nexus.clustering.pca import PCAResult, pca, project
from nexus.clustering.spectral import spectral_cluster
from nexus.graph.context_graph import graph_matrix
from nexus.graph.graph_export import export_graph_matrix_csv, graph_to_dot, write_graph_json
from nexus.intake.survey_ingest import (
    PointMatrix,
    SurveyDataset,
    ValidationReport,
    encode_mcq,
    export_point_matrix_csv,
    load_survey,
    validate_dataset,
)
from nexus.lexicon.embeddings import EmbeddingTable, load_embeddings
from nexus.lexicon.stopwords import load_stopwords
from nexus.lexicon.text_pipeline import export_context_vectors_csv
from nexus.pipeline.config import PipelineConfig
from nexus.pipeline.reports import ReportWriter


@dataclass
class RunState:
    cfg: PipelineConfig
    writer: ReportWriter

    dataset: Optional[SurveyDataset] = None
    table: Optional[EmbeddingTable] = None
    stop_words: Optional[FrozenSet[str]] = None
    validation: Optional[ValidationReport] = None
    points: Optional[PointMatrix] = None
    engine: Optional[AssociationEngine] = None
    profiles: List[CandidateProfile] = field(default_factory=list)
    association: Optional[AssociationReport] = None
    k: Optional[int] = None
    k_report: Optional[KSelectionReport] = None
    assignments: List[ClusterAssignment] = field(default_factory=list)
    pca: Optional[PCAResult] = None
    agreement: Optional[AgreementReport] = None
    teams: Optional[TeamAssignment] = None
    team_names: Dict[int, str] = field(default_factory=dict)
    accuracy: Optional[AccuracyReport] = None

    def summary(self) -> Dict[str, object]:
        out: Dict[str, object] = {}
        if self.dataset is not None:
            out["candidates"] = len(self.dataset.responses)
        if self.k is not None:
            out["k"] = self.k
        if self.agreement is not None:
            out["rand_index"] = {f"{a} vs {b}": round(r, 10) for a, b, r in self.agreement.rand}
        if self.teams is not None:
            out["team_sizes"] = [len(t) for t in self.teams.teams]
        if self.accuracy is not None:
            out["accuracy"] = round(self.accuracy.accuracy, 10)
        return out


class IngestStage(CultureModule):
    name = "ingest"

    def run(self, state: RunState) -> None:
        cfg = state.cfg
        state.dataset = load_survey(cfg.survey_path)
        state.table = load_embeddings(cfg.embedding_path)
        state.stop_words = load_stopwords(cfg.stopwords_path)
        self.on_event("loaded", {"candidates": len(state.dataset.responses), "vocabulary": len(state.table)})


class ValidateStage(CultureModule):
    """Candidates with blocking issues are dropped from the rest of the run."""

    name = "validate"

    def run(self, state: RunState) -> None:
        ds = state.dataset
        report = validate_dataset(ds)
        state.validation = report
        state.writer.write_frame("validation.csv", report.to_frame())

        blocked = {i.candidate_id for i in report.blocking_issues}
        if blocked:
            self.logger.warning("Dropping %d candidate(s) with blocking issues", len(blocked))
            kept = tuple(r for r in ds.responses if r.candidate_id not in blocked)
            labels = None
            if ds.labels is not None:
                labels = {cid: lab for cid, lab in ds.labels.items() if cid not in blocked}
            state.dataset = SurveyDataset(questions=ds.questions, responses=kept, labels=labels)

        if not state.dataset.responses:
            raise DegenerateInputError("no candidate passed validation")
        self.logger.info("%d candidate(s) pass validation", len(state.dataset.responses))


class EncodeStage(CultureModule):
    name = "encode"

    def run(self, state: RunState) -> None:
        state.points = encode_mcq(state.dataset, standardize=state.cfg.standardize)
        state.writer.write_with("points.csv", lambda path: export_point_matrix_csv(state.points, path))


class FeaturizeStage(CultureModule):
    name = "featurize"

    def run(self, state: RunState) -> None:
        cfg = state.cfg
        state.engine = AssociationEngine(
            state.table,
            weights=cfg.channel_weights,
            specs=cfg.feature_specs or None,
            stop_words=state.stop_words,
            top_n=cfg.top_n,
            threshold=cfg.match_threshold,
            mode=cfg.similarity_mode,
        )
        state.profiles = state.engine.build_profiles(state.dataset)

        features = pd.DataFrame(
            [{"candidate_id": p.candidate_id, **p.features, "profile": p.profile} for p in state.profiles]
        )
        state.writer.write_frame("features.csv", features)
        state.writer.write_with(
            "context_vectors.csv",
            lambda path: export_context_vectors_csv(((p.candidate_id, p.context) for p in state.profiles), path),
        )


class GraphStage(CultureModule):
    name = "graphs"

    def run(self, state: RunState) -> None:
        graphs = {}
        for p in state.profiles:
            for kind, g in (("features", p.feature_graph), ("text", p.text_graph)):
                if g is None:
                    continue
                name = f"{p.candidate_id}_{kind}"
                graphs[name] = g
                state.writer.write_text(f"graphs/{name}.dot", graph_to_dot(g, name))
                state.writer.write_with(
                    f"graphs/{name}_matrix.csv",
                    lambda path, g=g: export_graph_matrix_csv(graph_matrix(g), path),
                )
        state.writer.write_with("graphs/graphs.json", lambda path: write_graph_json(graphs, path))
        self.logger.info("Exported %d candidate graphs", len(graphs))


class AssociateStage(CultureModule):
    name = "associate"

    def run(self, state: RunState) -> None:
        state.association = state.engine.associate(state.profiles)
        state.writer.write_frame("association_pairs.csv", state.association.pairs_frame())
        state.writer.write_frame("association_matrix.csv", state.association.matrix_frame(), index=True)


class SelectKStage(CultureModule):
    name = "select-k"

    def run(self, state: RunState) -> None:
        cfg = state.cfg
        n = state.points.shape[0]
        if cfg.k_mode == "fixed":
            state.k = cfg.k
        else:
            k_max = min(cfg.k_max, n - 1 if cfg.k_mode == "silhouette" else n)
            selector = select_k_elbow if cfg.k_mode == "elbow" else select_k_silhouette
            state.k_report = selector(state.points, k_max, cfg.seed)
            state.k = state.k_report.chosen_k
            state.writer.write_frame("k_selection.csv", state.k_report.to_frame())

        if not 1 <= state.k <= n:
            raise ParameterError(f"k={state.k} does not fit {n} candidate(s)")
        self.logger.info("Using k=%d (%s)", state.k, cfg.k_mode)


class ClusterStage(CultureModule):
    """k-means on the encoded answers, spectral and agglomerative on the association."""

    name = "cluster"

    def run(self, state: RunState) -> None:
        seed, k = state.cfg.seed, state.k
        ids = state.association.candidate_ids
        sim = state.association.matrix

        state.assignments = [
            kmeans(state.points, k, seed=seed),
            spectral_cluster(sim, k, seed=seed, candidate_ids=ids),
            _with_ids(agglomerative_cluster(k, distances=1.0 - sim), ids),
        ]
        rows = [
            {"method": a.method, "candidate_id": cid, "cluster": c}
            for a in state.assignments
            for cid, c in zip(ids, a.labels)
        ]
        state.writer.write_frame("assignments.csv", pd.DataFrame(rows))

        n, dim = state.points.shape
        n_components = min(2, n, dim)
        if n_components >= 1:
            state.pca = pca(state.points, n_components)
            scores = project(state.pca, state.points)
            projection = pd.DataFrame(scores, columns=[f"pc{i + 1}" for i in range(n_components)])
            projection.insert(0, "candidate_id", list(state.points.candidate_ids))
            state.writer.write_frame("pca_variance.csv", state.pca.to_frame())
            state.writer.write_frame("pca_projection.csv", projection)
        else:
            self.logger.warning("No MCQ columns; PCA skipped")


class CompareStage(CultureModule):
    name = "compare"

    def run(self, state: RunState) -> None:
        state.agreement = compare_memberships(state.assignments)
        state.writer.write_frame("membership.csv", membership_long_table(state.agreement))
        state.writer.write_frame("rand_index.csv", state.agreement.rand_frame())


class TeamStage(CultureModule):
    name = "teams"

    def run(self, state: RunState) -> None:
        ids = state.association.candidate_ids
        state.teams = form_teams(state.association.matrix, state.k, seed=state.cfg.seed, candidate_ids=ids)
        graphs = {p.candidate_id: p.text_graph or p.feature_graph for p in state.profiles}
        state.team_names = cluster_names(state.teams, graphs)
        state.writer.write_frame("teams.csv", state.teams.to_frame(state.team_names))


class EvaluateStage(CultureModule):
    name = "evaluate"

    def run(self, state: RunState) -> Optional[str]:
        labels = state.dataset.labels
        if not labels:
            self.logger.info("Survey carries no labels; nothing to evaluate")
            return "skipped"

        state.accuracy = evaluate_accuracy(state.teams, labels)
        acc = state.accuracy
        state.writer.write_frame(
            "accuracy.csv",
            pd.DataFrame([{"accuracy": acc.accuracy, "matched": acc.n_matched, "total": acc.n_total}]),
        )
        state.writer.write_frame("label_mapping.csv", acc.mapping_frame())
        state.writer.write_frame("confusion.csv", acc.confusion, index=True)
        return None


def _with_ids(a: ClusterAssignment, ids) -> ClusterAssignment:
    return ClusterAssignment(labels=a.labels, k=a.k, method=a.method, seed=a.seed, candidate_ids=tuple(ids))


STAGES = (
    IngestStage,
    ValidateStage,
    EncodeStage,
    FeaturizeStage,
    GraphStage,
    AssociateStage,
    SelectKStage,
    ClusterStage,
    CompareStage,
    TeamStage,
    EvaluateStage,
)
STAGE_NAMES = tuple(s.name for s in STAGES)
