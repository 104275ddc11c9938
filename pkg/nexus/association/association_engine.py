# nexus/association/association_engine.py
#
# Cultural association between candidates, from three channels:
#   1. GAM similarity of the MCQ feature graphs
#   2. GAM similarity of the free-text context graphs
#   3. hybrid document similarity of the preprocessed free text
# combined by a weighted mean with weights normalised to sum 1.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import TYPE_CHECKING, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import CultureCoreError, EmptyGraphError, ParameterError, StageError
from nexus.graph.context_graph import CandidateGraph, build_graph
from nexus.graph.features import (
    FeatureSpec,
    check_specs,
    default_feature_specs,
    derive_features,
    personal_profile,
)
from nexus.graph.gam_engine import gam_similarity
from nexus.intake.survey_ingest import SurveyDataset, encode_mcq, free_text_of
from nexus.lexicon.embeddings import EmbeddingTable, load_embeddings
from nexus.lexicon.stopwords import ENGLISH_STOP_WORDS, load_stopwords
from nexus.lexicon.text_pipeline import (
    ContextVector,
    PreprocessConfig,
    SimilarityMode,
    TokenList,
    document_similarity,
    extract_context_vector,
    preprocess,
)

if TYPE_CHECKING:
    from nexus.pipeline.config import PipelineConfig


logger = logging.getLogger(__name__)

CHANNELS = ("mcq_graph", "text_graph", "text_vector")


# ---------------------------------------------------------
# Channel weights
# ---------------------------------------------------------

class ChannelWeights(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    w_mcq_graph: float = Field(default=1.0, ge=0.0)
    w_text_graph: float = Field(default=1.0, ge=0.0)
    w_text_vector: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def _not_all_zero(self) -> "ChannelWeights":
        if self.w_mcq_graph + self.w_text_graph + self.w_text_vector <= 0.0:
            raise ValueError("channel weights must not all be zero")
        return self

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.w_mcq_graph, self.w_text_graph, self.w_text_vector)

    def normalized(self) -> Tuple[float, float, float]:
        total = sum(self.as_tuple())
        return tuple(w / total for w in self.as_tuple())  # type: ignore[return-value]


def overall_association(
    s_mcq: float,
    s_tgraph: float,
    s_tvec: float,
    weights: Sequence[float] = (1.0, 1.0, 1.0),
) -> float:
    """Weighted arithmetic mean of the channel scores, weights normalised to sum 1."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (3,):
        raise ParameterError(f"expected three channel weights, got {len(w)}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ParameterError(f"channel weights must be finite and >= 0, got {tuple(w)}")
    total = float(w.sum())
    if total <= 0.0:
        raise ParameterError("channel weights are all zero")

    scores = np.array([s_mcq, s_tgraph, s_tvec], dtype=float)
    if np.any(scores < 0.0) or np.any(scores > 1.0):
        raise ParameterError(f"channel scores must lie in [0, 1], got {tuple(scores)}")
    combined = float(np.dot(w / total, scores))
    return min(1.0, max(0.0, combined))


# ---------------------------------------------------------
# Per-candidate profile
# ---------------------------------------------------------

@dataclass(frozen=True)
class CandidateProfile:
    candidate_id: str
    features: Dict[str, float]
    tokens: TokenList
    context: ContextVector
    feature_graph: Optional[CandidateGraph] = None
    text_graph: Optional[CandidateGraph] = None
    profile: str = "unknown"


@dataclass(frozen=True)
class PairScore:
    left: str
    right: str
    mcq_graph: Optional[float]
    text_graph: Optional[float]
    text_vector: Optional[float]
    combined: float


@dataclass(frozen=True)
class AssociationReport:
    candidate_ids: Tuple[str, ...]
    pairs: Tuple[PairScore, ...]
    weights: Tuple[float, float, float]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def score(self, a: str, b: str) -> float:
        i, j = self.candidate_ids.index(a), self.candidate_ids.index(b)
        return float(self.matrix[i, j])

    def pairs_frame(self) -> pd.DataFrame:
        rows = [
            {
                "candidate_a": p.left,
                "candidate_b": p.right,
                "mcq_graph": np.nan if p.mcq_graph is None else p.mcq_graph,
                "text_graph": np.nan if p.text_graph is None else p.text_graph,
                "text_vector": np.nan if p.text_vector is None else p.text_vector,
                "combined": p.combined,
            }
            for p in self.pairs
        ]
        return pd.DataFrame(rows, columns=["candidate_a", "candidate_b", *CHANNELS, "combined"])

    def matrix_frame(self) -> pd.DataFrame:
        ids = list(self.candidate_ids)
        return pd.DataFrame(self.matrix, index=pd.Index(ids, name="candidate_id"), columns=ids)


# ---------------------------------------------------------
# Engine
# ---------------------------------------------------------

class AssociationEngine:
    """
    Builds candidate profiles (features, context vector, graphs) and scores
    every unordered pair of candidates.

    A channel that cannot be computed for a pair (one side has no text, or
    there are no MCQ features) is left out of that pair's weighted mean.
    """

    def __init__(
        self,
        table: EmbeddingTable,
        weights: Optional[ChannelWeights] = None,
        specs: Optional[Sequence[FeatureSpec]] = None,
        stop_words: FrozenSet[str] = ENGLISH_STOP_WORDS,
        top_n: int = 10,
        threshold: float = 0.5,
        mode: SimilarityMode = SimilarityMode.HYBRID,
    ):
        if top_n < 1:
            raise ParameterError(f"top_n must be >= 1, got {top_n}")
        self.weights = weights or ChannelWeights()
        self.specs = list(specs) if specs is not None else None
        self.prep = PreprocessConfig(stop_words=frozenset(stop_words))
        # embedding keys follow the same stemming as the documents
        self.table = table.rekeyed(lambda term: self.prep.stem(term.lower()))
        self.top_n = top_n
        self.threshold = threshold
        self.mode = SimilarityMode(mode)

    # -----------------------------------------------------
    # Profiles
    # -----------------------------------------------------

    def build_profiles(self, ds: SurveyDataset) -> List[CandidateProfile]:
        specs = self.specs if self.specs else default_feature_specs(ds)
        check_specs(specs, ds)
        points = encode_mcq(ds)

        profiles = []
        for i, response in enumerate(ds.responses):
            cid = response.candidate_id
            features = derive_features(points.row_map(i), specs) if specs else {}
            tokens = preprocess(free_text_of(ds, response), self.prep)
            ctx = extract_context_vector(tokens, self.top_n)
            if not len(ctx):
                logger.warning("Candidate %s has no usable free text", cid)

            profiles.append(
                CandidateProfile(
                    candidate_id=cid,
                    features=features,
                    tokens=tokens,
                    context=ctx,
                    feature_graph=_graph_or_none(features, None),
                    text_graph=_graph_or_none({}, ctx),
                    profile=personal_profile(features, specs),
                )
            )
        logger.info("Built %d candidate profiles (%d features each)", len(profiles), len(specs))
        return profiles

    # -----------------------------------------------------
    # Scoring
    # -----------------------------------------------------

    def pair_score(self, p: CandidateProfile, q: CandidateProfile) -> PairScore:
        s_mcq = s_tgraph = s_tvec = None

        if p.feature_graph is not None and q.feature_graph is not None:
            s_mcq = gam_similarity(p.feature_graph, q.feature_graph, None, self.threshold)
        if p.text_graph is not None and q.text_graph is not None:
            s_tgraph = gam_similarity(p.text_graph, q.text_graph, self.table, self.threshold)
        if p.tokens and q.tokens:
            s_tvec = document_similarity(p.tokens, q.tokens, self.table, self.mode)

        scores = (s_mcq, s_tgraph, s_tvec)
        weights = [w if s is not None else 0.0 for w, s in zip(self.weights.as_tuple(), scores)]
        if sum(weights) > 0.0:
            combined = overall_association(*(s or 0.0 for s in scores), weights=weights)
        else:
            logger.warning("No channel available for pair (%s, %s)", p.candidate_id, q.candidate_id)
            combined = 0.0

        logger.debug(
            "pair (%s, %s): mcq=%s text=%s vec=%s -> %.4f",
            p.candidate_id, q.candidate_id, s_mcq, s_tgraph, s_tvec, combined,
        )
        return PairScore(p.candidate_id, q.candidate_id, s_mcq, s_tgraph, s_tvec, combined)

    def associate(self, profiles: Sequence[CandidateProfile]) -> AssociationReport:
        n = len(profiles)
        matrix = np.eye(n)
        pairs = []
        for i, j in combinations(range(n), 2):
            p, q = profiles[i], profiles[j]
            try:
                ps = self.pair_score(p, q)
            except CultureCoreError as exc:
                raise StageError("associate", exc, pair=(p.candidate_id, q.candidate_id)) from exc
            matrix[i, j] = matrix[j, i] = ps.combined
            pairs.append(ps)

        logger.info("Association matrix computed for %d candidates (%d pairs)", n, len(pairs))
        return AssociationReport(
            candidate_ids=tuple(p.candidate_id for p in profiles),
            pairs=tuple(pairs),
            weights=self.weights.normalized(),
            matrix=matrix,
        )


def _graph_or_none(features: Dict[str, float], ctx: Optional[ContextVector]) -> Optional[CandidateGraph]:
    try:
        return build_graph(features, ctx)
    except EmptyGraphError:
        return None


def association_matrix(
    ds: SurveyDataset,
    cfg: "PipelineConfig",
    table: Optional[EmbeddingTable] = None,
    stop_words: Optional[FrozenSet[str]] = None,
) -> np.ndarray:
    """n x n symmetric association matrix with unit diagonal, in dataset order."""
    if table is None:
        table = load_embeddings(cfg.embedding_path)
    if stop_words is None:
        stop_words = load_stopwords(cfg.stopwords_path)

    engine = AssociationEngine(
        table,
        weights=cfg.channel_weights,
        specs=cfg.feature_specs or None,
        stop_words=stop_words,
        top_n=cfg.top_n,
        threshold=cfg.match_threshold,
        mode=cfg.similarity_mode,
    )
    return engine.associate(engine.build_profiles(ds)).matrix
