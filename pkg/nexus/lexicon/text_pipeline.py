# nexus/lexicon/text_pipeline.py
#
# Free-text answers -> tokens -> term vectors / context vectors, plus the
# cosine-based similarity measures built on top of them.
#
# Lexical statistics come from the answers themselves; semantic closeness
# comes from a pretrained EmbeddingTable (see embeddings.py).

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from nltk.stem import PorterStemmer

from core.errors import ParameterError
from nexus.lexicon.embeddings import EmbeddingTable, iter_vectors
from nexus.lexicon.stopwords import ENGLISH_STOP_WORDS


logger = logging.getLogger(__name__)

TokenList = Tuple[str, ...]
TermVector = Dict[str, float]

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_PORTER = PorterStemmer()


# ---------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------

@dataclass(frozen=True)
class PreprocessConfig:
    stop_words: FrozenSet[str] = ENGLISH_STOP_WORDS
    stemmer: str = "porter"  # "porter" | "none"

    def stem(self, token: str) -> str:
        if self.stemmer == "porter":
            return _PORTER.stem(token)
        if self.stemmer == "none":
            return token
        raise ParameterError(f"unknown stemmer '{self.stemmer}'")


def preprocess(text: str, config: Optional[PreprocessConfig] = None) -> TokenList:
    """
    Lowercase, split on non-alphanumeric boundaries, drop stop words,
    stem the survivors. Order is preserved; empty input gives ().
    """
    config = config or PreprocessConfig()
    out = []
    for raw in _WORD_RE.findall(text.lower()):
        if raw in config.stop_words:
            continue
        token = config.stem(raw)
        # a stem can land on a stop word ("ours" style collisions)
        if token and token not in config.stop_words:
            out.append(token)
    return tuple(out)


# ---------------------------------------------------------
# Term and context vectors
# ---------------------------------------------------------

def term_vector(tokens: Sequence[str]) -> TermVector:
    """Normalised frequency: weight(t) = count(t) / len(tokens)."""
    if not tokens:
        return {}
    counts = Counter(tokens)
    total = float(len(tokens))
    return {term: counts[term] / total for term in sorted(counts)}


@dataclass(frozen=True)
class ContextVector:
    """Ranked (term, score) pairs, highest score first, ties by term."""

    entries: Tuple[Tuple[str, float], ...] = ()

    def __iter__(self) -> Iterator[Tuple[str, float]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def terms(self) -> Tuple[str, ...]:
        return tuple(t for t, _ in self.entries)

    @property
    def scores(self) -> Tuple[float, ...]:
        return tuple(s for _, s in self.entries)

    def as_dict(self) -> Dict[str, float]:
        return dict(self.entries)


def extract_context_vector(tokens: Sequence[str], top_n: int = 10) -> ContextVector:
    if top_n < 1:
        raise ParameterError(f"top_n must be >= 1, got {top_n}")
    ranked = sorted(term_vector(tokens).items(), key=lambda kv: (-kv[1], kv[0]))
    return ContextVector(entries=tuple(ranked[:top_n]))


def export_context_vectors_csv(
    rows: Iterable[Tuple[str, ContextVector]],
    path: Union[str, Path],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [
        {"candidate_id": cid, "rank": rank, "term": term, "score": score}
        for cid, ctx in rows
        for rank, (term, score) in enumerate(ctx)
    ]
    frame = pd.DataFrame(records, columns=["candidate_id", "rank", "term", "score"])
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    return path


# ---------------------------------------------------------
# Similarity
# ---------------------------------------------------------

def cosine_similarity(a, b) -> float:
    """
    a.b / (|a| |b|) for dense vectors or sparse term vectors (mappings).
    A zero vector on either side scores 0.
    """
    sparse_a, sparse_b = isinstance(a, Mapping), isinstance(b, Mapping)
    if sparse_a != sparse_b:
        raise ParameterError("cannot compare a term mapping with a dense vector")
    if sparse_a:
        return _sparse_cosine(a, b)

    va = np.asarray(a, dtype=float).ravel()
    vb = np.asarray(b, dtype=float).ravel()
    if va.shape != vb.shape:
        raise ParameterError(f"vector lengths differ: {va.shape[0]} vs {vb.shape[0]}")
    denom = float(np.linalg.norm(va)) * float(np.linalg.norm(vb))
    if denom == 0.0:
        return 0.0
    return float(np.clip(float(np.dot(va, vb)) / denom, -1.0, 1.0))


def _sparse_cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    shared = sorted(set(a) & set(b))
    dot = sum(a[t] * b[t] for t in shared)
    na = float(np.sqrt(sum(v * v for v in a.values())))
    nb = float(np.sqrt(sum(v * v for v in b.values())))
    denom = na * nb
    if denom == 0.0:
        return 0.0
    return float(np.clip(dot / denom, -1.0, 1.0))


def term_similarity(t1: str, t2: str, table: EmbeddingTable) -> float:
    """Embedding cosine of two terms; 0 when either is out of vocabulary."""
    if t1 not in table or t2 not in table:
        return 0.0
    if t1 == t2:
        return 1.0
    return cosine_similarity(table.vector(t1), table.vector(t2))


class SimilarityMode(str, Enum):
    LEXICAL = "lexical"
    SEMANTIC = "semantic"
    HYBRID = "hybrid"


def _mean_embedding(tokens: Sequence[str], table: EmbeddingTable) -> Optional[np.ndarray]:
    vecs = list(iter_vectors(table, tokens))
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def document_similarity(
    d1: Sequence[str],
    d2: Sequence[str],
    table: EmbeddingTable,
    mode: Union[SimilarityMode, str] = SimilarityMode.HYBRID,
) -> float:
    """
    lexical  - cosine of term vectors
    semantic - cosine of mean embeddings over in-vocabulary tokens
    hybrid   - mean of the two
    Result is clipped to [0, 1]. Equal token multisets score 1 in every mode.
    """
    mode = SimilarityMode(mode)
    if not d1 and not d2:
        return 0.0
    if d1 and Counter(d1) == Counter(d2):
        return 1.0

    lexical = semantic = 0.0
    if mode in (SimilarityMode.LEXICAL, SimilarityMode.HYBRID):
        lexical = cosine_similarity(term_vector(d1), term_vector(d2))
    if mode in (SimilarityMode.SEMANTIC, SimilarityMode.HYBRID):
        m1, m2 = _mean_embedding(d1, table), _mean_embedding(d2, table)
        if m1 is not None and m2 is not None:
            semantic = cosine_similarity(m1, m2)

    if mode is SimilarityMode.LEXICAL:
        score = lexical
    elif mode is SimilarityMode.SEMANTIC:
        score = semantic
    else:
        score = 0.5 * (lexical + semantic)
    return float(min(1.0, max(0.0, score)))
