# nexus/lexicon/embeddings.py
#
# Pretrained word vectors in the plain word2vec text format:
#
#   <vocab_size> <dimension>
#   term v1 v2 ... v_dimension
#
# Any file in that format plugs in (GoogleNews vectors converted to text,
# GloVe with a header line, or the small tables the synthetic cohort writes).

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from core.errors import EmbeddingFormatError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable term -> dense vector lookup. All vectors share one dimension."""

    index: Dict[str, int]
    vectors: np.ndarray
    dimension: int

    def __post_init__(self) -> None:
        vectors = np.array(self.vectors, dtype=float).reshape(len(self.index), self.dimension)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    # -----------------------------------------------------
    # Construction helpers
    # -----------------------------------------------------

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Sequence[float]]) -> "EmbeddingTable":
        terms = list(mapping)
        if not terms:
            raise EmbeddingFormatError("cannot build an embedding table without terms")
        dim = len(mapping[terms[0]])
        rows = []
        for term in terms:
            vec = list(mapping[term])
            if len(vec) != dim:
                raise EmbeddingFormatError(f"term '{term}' has {len(vec)} components, expected {dim}")
            rows.append(vec)
        return cls(index={t: i for i, t in enumerate(terms)}, vectors=np.asarray(rows, dtype=float), dimension=dim)

    def rekeyed(self, key: Callable[[str], str]) -> "EmbeddingTable":
        """
        New table keyed by key(term). Terms that collapse onto the same key
        are averaged; terms mapped to an empty key are dropped. Used to look
        vectors up by stemmed tokens.
        """
        groups: Dict[str, List[int]] = {}
        for term, row in self.index.items():
            new_key = key(term)
            if new_key:
                groups.setdefault(new_key, []).append(row)

        if not groups:
            return EmbeddingTable(index={}, vectors=np.zeros((0, self.dimension)), dimension=self.dimension)

        keys = list(groups)
        rows = np.stack([self.vectors[groups[k]].mean(axis=0) for k in keys])
        return EmbeddingTable(index={k: i for i, k in enumerate(keys)}, vectors=rows, dimension=self.dimension)

    # -----------------------------------------------------
    # Lookup
    # -----------------------------------------------------

    def __contains__(self, term: object) -> bool:
        return term in self.index

    def __len__(self) -> int:
        return len(self.index)

    @property
    def terms(self) -> Tuple[str, ...]:
        return tuple(self.index)

    def vector(self, term: str) -> np.ndarray:
        return self.vectors[self.index[term]]

    def unit_matrix(self, terms: Sequence[str]) -> np.ndarray:
        """Row-normalised vectors for terms; OOV or zero vectors give zero rows."""
        out = np.zeros((len(terms), self.dimension), dtype=float)
        for i, term in enumerate(terms):
            row = self.index.get(term)
            if row is None:
                continue
            vec = self.vectors[row]
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                out[i] = vec / norm
        return out


# ---------------------------------------------------------
# File I/O
# ---------------------------------------------------------

def load_embeddings(path: Union[str, Path]) -> EmbeddingTable:
    """
    Load a word2vec text-format file.

    The table holds exactly the declared vocabulary; a count mismatch,
    a row of the wrong width, a non-numeric component or a repeated
    term is an EmbeddingFormatError naming the line.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmbeddingFormatError(f"embedding file {path} is empty", line=1)

    header = lines[0].split()
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise EmbeddingFormatError("header must be '<vocab_size> <dimension>'", line=1)
    vocab_size, dim = int(header[0]), int(header[1])
    if dim <= 0:
        raise EmbeddingFormatError("dimension must be positive", line=1)

    body = lines[1:]
    if len(body) != vocab_size:
        raise EmbeddingFormatError(
            f"header declares {vocab_size} terms but file has {len(body)} rows"
        )

    index: Dict[str, int] = {}
    vectors = np.zeros((vocab_size, dim), dtype=float)

    for offset, line in enumerate(body):
        lineno = offset + 2
        parts = line.rstrip().split(" ")
        term, comps = parts[0], parts[1:]
        if not term:
            raise EmbeddingFormatError("row starts with an empty term", line=lineno)
        if len(comps) != dim:
            raise EmbeddingFormatError(
                f"term '{term}' has {len(comps)} components, expected {dim}", line=lineno
            )
        if term in index:
            raise EmbeddingFormatError(f"duplicate term '{term}'", line=lineno)
        try:
            values = [float(c) for c in comps]
        except ValueError:
            raise EmbeddingFormatError(f"non-numeric component for term '{term}'", line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise EmbeddingFormatError(f"non-finite component for term '{term}'", line=lineno)

        index[term] = offset
        vectors[offset] = values

    logger.info("Loaded %d embeddings of dimension %d from %s", vocab_size, dim, path.name)
    return EmbeddingTable(index=index, vectors=vectors, dimension=dim)


def save_embeddings(table: EmbeddingTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines: List[str] = [f"{len(table)} {table.dimension}"]
    for term, row in table.index.items():
        comps = " ".join(f"{v:.6f}" for v in table.vectors[row])
        lines.append(f"{term} {comps}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def iter_vectors(table: EmbeddingTable, terms: Iterable[str]) -> Iterable[np.ndarray]:
    for term in terms:
        row = table.index.get(term)
        if row is not None:
            yield table.vectors[row]
