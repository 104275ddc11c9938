# nexus/association/synthetic.py
#
# Synthetic cohort generator: candidates drawn from a few cultural
# prototypes, each with its own preferred MCQ options and its own pool of
# free-text terms. Ships a matching embedding table and the generator
# labels, so the whole pipeline can be scored end to end.

from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from core.errors import ParameterError
from nexus.intake.survey_ingest import (
    Attribute,
    CandidateResponse,
    Question,
    QuestionKind,
    SurveyDataset,
    save_survey,
)
from nexus.lexicon.embeddings import EmbeddingTable, save_embeddings


logger = logging.getLogger(__name__)

SURVEY_FILE = "survey.json"
EMBEDDING_FILE = "embeddings.txt"
CONFIG_FILE = "config.json"

EMBEDDING_DIM = 24
PROTOTYPE_SCALE = 3.0
EMBEDDING_NOISE = 0.3
TERMS_PER_ANSWER = 5

# one pool per prototype; stems never collide across pools
TERM_POOLS: Tuple[Tuple[str, ...], ...] = (
    ("temple", "prayer", "ritual", "elder", "discipline", "schedule", "heritage", "ceremony"),
    ("beach", "party", "guitar", "dancing", "surfing", "concert", "carnival", "jokes"),
    ("mountain", "hiking", "forest", "camping", "river", "climbing", "garden", "tractor"),
    ("museum", "library", "poetry", "painting", "theatre", "novel", "sculpture", "opera"),
)

MCQ_LAYOUT: Tuple[Attribute, ...] = (
    Attribute.TRADITION, Attribute.TRADITION,
    Attribute.TRAVELING, Attribute.TRAVELING,
    Attribute.HOBBIES, Attribute.HOBBIES,
    Attribute.SOCIAL, Attribute.SOCIAL,
    Attribute.WEEK_ROUTINE, Attribute.WEEK_ROUTINE,
    Attribute.WORK, Attribute.WORK,
)
TEXT_LAYOUT: Tuple[Attribute, ...] = (
    Attribute.TRADITION, Attribute.HOBBIES, Attribute.EVENTS, Attribute.LOCATION,
)
OPTION_TEXT = ("never", "rarely", "sometimes", "often", "always")


@dataclass(frozen=True)
class SyntheticCohort:
    dataset: SurveyDataset
    embeddings: EmbeddingTable
    labels: Dict[str, str]
    prototypes: int
    seed: int


def prototype_label(p: int) -> str:
    return f"prototype_{string.ascii_lowercase[p]}"


def synthetic_cohort(
    n: int = 100,
    prototypes: int = 3,
    noise: float = 0.10,
    seed: int = 0,
) -> SyntheticCohort:
    """
    n candidates, prototype i % prototypes for candidate i. Each MCQ answer
    is the prototype's preferred option with probability 1 - noise, else a
    uniform random option; each free-text term is swapped for another
    prototype's term with probability noise.
    """
    if not 1 <= prototypes <= len(TERM_POOLS):
        raise ParameterError(f"prototypes must be in [1, {len(TERM_POOLS)}], got {prototypes}")
    if n < prototypes:
        raise ParameterError(f"need at least one candidate per prototype, got n={n}")
    if not 0.0 <= noise <= 1.0:
        raise ParameterError(f"noise must be in [0, 1], got {noise}")

    rng = np.random.default_rng(seed)
    n_options = max(4, prototypes)
    options = OPTION_TEXT[:n_options] if n_options <= len(OPTION_TEXT) else tuple(
        f"option {i + 1}" for i in range(n_options)
    )

    mcq = [
        Question(
            id=f"q{j + 1:02d}",
            prompt=f"How strongly does {attr.value} shape your choices ({j + 1})?",
            kind=QuestionKind.MCQ,
            attribute=attr,
            options=tuple(options),
        )
        for j, attr in enumerate(MCQ_LAYOUT)
    ]
    text = [
        Question(
            id=f"t{j + 1:02d}",
            prompt=f"Describe your {attr.value} in a few words.",
            kind=QuestionKind.FREE_TEXT,
            attribute=attr,
        )
        for j, attr in enumerate(TEXT_LAYOUT)
    ]

    # preferred option of each prototype, distinct across prototypes per question
    preferred = np.stack([rng.permutation(n_options)[:prototypes] for _ in mcq], axis=1)
    pools = TERM_POOLS[:prototypes]

    responses: List[CandidateResponse] = []
    labels: Dict[str, str] = {}
    width = len(str(n))
    for i in range(n):
        p = i % prototypes
        cid = f"c{i + 1:0{width}d}"
        answers: Dict[str, Union[int, str]] = {}

        for j, q in enumerate(mcq):
            if rng.random() < noise:
                answers[q.id] = int(rng.integers(n_options))
            else:
                answers[q.id] = int(preferred[p, j])

        for q in text:
            terms = []
            for _ in range(TERMS_PER_ANSWER):
                source = p
                if prototypes > 1 and rng.random() < noise:
                    source = int(rng.choice([o for o in range(prototypes) if o != p]))
                terms.append(pools[source][int(rng.integers(len(pools[source])))])
            answers[q.id] = "we " + " and the ".join(terms)

        responses.append(CandidateResponse(candidate_id=cid, answers=answers))
        labels[cid] = prototype_label(p)

    vectors: Dict[str, np.ndarray] = {}
    for p, pool in enumerate(pools):
        for term in pool:
            v = rng.normal(0.0, EMBEDDING_NOISE, EMBEDDING_DIM)
            v[p] += PROTOTYPE_SCALE
            vectors[term] = v

    dataset = SurveyDataset(questions=tuple(mcq + text), responses=tuple(responses), labels=labels)
    logger.info("Synthetic cohort: %d candidates, %d prototypes, noise %.2f, seed %d", n, prototypes, noise, seed)
    return SyntheticCohort(
        dataset=dataset,
        embeddings=EmbeddingTable.from_mapping(vectors),
        labels=dict(labels),
        prototypes=prototypes,
        seed=seed,
    )


def write_cohort(cohort: SyntheticCohort, directory: Union[str, Path]) -> Path:
    """Survey, embedding file and a ready-to-run config (fixed k) in one directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_survey(cohort.dataset, directory / SURVEY_FILE)
    save_embeddings(cohort.embeddings, directory / EMBEDDING_FILE)

    config = {
        "survey_path": SURVEY_FILE,
        "embedding_path": EMBEDDING_FILE,
        "k_mode": "fixed",
        "k": cohort.prototypes,
        "seed": cohort.seed,
        "output_dir": "out",
    }
    path = directory / CONFIG_FILE
    path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote synthetic cohort to %s", directory)
    return path
