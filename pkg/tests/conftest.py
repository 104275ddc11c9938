# tests/conftest.py

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Tuple

import numpy as np
import pytest


GROUP_A_TEXT = "We visit the temple for every festival with our elders"
GROUP_B_TEXT = "Weekends mean the beach, a guitar and dancing at a party"

TINY_EMBEDDINGS = {
    "temple": (1.0, 0.1, 0.0),
    "festival": (0.9, 0.2, 0.0),
    "elders": (0.8, 0.0, 0.1),
    "visit": (0.5, 0.5, 0.0),
    "beach": (0.0, 1.0, 0.1),
    "guitar": (0.1, 0.9, 0.0),
    "dancing": (0.0, 0.8, 0.2),
    "party": (0.1, 1.0, 0.0),
    "weekends": (0.0, 0.3, 0.9),
}


def tiny_survey_doc() -> dict:
    """Eight candidates in two clear groups, four MCQ and two free-text questions."""
    questions = [
        {"id": "q1", "prompt": "Festival attendance", "kind": "mcq", "attribute": "Tradition",
         "options": ["never", "sometimes", "often", "always"]},
        {"id": "q2", "prompt": "Family rituals", "kind": "mcq", "attribute": "Tradition",
         "options": ["never", "sometimes", "often", "always"]},
        {"id": "q3", "prompt": "Nights out", "kind": "mcq", "attribute": "Hobbies",
         "options": ["never", "sometimes", "often", "always"]},
        {"id": "q4", "prompt": "Live music", "kind": "mcq", "attribute": "Hobbies",
         "options": ["never", "sometimes", "often", "always"]},
        {"id": "t1", "prompt": "Describe your weekends", "kind": "text", "attribute": "WeekRoutine"},
        {"id": "t2", "prompt": "Describe your traditions", "kind": "text", "attribute": "Tradition"},
    ]
    responses, labels = [], {}
    for i in range(8):
        cid = f"c{i + 1}"
        if i < 4:
            answers = {"q1": 3, "q2": 3 - (i % 2), "q3": 0, "q4": 1, "t1": GROUP_A_TEXT, "t2": "temple festival"}
            labels[cid] = "rooted"
        else:
            answers = {"q1": 0, "q2": 1, "q3": 3, "q4": 3 - (i % 2), "t1": GROUP_B_TEXT, "t2": "party beach"}
            labels[cid] = "fun"
        responses.append({"candidate_id": cid, "answers": answers})
    return {"questions": questions, "responses": responses, "labels": labels}


def write_embeddings(path: Path, vectors: dict) -> Path:
    dim = len(next(iter(vectors.values())))
    lines = [f"{len(vectors)} {dim}"]
    lines += [f"{term} " + " ".join(str(v) for v in vec) for term, vec in vectors.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def tiny_survey_file(tmp_path: Path) -> Path:
    path = tmp_path / "survey.json"
    path.write_text(json.dumps(tiny_survey_doc(), indent=2), encoding="utf-8")
    return path


@pytest.fixture
def tiny_embeddings(tmp_path: Path) -> Path:
    return write_embeddings(tmp_path / "vectors.txt", TINY_EMBEDDINGS)


@pytest.fixture
def tiny_config(tmp_path: Path, tiny_survey_file: Path, tiny_embeddings: Path) -> Path:
    path = tmp_path / "config.json"
    cfg = {
        "survey_path": tiny_survey_file.name,
        "embedding_path": tiny_embeddings.name,
        "k_mode": "fixed",
        "k": 2,
        "seed": 7,
        "output_dir": "out",
    }
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def make_blobs(seed: int, n_per: int = 30, sigma: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    points = np.vstack([c + rng.normal(0.0, sigma, (n_per, 2)) for c in centers])
    labels = np.repeat(np.arange(3), n_per)
    return points, labels


@pytest.fixture
def three_blobs() -> Callable[[int], Tuple[np.ndarray, np.ndarray]]:
    return make_blobs
