# nexus/intake/survey_ingest.py
#
# Survey intake: load, validate and numerically encode questionnaires made
# of multiple-choice (MCQ) and free-text questions.
#
# Loading is strict (a bad file never becomes a dataset). Validation is
# lenient: it inspects an in-memory dataset and reports, it never raises.

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
from jsonschema import Draft7Validator

from core.errors import (
    InputError,
    SurveyParseError,
    SurveySchemaError,
    UnsupportedResponseKindError,
)
from nexus.intake.survey_schema import SURVEY_SCHEMA


logger = logging.getLogger(__name__)

Answer = Union[int, str]


# ---------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------

class QuestionKind(str, Enum):
    MCQ = "mcq"
    FREE_TEXT = "text"


class Attribute(str, Enum):
    """Context categories a question can probe."""

    LOCATION = "Location"
    TRADITION = "Tradition"
    RELIGION = "Religion"
    TRAVELING = "TravelingAttributes"
    BEHAVIOR = "BehaviorAttributes"
    WORK = "WorkInformation"
    SOCIAL = "SocialAttributes"
    WEEK_ROUTINE = "WeekRoutine"
    HOBBIES = "Hobbies"
    EVENTS = "Events"

    @classmethod
    def parse(cls, raw: str) -> "Attribute":
        key = "".join(ch for ch in raw.lower() if ch.isalnum())
        for attr in cls:
            if attr.value.lower() == key or attr.name.replace("_", "").lower() == key:
                return attr
        raise SurveySchemaError(f"unknown attribute category '{raw}'")


# Kinds that show up in real questionnaires but that we refuse to ingest.
_UNSUPPORTED_KINDS = {"image", "picture", "photo"}


# ---------------------------------------------------------
# Domain types
# ---------------------------------------------------------

@dataclass(frozen=True)
class Question:
    id: str
    prompt: str
    kind: QuestionKind
    attribute: Attribute
    options: Tuple[str, ...] = ()

    @property
    def is_mcq(self) -> bool:
        return self.kind is QuestionKind.MCQ


@dataclass(frozen=True)
class CandidateResponse:
    candidate_id: str
    # question id -> option index (MCQ) or raw text (free text); read-only by convention
    answers: Dict[str, Answer] = field(default_factory=dict)


@dataclass(frozen=True)
class SurveyDataset:
    questions: Tuple[Question, ...]
    responses: Tuple[CandidateResponse, ...]
    labels: Optional[Dict[str, str]] = None

    @property
    def candidate_ids(self) -> Tuple[str, ...]:
        return tuple(r.candidate_id for r in self.responses)

    @property
    def mcq_questions(self) -> Tuple[Question, ...]:
        return tuple(q for q in self.questions if q.is_mcq)

    @property
    def text_questions(self) -> Tuple[Question, ...]:
        return tuple(q for q in self.questions if not q.is_mcq)

    def question(self, question_id: str) -> Question:
        for q in self.questions:
            if q.id == question_id:
                return q
        raise KeyError(question_id)

    def response(self, candidate_id: str) -> CandidateResponse:
        for r in self.responses:
            if r.candidate_id == candidate_id:
                return r
        raise KeyError(candidate_id)


class IssueKind(str, Enum):
    MISSING_ANSWER = "missing_answer"
    OUT_OF_RANGE = "out_of_range"
    EMPTY_TEXT = "empty_text"
    WRONG_TYPE = "wrong_type"
    UNKNOWN_QUESTION = "unknown_question"
    DUPLICATE_CANDIDATE = "duplicate_candidate"
    UNKNOWN_LABELED_CANDIDATE = "unknown_labeled_candidate"


@dataclass(frozen=True)
class ValidationIssue:
    candidate_id: str
    question_id: Optional[str]
    kind: IssueKind
    detail: str
    # free-text gaps are reported but do not stop the pipeline
    blocking: bool = True


@dataclass(frozen=True)
class ValidationReport:
    issues: Tuple[ValidationIssue, ...]
    passing: Tuple[str, ...]
    failing: Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.issues

    @property
    def blocking_issues(self) -> Tuple[ValidationIssue, ...]:
        return tuple(i for i in self.issues if i.blocking)

    @property
    def n_passing(self) -> int:
        return len(self.passing)

    @property
    def n_failing(self) -> int:
        return len(self.failing)

    def issues_for(self, candidate_id: str) -> List[ValidationIssue]:
        return [i for i in self.issues if i.candidate_id == candidate_id]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "candidate_id": i.candidate_id,
                    "question_id": i.question_id or "",
                    "issue": i.kind.value,
                    "blocking": i.blocking,
                    "detail": i.detail,
                }
                for i in self.issues
            ],
            columns=["candidate_id", "question_id", "issue", "blocking", "detail"],
        )


@dataclass(frozen=True)
class PointMatrix:
    """One numeric row per candidate, one column per MCQ question."""

    rows: np.ndarray
    columns: Tuple[str, ...]
    candidate_ids: Tuple[str, ...]

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            rows = rows.reshape(len(self.candidate_ids), len(self.columns))
        if rows.shape != (len(self.candidate_ids), len(self.columns)):
            raise InputError(
                f"point matrix shape {rows.shape} does not match "
                f"{len(self.candidate_ids)} candidates x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(rows)):
            raise InputError("point matrix contains non-finite entries")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows.shape

    def row_map(self, index: int) -> Dict[str, float]:
        return {qid: float(v) for qid, v in zip(self.columns, self.rows[index])}

    def to_frame(self) -> pd.DataFrame:
        """Question ids as columns; candidate ids kept as the (unwritten) index."""
        return pd.DataFrame(
            self.rows,
            columns=list(self.columns),
            index=pd.Index(list(self.candidate_ids), name="candidate_id"),
        )


# ---------------------------------------------------------
# Loading
# ---------------------------------------------------------

def load_survey(path: Union[str, Path]) -> SurveyDataset:
    """
    Parse a survey JSON file into a SurveyDataset.

    Shape problems raise SurveyParseError (with line or field context),
    domain problems raise SurveySchemaError. Question order is preserved.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise SurveyParseError(f"survey file {path} is empty", line=1)

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SurveyParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc

    errors = sorted(Draft7Validator(SURVEY_SCHEMA).iter_errors(raw), key=lambda e: [str(p) for p in e.path])
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.path) or "<root>"
        raise SurveyParseError(first.message, field=where)

    dataset = _build_dataset(raw)
    logger.info(
        "Loaded survey %s: %d questions, %d candidates",
        path.name, len(dataset.questions), len(dataset.responses),
    )
    return dataset


def _build_dataset(raw: Mapping) -> SurveyDataset:
    questions: List[Question] = []
    seen_q: set = set()

    for obj in raw["questions"]:
        qid = obj["id"]
        if qid in seen_q:
            raise SurveySchemaError(f"duplicate question id '{qid}'")
        seen_q.add(qid)
        questions.append(_build_question(obj))

    by_id = {q.id: q for q in questions}
    responses: List[CandidateResponse] = []
    seen_c: set = set()

    for obj in raw["responses"]:
        cid = obj["candidate_id"]
        if cid in seen_c:
            raise SurveySchemaError(f"duplicate candidate id '{cid}'")
        seen_c.add(cid)

        answers: Dict[str, Answer] = {}
        for qid, value in obj["answers"].items():
            q = by_id.get(qid)
            if q is None:
                raise SurveySchemaError(f"candidate '{cid}' answers unknown question '{qid}'")
            answers[qid] = _check_answer(cid, q, value)
        responses.append(CandidateResponse(candidate_id=cid, answers=answers))

    labels = raw.get("labels")
    if labels is not None:
        unknown = sorted(set(labels) - seen_c)
        if unknown:
            raise SurveySchemaError(f"labels reference unknown candidates: {', '.join(unknown)}")
        labels = dict(labels)

    return SurveyDataset(questions=tuple(questions), responses=tuple(responses), labels=labels)


def _build_question(obj: Mapping) -> Question:
    qid = obj["id"]
    kind_raw = obj["kind"].strip().lower()

    if kind_raw in _UNSUPPORTED_KINDS:
        raise UnsupportedResponseKindError(
            f"question '{qid}': unsupported response kind '{obj['kind']}'"
        )
    try:
        kind = QuestionKind(kind_raw)
    except ValueError:
        raise SurveySchemaError(f"question '{qid}': unknown kind '{obj['kind']}'") from None

    options = tuple(obj.get("options") or ())
    if kind is QuestionKind.MCQ and len(options) < 2:
        raise SurveySchemaError(f"MCQ question '{qid}' needs at least 2 options")
    if kind is QuestionKind.FREE_TEXT and options:
        raise SurveySchemaError(f"free-text question '{qid}' must not list options")

    return Question(
        id=qid,
        prompt=obj["prompt"],
        kind=kind,
        attribute=Attribute.parse(obj["attribute"]),
        options=options,
    )


def _check_answer(cid: str, q: Question, value) -> Answer:
    if q.is_mcq:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SurveySchemaError(
                f"candidate '{cid}', question '{q.id}': MCQ answer must be an option index"
            )
        if not 0 <= value < len(q.options):
            raise SurveySchemaError(
                f"candidate '{cid}', question '{q.id}': option index {value} "
                f"out of range 0..{len(q.options) - 1}"
            )
        return value

    if not isinstance(value, str):
        raise SurveySchemaError(
            f"candidate '{cid}', question '{q.id}': free-text answer must be a string"
        )
    return value


def save_survey(ds: SurveyDataset, path: Union[str, Path]) -> Path:
    """Write a dataset back to the survey JSON format (load_survey round-trips it)."""
    path = Path(path)
    doc: Dict = {
        "questions": [
            {
                "id": q.id,
                "prompt": q.prompt,
                "kind": q.kind.value,
                "attribute": q.attribute.value,
                "options": list(q.options),
            }
            for q in ds.questions
        ],
        "responses": [
            {"candidate_id": r.candidate_id, "answers": dict(r.answers)}
            for r in ds.responses
        ],
    }
    if ds.labels is not None:
        doc["labels"] = dict(ds.labels)

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8")
    return path


# ---------------------------------------------------------
# Validation
# ---------------------------------------------------------

def validate_dataset(ds: SurveyDataset) -> ValidationReport:
    """
    Structural check of an in-memory dataset. Never raises.

    Missing or empty free-text answers are reported as non-blocking:
    they only lead to an empty context vector later on.
    """
    issues: List[ValidationIssue] = []
    by_id = {q.id: q for q in ds.questions}
    seen: set = set()

    for r in ds.responses:
        cid = r.candidate_id
        if cid in seen:
            issues.append(ValidationIssue(cid, None, IssueKind.DUPLICATE_CANDIDATE, "candidate id repeated"))
        seen.add(cid)

        for qid in r.answers:
            if qid not in by_id:
                issues.append(ValidationIssue(cid, qid, IssueKind.UNKNOWN_QUESTION, "answer to unknown question"))

        for q in ds.questions:
            if q.id not in r.answers:
                issues.append(ValidationIssue(
                    cid, q.id, IssueKind.MISSING_ANSWER, "no answer", blocking=q.is_mcq,
                ))
                continue

            value = r.answers[q.id]
            if q.is_mcq:
                if isinstance(value, bool) or not isinstance(value, int):
                    issues.append(ValidationIssue(cid, q.id, IssueKind.WRONG_TYPE, f"expected option index, got {value!r}"))
                elif not 0 <= value < len(q.options):
                    issues.append(ValidationIssue(
                        cid, q.id, IssueKind.OUT_OF_RANGE,
                        f"index {value} not in 0..{len(q.options) - 1}",
                    ))
            elif not isinstance(value, str):
                issues.append(ValidationIssue(cid, q.id, IssueKind.WRONG_TYPE, f"expected text, got {value!r}"))
            elif not value.strip():
                issues.append(ValidationIssue(cid, q.id, IssueKind.EMPTY_TEXT, "blank answer", blocking=False))

    if ds.labels is not None:
        for cid in sorted(set(ds.labels) - seen):
            issues.append(ValidationIssue(cid, None, IssueKind.UNKNOWN_LABELED_CANDIDATE, "label for unknown candidate"))

    flagged = {i.candidate_id for i in issues}
    ordered = list(dict.fromkeys(ds.candidate_ids))
    passing = tuple(c for c in ordered if c not in flagged)
    failing = tuple(c for c in ordered if c in flagged)

    if issues:
        logger.warning(
            "Validation found %d issue(s) across %d candidate(s)", len(issues), len(failing)
        )
    return ValidationReport(issues=tuple(issues), passing=passing, failing=failing)


# ---------------------------------------------------------
# Encoding
# ---------------------------------------------------------

def encode_mcq(ds: SurveyDataset, standardize: bool = False) -> PointMatrix:
    """
    Ordinal encoding of MCQ answers: cell (i, j) is the 0-based option
    index candidate i picked for MCQ question j. With standardize, every
    column is z-scored (population variance); constant columns become 0.
    """
    mcq = ds.mcq_questions
    rows = np.zeros((len(ds.responses), len(mcq)), dtype=float)

    for i, r in enumerate(ds.responses):
        for j, q in enumerate(mcq):
            if q.id not in r.answers:
                raise InputError(
                    f"candidate '{r.candidate_id}' has no answer for MCQ question '{q.id}'"
                )
            rows[i, j] = float(r.answers[q.id])

    if standardize and rows.size:
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        constant = std == 0.0
        safe = np.where(constant, 1.0, std)
        rows = (rows - mean) / safe
        rows[:, constant] = 0.0

    return PointMatrix(rows=rows, columns=tuple(q.id for q in mcq), candidate_ids=ds.candidate_ids)


def free_text_of(ds: SurveyDataset, response: CandidateResponse) -> str:
    """All free-text answers of one candidate, in questionnaire order."""
    parts = [
        response.answers[q.id]
        for q in ds.text_questions
        if isinstance(response.answers.get(q.id), str)
    ]
    return " ".join(p for p in parts if p.strip())


def export_point_matrix_csv(pm: PointMatrix, path: Union[str, Path]) -> Path:
    """Header = question ids, one row per candidate in matrix order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pm.to_frame().to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return path

