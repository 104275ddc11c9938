# nexus/graph/features.py
#
# MCQ feature creation: combine answers to related questions into one
# weighted feature, e.g. "lives near the coast" vs "wants to travel to the
# coast" -> (Q1 - Q2) / group_ratio.

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Dict, List, Literal, Mapping, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import ConfigError, InputError, ParameterError
from nexus.intake.survey_ingest import SurveyDataset


logger = logging.getLogger(__name__)

FormulaKind = Literal["difference_over_ratio", "predicate"]
PredicateKind = Literal["any_equals", "all_equals", "any_at_least"]


class FeatureSpec(BaseModel):
    """
    One MCQ-derived feature.

    difference_over_ratio: (answer[operands[0]] - answer[operands[1]]) / group_ratio
    predicate:             1.0 when the predicate holds over the operand answers, else 0.0
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    operands: List[str] = Field(min_length=1)
    formula: FormulaKind = "difference_over_ratio"
    group_ratio: float = 1.0
    predicate: Optional[PredicateKind] = None
    value: Optional[int] = None

    @model_validator(mode="after")
    def _check_shape(self) -> "FeatureSpec":
        if self.formula == "difference_over_ratio" and len(self.operands) != 2:
            raise ValueError(f"feature '{self.name}': difference_over_ratio takes exactly 2 operands")
        if self.formula == "predicate" and (self.predicate is None or self.value is None):
            raise ValueError(f"feature '{self.name}': predicate features need 'predicate' and 'value'")
        return self


# ---------------------------------------------------------
# Evaluation
# ---------------------------------------------------------

def derive_features(row: Mapping[str, float], specs: Sequence[FeatureSpec]) -> Dict[str, float]:
    """
    Evaluate specs against one candidate's encoded MCQ answers
    (question id -> option index). Output keeps spec order.
    """
    out: Dict[str, float] = {}
    for spec in specs:
        for qid in spec.operands:
            if qid not in row:
                raise InputError(f"feature '{spec.name}' needs an answer to question '{qid}'")

        if spec.formula == "difference_over_ratio":
            if spec.group_ratio == 0:
                raise ParameterError(f"feature '{spec.name}': group_ratio must be non-zero")
            q1, q2 = spec.operands
            out[spec.name] = (float(row[q1]) - float(row[q2])) / spec.group_ratio
        else:
            out[spec.name] = 1.0 if _predicate_holds(spec, [row[q] for q in spec.operands]) else 0.0
    return out


def _predicate_holds(spec: FeatureSpec, answers: Sequence[float]) -> bool:
    target = spec.value
    if spec.predicate == "any_equals":
        return any(int(a) == target for a in answers)
    if spec.predicate == "all_equals":
        return all(int(a) == target for a in answers)
    return any(int(a) >= target for a in answers)


def check_specs(specs: Sequence[FeatureSpec], ds: SurveyDataset) -> None:
    """Operands must be MCQ questions of the questionnaire; names unique."""
    mcq_ids = {q.id for q in ds.mcq_questions}
    names = set()
    for spec in specs:
        if spec.name in names:
            raise ConfigError(f"duplicate feature name '{spec.name}'")
        names.add(spec.name)
        if spec.formula == "difference_over_ratio" and spec.group_ratio <= 0:
            raise ConfigError(f"feature '{spec.name}': group_ratio must be > 0")
        for qid in spec.operands:
            if qid not in mcq_ids:
                raise ConfigError(f"feature '{spec.name}' references '{qid}', which is not an MCQ question")


def default_feature_specs(ds: SurveyDataset) -> List[FeatureSpec]:
    """
    Pair up consecutive MCQ questions that probe the same attribute
    category. Falls back to consecutive MCQ pairs across categories when no
    category has two MCQ questions.
    """
    groups: Dict[str, List[str]] = defaultdict(list)
    for q in ds.mcq_questions:
        groups[q.attribute.value].append(q.id)

    specs: List[FeatureSpec] = []
    for attribute, qids in groups.items():
        for n, (q1, q2) in enumerate(zip(qids, qids[1:]), start=1):
            specs.append(FeatureSpec(name=f"{attribute.lower()}_{n}", operands=[q1, q2]))

    if not specs:
        qids = [q.id for q in ds.mcq_questions]
        specs = [
            FeatureSpec(name=f"mcq_{n}", operands=[q1, q2])
            for n, (q1, q2) in enumerate(zip(qids, qids[1:]), start=1)
        ]

    logger.debug("Default feature specs: %s", [s.name for s in specs])
    return specs


def personal_profile(features: Mapping[str, float], specs: Sequence[FeatureSpec]) -> str:
    """
    'rigid' when at least half of the difference features vanish (the
    candidate keeps picking the same kind of option across paired
    questions), 'flexible' otherwise, 'unknown' without difference features.
    """
    diffs = [features[s.name] for s in specs if s.formula == "difference_over_ratio" and s.name in features]
    if not diffs:
        return "unknown"
    zeros = sum(1 for d in diffs if d == 0.0)
    return "rigid" if zeros * 2 >= len(diffs) else "flexible"
