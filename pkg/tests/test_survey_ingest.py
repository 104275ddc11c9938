import json

import numpy as np
import pytest

from core.errors import InputError, SurveyParseError, SurveySchemaError, UnsupportedResponseKindError
from nexus.intake.survey_ingest import (
    Attribute,
    CandidateResponse,
    IssueKind,
    Question,
    QuestionKind,
    SurveyDataset,
    encode_mcq,
    export_point_matrix_csv,
    free_text_of,
    load_survey,
    save_survey,
    validate_dataset,
)


OPTIONS = ("a", "b", "c", "d")


def mcq(qid, attribute=Attribute.HOBBIES, options=OPTIONS):
    return Question(id=qid, prompt=qid, kind=QuestionKind.MCQ, attribute=attribute, options=options)


def text_q(qid):
    return Question(id=qid, prompt=qid, kind=QuestionKind.FREE_TEXT, attribute=Attribute.EVENTS)


def dataset(questions, answers_by_candidate, labels=None):
    responses = tuple(CandidateResponse(cid, dict(ans)) for cid, ans in answers_by_candidate.items())
    return SurveyDataset(questions=tuple(questions), responses=responses, labels=labels)


def write(tmp_path, doc):
    path = tmp_path / "survey.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def twenty_two_question_doc(n_candidates=2):
    questions = [
        {"id": f"q{i}", "prompt": f"Question {i}", "kind": "mcq", "attribute": "Hobbies", "options": list(OPTIONS)}
        for i in range(1, 21)
    ]
    questions += [
        {"id": "t1", "prompt": "Describe", "kind": "text", "attribute": "Events"},
        {"id": "t2", "prompt": "Describe more", "kind": "text", "attribute": "Location"},
    ]
    responses = []
    for c in range(n_candidates):
        answers = {f"q{i}": (i + c) % 4 for i in range(1, 21)}
        answers.update({"t1": "books and rap", "t2": "mountains"})
        responses.append({"candidate_id": f"cand{c}", "answers": answers})
    return {"questions": questions, "responses": responses}


# ---------------------------------------------------------
# load_survey
# ---------------------------------------------------------

def test_load_twenty_two_questions(tmp_path):
    ds = load_survey(write(tmp_path, twenty_two_question_doc()))
    assert len(ds.questions) == 22
    assert len(ds.responses) == 2
    assert [q.id for q in ds.questions][:3] == ["q1", "q2", "q3"]
    assert ds.labels is None


def test_load_fixture_keeps_labels(tiny_survey_file):
    ds = load_survey(tiny_survey_file)
    assert ds.candidate_ids == tuple(f"c{i}" for i in range(1, 9))
    assert ds.labels["c1"] == "rooted"
    assert ds.question("q1").attribute is Attribute.TRADITION
    assert len(ds.mcq_questions) == 4 and len(ds.text_questions) == 2


def test_empty_file_is_parse_error(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("", encoding="utf-8")
    with pytest.raises(SurveyParseError) as err:
        load_survey(path)
    assert err.value.line == 1


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "questions": [\n  ,\n]}', encoding="utf-8")
    with pytest.raises(SurveyParseError) as err:
        load_survey(path)
    assert err.value.line == 3


def test_schema_violation_names_field(tmp_path):
    doc = twenty_two_question_doc()
    doc["responses"][1]["answers"]["q3"] = [1, 2]
    with pytest.raises(SurveyParseError) as err:
        load_survey(write(tmp_path, doc))
    assert err.value.field == "responses/1/answers/q3"


def test_unknown_question_is_named(tmp_path):
    doc = twenty_two_question_doc()
    doc["responses"][0]["answers"]["q99"] = 1
    with pytest.raises(SurveySchemaError, match="q99"):
        load_survey(write(tmp_path, doc))


def test_duplicate_question_id(tmp_path):
    doc = twenty_two_question_doc()
    doc["questions"].append(dict(doc["questions"][0]))
    with pytest.raises(SurveySchemaError, match="duplicate question"):
        load_survey(write(tmp_path, doc))


def test_duplicate_candidate_id(tmp_path):
    doc = twenty_two_question_doc()
    doc["responses"][1]["candidate_id"] = "cand0"
    with pytest.raises(SurveySchemaError, match="duplicate candidate"):
        load_survey(write(tmp_path, doc))


def test_option_index_out_of_range(tmp_path):
    doc = twenty_two_question_doc()
    doc["responses"][0]["answers"]["q1"] = 4
    with pytest.raises(SurveySchemaError, match="out of range"):
        load_survey(write(tmp_path, doc))


def test_image_questions_are_rejected(tmp_path):
    doc = twenty_two_question_doc()
    doc["questions"].append({"id": "img", "prompt": "Upload", "kind": "image", "attribute": "Events"})
    with pytest.raises(UnsupportedResponseKindError, match="unsupported response kind"):
        load_survey(write(tmp_path, doc))


def test_labels_must_reference_candidates(tmp_path):
    doc = twenty_two_question_doc()
    doc["labels"] = {"ghost": "x"}
    with pytest.raises(SurveySchemaError, match="ghost"):
        load_survey(write(tmp_path, doc))


def test_attribute_parsing_is_lenient():
    assert Attribute.parse("traveling attributes") is Attribute.TRAVELING
    assert Attribute.parse("WEEK-ROUTINE") is Attribute.WEEK_ROUTINE
    with pytest.raises(SurveySchemaError):
        Attribute.parse("astrology")


def test_save_and_reload_round_trip(tmp_path, tiny_survey_file):
    ds = load_survey(tiny_survey_file)
    again = load_survey(save_survey(ds, tmp_path / "copy" / "survey.json"))
    assert again == ds


# ---------------------------------------------------------
# validate_dataset
# ---------------------------------------------------------

def test_clean_dataset_passes(tiny_survey_file):
    report = validate_dataset(load_survey(tiny_survey_file))
    assert report.passed
    assert report.issues == ()
    assert report.n_passing == 8 and report.n_failing == 0


def test_missing_answers_are_counted():
    questions = [mcq(f"q{i}") for i in range(1, 21)] + [text_q("t1"), text_q("t2")]
    full = {f"q{i}": 0 for i in range(1, 21)}
    full.update({"t1": "x", "t2": "y"})
    partial = {k: v for k, v in full.items() if k not in {"q2", "q5", "q9"}}
    report = validate_dataset(dataset(questions, {"ok": full, "gappy": partial}))

    missing = [i for i in report.issues_for("gappy") if i.kind is IssueKind.MISSING_ANSWER]
    assert len(missing) == 3
    assert {i.question_id for i in missing} == {"q2", "q5", "q9"}
    assert report.passing == ("ok",)
    assert report.failing == ("gappy",)


def test_index_equal_to_option_count_is_out_of_range():
    report = validate_dataset(dataset([mcq("q1")], {"c": {"q1": len(OPTIONS)}}))
    assert [i.kind for i in report.issues] == [IssueKind.OUT_OF_RANGE]
    assert not report.passed


def test_blank_text_is_reported_but_not_blocking():
    report = validate_dataset(dataset([mcq("q1"), text_q("t1")], {"c": {"q1": 0, "t1": "   "}}))
    assert [i.kind for i in report.issues] == [IssueKind.EMPTY_TEXT]
    assert report.blocking_issues == ()
    assert not report.passed


def test_validation_never_raises_on_odd_values():
    ds = dataset([mcq("q1"), text_q("t1")], {"c": {"q1": "two", "t1": 3, "zz": 1}, "d": {}})
    report = validate_dataset(ds)
    kinds = {i.kind for i in report.issues}
    assert {IssueKind.WRONG_TYPE, IssueKind.UNKNOWN_QUESTION, IssueKind.MISSING_ANSWER} <= kinds
    assert list(report.to_frame().columns) == ["candidate_id", "question_id", "issue", "blocking", "detail"]


# ---------------------------------------------------------
# encode_mcq
# ---------------------------------------------------------

def test_encoding_is_the_option_index():
    ds = dataset([mcq("q1"), mcq("q2")], {"a": {"q1": 0, "q2": 1}, "b": {"q1": 2, "q2": 3}, "c": {"q1": 0, "q2": 1}})
    pm = encode_mcq(ds)
    assert pm.rows.tolist() == [[0, 1], [2, 3], [0, 1]]
    assert pm.columns == ("q1", "q2")
    assert pm.candidate_ids == ("a", "b", "c")


def test_all_first_options_give_zero_row():
    ds = dataset([mcq("q1"), mcq("q2"), text_q("t1")], {"a": {"q1": 0, "q2": 0, "t1": "hi"}})
    assert encode_mcq(ds).rows.tolist() == [[0.0, 0.0]]


def test_standardized_columns():
    rng = np.random.default_rng(3)
    answers = {f"c{i}": {"q1": int(rng.integers(4)), "q2": int(rng.integers(4)), "q3": 2} for i in range(40)}
    pm = encode_mcq(dataset([mcq("q1"), mcq("q2"), mcq("q3")], answers), standardize=True)
    X = pm.rows
    assert np.all(np.abs(X[:, :2].mean(axis=0)) < 1e-9)
    assert np.all(np.abs(X[:, :2].var(axis=0) - 1.0) < 1e-9)
    assert np.all(X[:, 2] == 0.0)


def test_missing_mcq_answer_names_candidate_and_question():
    ds = dataset([mcq("q1"), mcq("q2")], {"a": {"q1": 0}})
    with pytest.raises(InputError, match="'a'.*'q2'"):
        encode_mcq(ds)


def test_point_matrix_is_read_only(tiny_survey_file):
    pm = encode_mcq(load_survey(tiny_survey_file))
    with pytest.raises(ValueError):
        pm.rows[0, 0] = 9.0


def test_export_point_matrix_csv(tmp_path, tiny_survey_file):
    pm = encode_mcq(load_survey(tiny_survey_file))
    path = export_point_matrix_csv(pm, tmp_path / "points.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "q1,q2,q3,q4"
    assert lines[1] == "3,3,0,1"
    assert len(lines) == 9


def test_free_text_in_questionnaire_order(tiny_survey_file):
    ds = load_survey(tiny_survey_file)
    text = free_text_of(ds, ds.response("c1"))
    assert text.startswith("We visit the temple")
    assert text.endswith("temple festival")
