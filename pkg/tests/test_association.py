import numpy as np
import pytest
from pydantic import ValidationError

from core.errors import ConfigError, InputError, ParameterError, UnsupportedScaleError
from nexus.association.association_engine import (
    AssociationEngine,
    ChannelWeights,
    association_matrix,
    overall_association,
)
from nexus.association.evaluation import evaluate_accuracy
from nexus.association.synthetic import (
    CONFIG_FILE,
    EMBEDDING_FILE,
    SURVEY_FILE,
    synthetic_cohort,
    write_cohort,
)
from nexus.association.teams import _fill_empty_teams, cluster_names, form_teams
from nexus.clustering.cluster_engine import ClusterAssignment
from nexus.graph.context_graph import build_graph
from nexus.graph.features import FeatureSpec
from nexus.intake.survey_ingest import (
    Attribute,
    CandidateResponse,
    Question,
    QuestionKind,
    SurveyDataset,
    load_survey,
)
from nexus.lexicon.embeddings import load_embeddings
from nexus.lexicon.text_pipeline import ContextVector
from nexus.pipeline.config import build_config, load_config


def two_block_similarity(sizes=(3, 4), inside=0.9, across=0.05):
    n = sum(sizes)
    truth = np.repeat(np.arange(len(sizes)), sizes)
    S = np.where(truth[:, None] == truth[None, :], inside, across)
    np.fill_diagonal(S, 1.0)
    return S, truth


# ---------------------------------------------------------
# overall_association
# ---------------------------------------------------------

def test_overall_association_examples():
    assert overall_association(1.0, 1.0, 1.0) == 1.0
    assert overall_association(0.2, 0.4, 0.6) == pytest.approx(0.4)
    assert overall_association(0.3, 0.9, 0.9, weights=(2, 0, 0)) == pytest.approx(0.3)
    assert overall_association(1.0, 0.0, 0.0) == pytest.approx(1 / 3)
    assert overall_association(0.0, 0.0, 0.0) == 0.0


def test_overall_association_scale_invariant_and_monotone():
    rng = np.random.default_rng(1)
    for _ in range(200):
        s = rng.uniform(0, 1, 3)
        w = rng.uniform(0, 5, 3) + 1e-3
        base = overall_association(*s, weights=w)
        assert overall_association(*s, weights=w * 7.5) == pytest.approx(base)
        bumped = s.copy()
        bumped[int(rng.integers(3))] = 1.0
        assert overall_association(*bumped, weights=w) >= base - 1e-12


@pytest.mark.parametrize(
    "scores, weights",
    [
        ((0.5, 0.5, 0.5), (0, 0, 0)),
        ((0.5, 0.5, 0.5), (1, -1, 1)),
        ((0.5, 0.5, 0.5), (1, 1)),
        ((0.5, 1.5, 0.5), (1, 1, 1)),
        ((-0.1, 0.5, 0.5), (1, 1, 1)),
    ],
)
def test_overall_association_rejects(scores, weights):
    with pytest.raises(ParameterError):
        overall_association(*scores, weights=weights)


def test_channel_weights():
    assert ChannelWeights().normalized() == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    assert ChannelWeights(w_mcq_graph=2, w_text_graph=1, w_text_vector=1).normalized() == pytest.approx(
        (0.5, 0.25, 0.25)
    )
    with pytest.raises(ValidationError):
        ChannelWeights(w_mcq_graph=0, w_text_graph=0, w_text_vector=0)
    with pytest.raises(ValidationError):
        ChannelWeights(w_mcq_graph=-1)


# ---------------------------------------------------------
# association matrix
# ---------------------------------------------------------

@pytest.fixture
def tiny_report(tiny_survey_file, tiny_embeddings):
    engine = AssociationEngine(load_embeddings(tiny_embeddings))
    profiles = engine.build_profiles(load_survey(tiny_survey_file))
    return engine, profiles, engine.associate(profiles)


def test_matrix_is_symmetric_with_unit_diagonal(tiny_report):
    _, _, report = tiny_report
    M = report.matrix
    assert M.shape == (8, 8)
    assert np.array_equal(M, M.T)
    assert np.all(np.diag(M) == 1.0)
    assert np.all((M >= 0.0) & (M <= 1.0))
    assert len(report.pairs) == 28


def test_identical_responses_associate_fully(tiny_report):
    _, _, report = tiny_report
    assert report.score("c1", "c3") == 1.0
    assert report.score("c5", "c7") == 1.0


def test_groups_are_closer_inside_than_across(tiny_report):
    _, _, report = tiny_report
    for a, b, outsider in [("c1", "c2", "c5"), ("c6", "c7", "c4")]:
        assert report.score(a, b) > report.score(a, outsider)


def test_profiles_carry_features_and_text(tiny_report):
    engine, profiles, _ = tiny_report
    c1 = profiles[0]
    assert c1.candidate_id == "c1"
    assert c1.features == {"tradition_1": 0.0, "hobbies_1": -1.0}
    assert "templ" in c1.context.terms
    assert c1.feature_graph is not None and c1.text_graph is not None
    assert "templ" in engine.table


def test_report_frames(tiny_report):
    _, _, report = tiny_report
    pairs = report.pairs_frame()
    assert list(pairs.columns) == ["candidate_a", "candidate_b", "mcq_graph", "text_graph", "text_vector", "combined"]
    assert len(pairs) == 28
    matrix = report.matrix_frame()
    assert matrix.index.name == "candidate_id"
    assert list(matrix.columns) == [f"c{i}" for i in range(1, 9)]


def test_matrix_is_read_only(tiny_report):
    _, _, report = tiny_report
    with pytest.raises(ValueError):
        report.matrix[0, 1] = 0.5


def mcq_only_dataset(answers):
    questions = (
        Question("q1", "q1", QuestionKind.MCQ, Attribute.HOBBIES, ("a", "b", "c")),
        Question("q2", "q2", QuestionKind.MCQ, Attribute.HOBBIES, ("a", "b", "c")),
        Question("t1", "t1", QuestionKind.FREE_TEXT, Attribute.EVENTS),
    )
    responses = tuple(CandidateResponse(cid, ans) for cid, ans in answers.items())
    return SurveyDataset(questions=questions, responses=responses)


def test_missing_text_channel_is_left_out(tiny_embeddings, caplog):
    ds = mcq_only_dataset({"a": {"q1": 2, "q2": 0}, "b": {"q1": 2, "q2": 0}})
    engine = AssociationEngine(load_embeddings(tiny_embeddings))
    report = engine.associate(engine.build_profiles(ds))
    pair = report.pairs[0]
    assert pair.text_graph is None and pair.text_vector is None
    assert pair.mcq_graph == 1.0
    assert report.score("a", "b") == 1.0
    assert "no usable free text" in caplog.text


def test_pair_without_any_channel_scores_zero(tiny_embeddings):
    questions = (Question("t1", "t1", QuestionKind.FREE_TEXT, Attribute.EVENTS),)
    ds = SurveyDataset(
        questions=questions,
        responses=(CandidateResponse("a", {}), CandidateResponse("b", {"t1": "   "})),
    )
    engine = AssociationEngine(load_embeddings(tiny_embeddings))
    report = engine.associate(engine.build_profiles(ds))
    assert report.score("a", "b") == 0.0
    assert report.score("a", "a") == 1.0


def test_association_matrix_from_config(tiny_survey_file, tiny_embeddings):
    cfg = build_config(
        {"survey_path": str(tiny_survey_file), "embedding_path": str(tiny_embeddings), "k_mode": "fixed", "k": 2}
    )
    M = association_matrix(load_survey(tiny_survey_file), cfg)
    assert M.shape == (8, 8)
    assert M[0, 2] == 1.0


def test_engine_rejects_bad_top_n(tiny_embeddings):
    with pytest.raises(ParameterError):
        AssociationEngine(load_embeddings(tiny_embeddings), top_n=0)


@pytest.mark.parametrize(
    "specs, message",
    [
        ([FeatureSpec(name="trad", operands=["q1", "t1"])], "not an MCQ question"),
        ([FeatureSpec(name="trad", operands=["q1", "q2"], group_ratio=-2.0)], "group_ratio"),
        (
            [FeatureSpec(name="travel", operands=["q1", "q2"]), FeatureSpec(name="travel", operands=["q3", "q4"])],
            "duplicate feature name",
        ),
    ],
)
def test_profiles_reject_bad_feature_specs(tiny_survey_file, tiny_embeddings, specs, message):
    engine = AssociationEngine(load_embeddings(tiny_embeddings), specs=specs)
    with pytest.raises(ConfigError, match=message):
        engine.build_profiles(load_survey(tiny_survey_file))


# ---------------------------------------------------------
# teams
# ---------------------------------------------------------

def test_teams_follow_blocks():
    S, truth = two_block_similarity()
    teams = form_teams(S, 2, candidate_ids=[f"p{i}" for i in range(7)])
    assert teams.teams == (("p0", "p1", "p2"), ("p3", "p4", "p5", "p6"))
    assert teams.labels == tuple(truth.tolist())
    assert teams.as_cluster_assignment().method == "teams-spectral"

    frame = teams.to_frame({0: "temple", 1: "beach"})
    assert list(frame.columns) == ["team", "candidate_id", "team_name"]
    assert frame["team_name"].tolist() == ["temple"] * 3 + ["beach"] * 4


def test_single_team_and_bad_k():
    S, _ = two_block_similarity()
    assert form_teams(S, 1).teams == (tuple(str(i) for i in range(7)),)
    with pytest.raises(ParameterError):
        form_teams(S, 8)
    with pytest.raises(ParameterError):
        form_teams(S, 0)
    with pytest.raises(InputError):
        form_teams(S, 2, candidate_ids=["a", "b"])


def test_every_team_is_nonempty():
    S, _ = two_block_similarity(sizes=(2, 2, 2))
    teams = form_teams(S, 6)
    assert all(len(t) == 1 for t in teams.teams)


def test_fill_empty_teams_splits_the_largest():
    assert _fill_empty_teams([0, 0, 0, 1], 3) == [0, 0, 2, 1]
    assert _fill_empty_teams([0, 1], 2) == [0, 1]


def test_cluster_names():
    S, _ = two_block_similarity(sizes=(2, 1))
    teams = form_teams(S, 2, candidate_ids=["a", "b", "c"])
    graphs = {
        "a": build_graph({}, _ctx({"temple": 0.6, "festival": 0.4})),
        "b": build_graph({}, _ctx({"festival": 0.5, "temple": 0.5})),
        "c": None,
    }
    assert cluster_names(teams, graphs) == {0: "temple", 1: "team_1"}


def _ctx(scores):
    return ContextVector(entries=tuple(scores.items()))


# ---------------------------------------------------------
# evaluation
# ---------------------------------------------------------

def labelled(labels, ids=None):
    ids = ids or [f"c{i}" for i in range(len(labels))]
    return ClusterAssignment(labels=tuple(labels), k=len(set(labels)), method="kmeans", candidate_ids=tuple(ids))


def test_perfect_and_permuted_accuracy():
    truth = {"c0": "x", "c1": "x", "c2": "y", "c3": "y"}
    assert evaluate_accuracy(labelled([0, 0, 1, 1]), truth).accuracy == 1.0
    report = evaluate_accuracy(labelled([0, 0, 1, 1]), {"c0": "y", "c1": "y", "c2": "x", "c3": "x"})
    assert report.accuracy == 1.0
    assert report.mapping == {0: "y", 1: "x"}


def test_half_matched():
    truth = dict(zip([f"c{i}" for i in range(10)], ["x", "x", "x", "y", "y", "x", "x", "x", "y", "y"]))
    report = evaluate_accuracy(labelled([0] * 5 + [1] * 5), truth)
    assert report.accuracy == 0.5
    assert (report.n_matched, report.n_total) == (5, 10)
    assert report.confusion.shape == (2, 2)


def test_more_clusters_than_labels():
    truth = {"c0": "x", "c1": "x", "c2": "y", "c3": "y", "c4": "y"}
    report = evaluate_accuracy(labelled([0, 0, 1, 1, 2]), truth)
    assert report.accuracy == pytest.approx(0.8)
    assert report.mapping == {0: "x", 1: "y"}
    assert report.mapping_frame().columns.tolist() == ["cluster", "label"]


def test_accuracy_errors():
    with pytest.raises(InputError, match="c1"):
        evaluate_accuracy(labelled([0, 1]), {"c0": "x"})
    with pytest.raises(InputError):
        evaluate_accuracy(ClusterAssignment(labels=(0, 1), k=2, method="kmeans"), {"0": "x"})
    nine = labelled(list(range(9)))
    with pytest.raises(UnsupportedScaleError):
        evaluate_accuracy(nine, {f"c{i}": f"l{i}" for i in range(9)})


def test_accuracy_of_teams():
    S, truth = two_block_similarity()
    ids = [f"p{i}" for i in range(7)]
    teams = form_teams(S, 2, candidate_ids=ids)
    labels = {cid: ("left" if t == 0 else "right") for cid, t in zip(ids, truth)}
    assert evaluate_accuracy(teams, labels).accuracy == 1.0


# ---------------------------------------------------------
# synthetic cohort
# ---------------------------------------------------------

def test_synthetic_cohort_shape():
    cohort = synthetic_cohort(n=30, prototypes=3, noise=0.1, seed=4)
    ds = cohort.dataset
    assert len(ds.responses) == 30
    assert ds.candidate_ids[:2] == ("c01", "c02")
    assert len(ds.mcq_questions) == 12 and len(ds.text_questions) == 4
    assert sorted(set(cohort.labels.values())) == ["prototype_a", "prototype_b", "prototype_c"]
    assert sum(1 for v in cohort.labels.values() if v == "prototype_a") == 10
    assert ds.labels == cohort.labels


def test_synthetic_cohort_is_seeded():
    a = synthetic_cohort(n=12, seed=9)
    b = synthetic_cohort(n=12, seed=9)
    assert a.dataset == b.dataset
    assert np.array_equal(a.embeddings.vectors, b.embeddings.vectors)
    assert synthetic_cohort(n=12, seed=10).dataset != a.dataset


def test_noiseless_prototypes_answer_alike():
    ds = synthetic_cohort(n=9, prototypes=3, noise=0.0, seed=2).dataset
    first, fourth = ds.responses[0].answers, ds.responses[3].answers
    assert {q: first[q] for q in first if q.startswith("q")} == {q: fourth[q] for q in fourth if q.startswith("q")}


@pytest.mark.parametrize("kwargs", [{"prototypes": 0}, {"prototypes": 5}, {"n": 2}, {"noise": 1.5}])
def test_synthetic_cohort_parameters(kwargs):
    with pytest.raises(ParameterError):
        synthetic_cohort(**kwargs)


def test_write_cohort(tmp_path):
    cohort = synthetic_cohort(n=12, seed=1)
    config_path = write_cohort(cohort, tmp_path / "cohort")
    assert config_path.name == CONFIG_FILE
    for name in (SURVEY_FILE, EMBEDDING_FILE):
        assert (tmp_path / "cohort" / name).exists()

    cfg = load_config(config_path)
    assert cfg.k == 3 and cfg.k_mode == "fixed"
    assert load_survey(cfg.survey_path) == cohort.dataset
