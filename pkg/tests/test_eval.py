import itertools
from fractions import Fraction

import numpy as np
import pytest

from phrasebreak.corpus import LabeledUtterance, Rank, synthesize_corpus, synthesize_two_pattern_set
from phrasebreak.eval import (
    AgainstTTSAssessor,
    BreakBertAssessor,
    FoldPlan,
    LlmAssessor,
    MajorityAssessor,
    SmallFoldWarning,
    collapse_binary,
    compute_metrics,
    format_table,
    run_cv,
    to_json,
)
from phrasebreak.baselines import ReferenceBank
from phrasebreak.errors import MissingLabelsError
from phrasebreak.llm import ScriptedClient
from phrasebreak.neural import EncoderConfig, TrainConfig


def oracle(gold, pred, labels=(1, 2, 3)):
    """Exact rational arithmetic straight from the definitions."""
    n = len(gold)
    f1s, supports = [], []
    for c in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == c and p == c)
        predicted = sum(1 for p in pred if p == c)
        support = sum(1 for g in gold if g == c)
        prec = Fraction(tp, predicted) if predicted else Fraction(0)
        rec = Fraction(tp, support) if support else Fraction(0)
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else Fraction(0))
        supports.append(support)
    acc = Fraction(sum(g == p for g, p in zip(gold, pred)), n)
    macro = sum(f1s) / len(labels)
    weighted = sum(f * s for f, s in zip(f1s, supports)) / n
    return acc, weighted, macro


def test_hand_worked_example():
    m = compute_metrics([1, 1, 2, 3], [1, 2, 2, 3])
    assert m.accuracy == pytest.approx(0.75, abs=1e-9)
    assert m.macro_f1 == pytest.approx(7 / 9, abs=1e-9)
    assert m.weighted_f1 == pytest.approx(0.75, abs=1e-9)
    assert [m.per_class[c].f1 for c in (1, 2, 3)] == pytest.approx([2 / 3, 2 / 3, 1.0])


def test_exhaustive_oracle():
    for n in range(1, 5):
        seqs = list(itertools.product((1, 2, 3), repeat=n))
        for gold in seqs:
            for pred in seqs:
                m = compute_metrics(gold, pred)
                acc, weighted, macro = oracle(gold, pred)
                assert abs(m.accuracy - float(acc)) < 1e-12
                assert abs(m.weighted_f1 - float(weighted)) < 1e-12
                assert abs(m.macro_f1 - float(macro)) < 1e-12


def test_perfect_and_single_class():
    m = compute_metrics([1, 2, 3, 3], [1, 2, 3, 3])
    assert (m.accuracy, m.weighted_f1, m.macro_f1) == (1.0, 1.0, 1.0)
    m = compute_metrics([3, 3, 3], [3, 3, 3])
    assert m.macro_f1 == pytest.approx(1 / 3)
    assert m.zero_support == [1, 2]


def test_metric_properties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        gold = rng.integers(1, 4, 12).tolist()
        pred = rng.integers(1, 4, 12).tolist()
        m = compute_metrics(gold, pred)
        recalls = [m.per_class[c].recall * m.per_class[c].support for c in (1, 2, 3)]
        assert m.accuracy == pytest.approx(sum(recalls) / 12)
        present = [m.per_class[c].f1 for c in (1, 2, 3) if m.per_class[c].support]
        assert min(present) - 1e-12 <= m.weighted_f1 <= max(present) + 1e-12


def test_metric_errors():
    with pytest.raises(ValueError):
        compute_metrics([1, 2], [1])
    with pytest.raises(ValueError):
        compute_metrics([], [])


def test_collapse_examples():
    b = collapse_binary([1, 2, 3, 3], [2, 1, 3, 3])
    assert (b.inappropriate.precision, b.inappropriate.recall) == (1.0, 1.0)
    assert (b.appropriate.precision, b.appropriate.recall) == (1.0, 1.0)
    b = collapse_binary([1, 2, 3, 3], [3, 3, 3, 3])
    assert b.appropriate.recall == 1.0 and b.inappropriate.recall == 0.0
    b = collapse_binary([1, 2, 3], [1, 2, 3])
    assert b.inappropriate.f1 == b.appropriate.f1 == 1.0


# --- folds ----------------------------------------------------------------------


@pytest.mark.parametrize("n, k", [(5, 5), (23, 5), (800, 5), (10, 3)])
@pytest.mark.parametrize("stratified", [False, True])
def test_fold_plan_partitions(n, k, stratified):
    strata = [i % 3 for i in range(n)] if stratified else None
    plan = FoldPlan.make(n, k, seed=4, strata=strata)
    flat = sorted(i for f in plan.folds for i in f)
    assert flat == list(range(n))
    sizes = [len(f) for f in plan.folds]
    assert max(sizes) - min(sizes) <= 1
    assert plan == FoldPlan.make(n, k, seed=4, strata=strata)
    for train, test in plan.splits():
        assert sorted(train + test) == list(range(n)) and not set(train) & set(test)


def test_stratification_spreads_rare_class():
    strata = [1] * 21 + [2] * 136 + [3] * 643
    plan = FoldPlan.make(800, 5, seed=0, strata=strata)
    rare = [sum(strata[i] == 1 for i in f) for f in plan.folds]
    assert max(rare) - min(rare) <= 1
    assert FoldPlan.make(800, 5, seed=0) != FoldPlan.make(800, 5, seed=1)


def test_fold_plan_errors():
    with pytest.raises(ValueError):
        FoldPlan.make(3, 5)
    with pytest.raises(ValueError):
        FoldPlan.make(10, 1)


# --- cross-validation --------------------------------------------------------------


pytestmark = pytest.mark.filterwarnings("ignore::phrasebreak.eval.SmallFoldWarning")


@pytest.fixture(scope="module")
def data():
    return synthesize_corpus(0, 60)


class Constant:
    name = "constant"
    trainable = False

    def __init__(self, label):
        self.label = label
        self.fitted = 0

    def fit(self, train, task):
        self.fitted += 1

    def predict(self, test, task, offset=()):
        if task == "fine":
            return [[self.label] * (r.utterance.n - 1) for r in test]
        return [self.label] * len(test)


def test_constant_predictor_accuracy_is_class_share(data):
    plan = FoldPlan.make(len(data), 5, seed=0)
    report = run_cv(data, Constant(2), plan).report
    for fold, m in zip(plan.folds, report.folds):
        share = sum(data[i].overall_rank == 2 for i in fold) / len(fold)
        assert m.accuracy == pytest.approx(share)
    accs = [m.accuracy for m in report.folds]
    assert report.mean("accuracy") == pytest.approx(np.mean(accs))
    assert report.std("accuracy") == pytest.approx(np.std(accs))


def test_training_free_system_is_not_fitted(data):
    system = Constant(3)
    run_cv(data, system, FoldPlan.make(len(data), 5))
    assert system.fitted == 0


def test_majority_learns_from_train(data):
    report = run_cv(data, MajorityAssessor(), FoldPlan.make(len(data), 5), task="fine").report
    assert all(0 <= m.accuracy <= 1 for m in report.folds)


def test_missing_class_warns(make_utterance):
    utt = make_utterance(["a", "b"], [0.0])
    data = [LabeledUtterance(utt, 3, (3,)) for _ in range(10)]
    with pytest.warns(SmallFoldWarning):
        report = run_cv(data, Constant(3), FoldPlan.make(10, 5)).report
    assert report.notes and report.mean("macro_f1") == pytest.approx(1 / 3)


def test_missing_labels(make_utterance):
    data = [LabeledUtterance(make_utterance(["a", "b"], [0.0])) for _ in range(5)]
    with pytest.raises(MissingLabelsError):
        run_cv(data, Constant(3), FoldPlan.make(5, 5))


def test_predictions_are_persisted(data, tmp_path):
    run_cv(data, Constant(3), FoldPlan.make(len(data), 5), task="fine", out_dir=tmp_path)
    lines = (tmp_path / "constant-fine-folds.jsonl").read_text().splitlines()
    assert len(lines) == len(data)


def test_against_tts_assessor():
    learners, refs = synthesize_two_pattern_set(0, 30)
    system = AgainstTTSAssessor(ReferenceBank(refs))
    report = run_cv(learners, system, FoldPlan.make(30, 5), task="overall").report
    assert report.pooled.n == 30


def test_llm_assessor_fallback_and_fine_labels(data):
    def answer(messages):
        speech = messages[1]["content"].splitlines()[-1]
        if "books" in speech:
            return "no idea"
        words = speech.split()
        return f"Rank: 2\nInappropriate: {words[1]} {words[2]} {words[3]}"

    system = LlmAssessor(ScriptedClient(answer), shots=0, retries=0)
    preds = system.predict(data[:10], "fine", range(10))
    for rec, p in zip(data[:10], preds):
        n = rec.utterance.n - 1
        if "books" in rec.utterance.transcript.split():
            assert p == [3] * n
        elif n:
            assert p[0] == 2 and p[1:] == [3] * (n - 1)
    assert len(system.notes) == sum("books" in r.utterance.transcript.split() for r in data[:10])


def test_break_bert_assessor_names():
    assert BreakBertAssessor().name == "bert"


def test_report_text_and_json(data):
    report = run_cv(data, Constant(3), FoldPlan.make(len(data), 5)).report
    text = format_table([report])
    assert text.splitlines()[0].split() == ["Task", "System", "Acc.", "F-Score(weighted)", "F-Score(macro)"]
    acc = f"{100 * report.mean('accuracy'):.1f}({100 * report.std('accuracy'):.1f})"
    assert acc in text
    assert to_json([report]) == to_json([run_cv(data, Constant(3), FoldPlan.make(len(data), 5)).report])
    assert format_table([report.to_dict()]) == text
