"""The ten acceptance criteria, each reporting one PASS/FAIL line.

Every check asserts its numeric bound and its wall-clock budget.
"""

import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest
import torch
from scipy import stats

from phrasebreak.baselines import ReferenceBank, log_partition
from phrasebreak.baselines.crf import CRF
from phrasebreak.cli import EXIT_OK, main
from phrasebreak.corpus import Rank, synthesize_corpus, synthesize_references, synthesize_two_pattern_set
from phrasebreak.corruption import Label, build_pretraining_set, corrupt
from phrasebreak.eval import AgainstTTSAssessor, BreakBertAssessor, LlmAssessor, compute_metrics
from phrasebreak.llm import HeuristicClient, RecordingClient, ReplayClient, VerdictParseError, parse_verdict
from phrasebreak.llm import positions_from_indices, render_verdict
from phrasebreak.llm.verdict import LlmVerdict
from phrasebreak.neural import EncoderConfig, Predictor, TrainConfig, Vocab
from phrasebreak.neural import discriminator_scores, finetune_fine_grained, pretrain_discriminator
from phrasebreak.neural.train import batch_loss, build_model
from phrasebreak.tokenizer import BREAKS, BreakToken, TokenSequence, bucket_duration, tokenize

from conftest import max_gradient_error

pytestmark = pytest.mark.filterwarnings("ignore::phrasebreak.eval.SmallFoldWarning")


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail, started, budget):
        elapsed = time.perf_counter() - started
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\n[criterion {number:2d}] {status} {title}: {detail} ({elapsed:.1f}s of {budget:.0f}s)")
        assert ok, f"{title}: {detail} in {elapsed:.1f}s"

    return emit


def fine_metrics(ckpt, records):
    gold = [int(x) for r in records for x in r.interval_ranks]
    pred = [int(a.rank) for p in Predictor(ckpt).fine_grained(records) for a in p.intervals]
    return compute_metrics(gold, pred)


def test_tokenizer_boundaries(verdict):
    t = time.perf_counter()
    gaps = [0, 0.010, 0.0101, 0.050, 0.0501, 0.200, 0.2001, -0.03]
    expected = ["br0", "br0", "br1", "br1", "br2", "br2", "br3", "br0"]
    got = [bucket_duration(g).value for g in gaps]
    verdict(1, "break buckets", got == expected, " ".join(got), t, 1)


def test_corruption_statistics(verdict):
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    seqs = [
        TokenSequence.from_parts([f"w{i}" for i in range(1001)], [BREAKS[j] for j in rng.integers(0, 4, 1000)])
        for _ in range(110)
    ]
    moves = np.zeros((4, 4), dtype=int)
    replaced = total = 0
    for seq in seqs:
        rec = corrupt(seq, 0.15, rng)
        for old, new, m in zip(seq.breaks, rec.sequence.breaks, rec.replaced_mask):
            moves[BREAKS.index(old), BREAKS.index(new)] += m
        replaced += sum(rec.replaced_mask)
        total += len(rec.replaced_mask)
    rate = replaced / total
    # one goodness-of-fit statistic over all four source kinds (3 - 1 dof each)
    chi2 = sum(stats.chisquare(np.delete(moves[k], k)).statistic for k in range(4))
    p_uniform = stats.chi2.sf(chi2, 8)
    originals = [tokenize(u) for u in synthesize_references(1, 200)]
    labels = [r.label for r in build_pretraining_set(originals, ratio=3, p=0.15, rng=0)]
    ratio_ok = labels.count(Label.CORRUPTED) == 3 * labels.count(Label.ORIGINAL) == 600
    ok = total >= 100_000 and 0.145 <= rate <= 0.155 and p_uniform > 0.01 and ratio_ok
    verdict(2, "corruption statistics", ok, f"rate={rate:.4f} over {total} breaks, uniformity p={p_uniform:.3f}, 3:1={ratio_ok}", t, 30)


def test_gradient_check(verdict):
    t = time.perf_counter()
    enc = EncoderConfig(max_len=24, dim=8, layers=1, heads=2, ffn_dim=12, dropout=0.0)
    corpus = synthesize_corpus(0, 6)
    seqs = [tokenize(r.utterance) for r in corpus]
    vocab = Vocab.from_sequences(seqs)
    encs = [vocab.encode(s, enc.max_len) for s in seqs[:3]]
    targets = {
        "pretrained": [0, 1, 1],
        "finetuned-overall": [int(r.overall_rank) - 1 for r in corpus[:3]],
        "finetuned-fine-grained": [[int(x) - 1 for x in r.interval_ranks] for r in corpus[:3]],
    }
    worst = {}
    for stage, y in targets.items():
        model = build_model(enc, len(vocab), stage, seed=1).double().eval()
        with torch.no_grad():
            for p in model.parameters():
                p.add_(torch.randn_like(p) * 0.3)
        worst[stage] = max_gradient_error(model, lambda: batch_loss(model, encs, y, vocab.pad_id))
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    verdict(3, "finite-difference gradients", max(worst.values()) <= 1e-4, detail, t, 60)


def test_crf_oracle(verdict):
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, viterbi_ok = 0.0, True
    crf = CRF()
    for _ in range(200):
        n = int(rng.integers(1, 6))
        em = torch.tensor(rng.normal(scale=2.0, size=(1, n, 3)))
        tr, st, sp = (torch.tensor(rng.normal(size=s)) for s in ((3, 3), 3, 3))
        lengths = torch.tensor([n])
        log_z = log_partition(em, tr, st, sp, lengths).item()
        paths = list(itertools.product(range(3), repeat=n))
        scores = []
        for path in paths:
            s = st[path[0]] + sp[path[-1]] + sum(em[0, i, k] for i, k in enumerate(path))
            s = s + sum(tr[a, b] for a, b in zip(path, path[1:]))
            scores.append(float(s))
        ref = float(np.logaddexp.reduce(scores))
        worst = max(worst, abs(log_z - ref) / abs(ref))
        with torch.no_grad():
            crf.transitions.copy_(tr)
            crf.start.copy_(st)
            crf.stop.copy_(sp)
        viterbi_ok &= crf.decode(em, lengths)[0] == list(paths[int(np.argmax(scores))])
    verdict(4, "CRF against enumeration", worst <= 1e-8 and viterbi_ok, f"max rel err {worst:.1e}, viterbi={viterbi_ok}", t, 30)


@pytest.mark.slow
def test_learnability(verdict):
    t = time.perf_counter()
    # breaks in fluent readings forced to br0, then every break replaced: separable by construction
    refs = [tokenize(u) for u in synthesize_references(1, 1000, gap_profile="fluent")]
    flat = [s.with_breaks([BreakToken.BR0] * len(s.breaks)) for s in refs]
    train = build_pretraining_set(flat[:800], ratio=3, p=1.0, rng=0)
    held = build_pretraining_set(flat[800:], ratio=3, p=1.0, rng=1)
    disc = pretrain_discriminator(train, EncoderConfig(), TrainConfig())
    disc_acc = discriminator_scores(disc, held)["accuracy"]
    data = synthesize_corpus(3, 1800, gap_profile="mixed")
    fine = finetune_fine_grained(data[:1500], enc=EncoderConfig(), tc=TrainConfig.finetune_defaults("toy", epochs=20))
    fine_acc = fine_metrics(fine, data[1500:]).accuracy
    ok = disc_acc >= 0.95 and fine_acc >= 0.90
    verdict(5, "learnability", ok, f"discriminator acc={disc_acc:.3f}, per-interval acc={fine_acc:.3f}", t, 600)


@pytest.mark.slow
def test_pretraining_transfer(verdict):
    t = time.perf_counter()
    refs = [tokenize(u) for u in synthesize_references(11, 2000, gap_profile="mixed")]
    pre = pretrain_discriminator(build_pretraining_set(refs, 3, 0.15, 5), EncoderConfig(), TrainConfig(lr=1e-3, epochs=15))
    data = synthesize_corpus(3, 1000, gap_profile="mixed")
    scores = {"pretrained": [], "fresh": []}
    for seed in range(5):
        idx = np.random.default_rng(seed).permutation(len(data))
        train, test = [data[i] for i in idx[:100]], [data[i] for i in idx[500:]]
        tc = TrainConfig.finetune_defaults("toy", epochs=40, seed=seed)
        scores["pretrained"].append(fine_metrics(finetune_fine_grained(train, init=pre, tc=tc), test).macro_f1)
        scores["fresh"].append(fine_metrics(finetune_fine_grained(train, enc=EncoderConfig(), tc=tc), test).macro_f1)
    diff = np.mean(scores["pretrained"]) - np.mean(scores["fresh"])
    detail = f"macro-F1 {np.mean(scores['pretrained']):.3f} vs {np.mean(scores['fresh']):.3f}, diff={diff:+.3f}"
    verdict(6, "pre-training transfer", diff >= 0, detail, t, 900)


@pytest.mark.slow
def test_against_tts_failure_mode(verdict):
    t = time.perf_counter()
    learners, refs = synthesize_two_pattern_set(0, 1000)
    train, test = learners[:800], learners[800:]
    gold = [int(x) for r in test for x in r.interval_ranks]
    tts = [x for p in AgainstTTSAssessor(ReferenceBank(refs)).predict(test, "fine") for x in p]
    model = BreakBertAssessor(enc=EncoderConfig(), tc=TrainConfig.finetune_defaults("toy", epochs=20))
    model.fit(train, "fine")
    ours = [x for p in model.predict(test, "fine") for x in p]
    great = int(Rank.GREAT)
    tts_m, ours_m = compute_metrics(gold, tts).per_class[great], compute_metrics(gold, ours).per_class[great]
    ok = tts_m.recall < ours_m.recall and tts_m.precision >= 0.85
    detail = f"Great recall tts={tts_m.recall:.3f} < model={ours_m.recall:.3f}, tts precision={tts_m.precision:.3f}"
    verdict(7, "against-TTS failure mode", ok, detail, t, 300)


def test_metrics_oracle(verdict):
    t = time.perf_counter()
    mismatches = 0
    for n in range(1, 5):
        for gold in itertools.product((1, 2, 3), repeat=n):
            for pred in itertools.product((1, 2, 3), repeat=n):
                cm = np.zeros((3, 3))
                for g, p in zip(gold, pred):
                    cm[g - 1, p - 1] += 1
                tp, support, predicted = np.diag(cm), cm.sum(1), cm.sum(0)
                prec = np.divide(tp, predicted, out=np.zeros(3), where=predicted > 0)
                rec = np.divide(tp, support, out=np.zeros(3), where=support > 0)
                f1 = np.divide(2 * prec * rec, prec + rec, out=np.zeros(3), where=prec + rec > 0)
                m = compute_metrics(gold, pred)
                expect = (tp.sum() / n, (f1 * support).sum() / n, f1.mean())
                mismatches += not np.allclose((m.accuracy, m.weighted_f1, m.macro_f1), expect, rtol=0, atol=1e-12)
    hand = compute_metrics([1, 1, 2, 3], [1, 2, 2, 3])
    hand_ok = all(abs(a - b) <= 1e-9 for a, b in zip((hand.accuracy, hand.macro_f1, hand.weighted_f1), (0.75, 7 / 9, 0.75)))
    detail = f"{mismatches} mismatches, hand example acc={hand.accuracy:.3f} macro={hand.macro_f1:.3f} weighted={hand.weighted_f1:.3f}"
    verdict(8, "metrics oracle", mismatches == 0 and hand_ok, detail, t, 10)


def test_llm_harness(verdict, tmp_path):
    t = time.perf_counter()
    data = synthesize_corpus(5, 50)
    pool = synthesize_corpus(6, 40)
    runs = {}
    for shots in (0, 4):
        transcript = tmp_path / f"{shots}.jsonl"
        recorded = LlmAssessor(RecordingClient(HeuristicClient(), transcript), shots=shots)
        if shots:
            recorded.fit(pool, "overall")
        first = recorded.predict(data, "fine", range(50)), recorded.predict(data, "overall", range(50))
        replayed = LlmAssessor(ReplayClient(transcript), shots=shots)
        if shots:
            replayed.fit(pool, "overall")
        second = replayed.predict(data, "fine", range(50)), replayed.predict(data, "overall", range(50))
        runs[shots] = first == second
    rng = np.random.default_rng(0)
    words = ["good", "morning", "1,000", "etc.", "so,", "br0", "@2", "none", "it's"]
    round_trip = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        query = TokenSequence.from_parts(
            [words[i] for i in rng.integers(0, len(words), n)], [BREAKS[i] for i in rng.integers(0, 4, n - 1)]
        )
        flagged = rng.choice(n - 1, size=int(rng.integers(0, n)), replace=False) if n > 1 else []
        v = LlmVerdict(Rank(int(rng.integers(1, 4))), positions_from_indices(query, flagged))
        round_trip += parse_verdict(render_verdict(v, query), query) == v
    query = tokenize(data[0].utterance)
    crashes = 0
    alphabet = list("Rank:Inappropriate none br0123@,.*_\n\t \"'") + ["\x00", "é", " "]
    for _ in range(5_000):
        text = "".join(rng.choice(alphabet, int(rng.integers(0, 80))))
        try:
            parse_verdict(text, query)
        except VerdictParseError:
            pass
        except Exception:
            crashes += 1
    ok = runs[0] and runs[4] and round_trip == 10_000 and crashes == 0
    detail = f"replay identical 0-shot={runs[0]} 4-shot={runs[4]}, round-trip {round_trip}/10000, garbage crashes={crashes}"
    verdict(9, "LLM harness", ok, detail, t, 60)


CHAIN_CONFIG = {"pretrain": {"epochs": 3, "lr": 1e-3}, "finetune": {"epochs": 3}}


def _chain(root: Path, config: Path) -> dict[str, bytes]:
    ckpt = root / "checkpoints" / "pretrained.ckpt"
    steps = [
        ["synth", "--n", "300"],
        ["synth", "--n", "300", "--kind", "references"],
        ["corrupt"],
        ["pretrain"],
        ["finetune-overall", "--init", str(ckpt)],
        ["finetune-fine", "--init", str(ckpt)],
        ["evaluate", "--system", "break-bert", "--task", "overall"],
        ["evaluate", "--system", "break-bert", "--task", "fine"],
        ["evaluate", "--system", "majority", "--task", "overall"],
        ["report"],
    ]
    for step in steps:
        code = main([*step, "--run-dir", str(root), "--config", str(config), "--seed", "13"])
        assert code == EXIT_OK, step
    return {p.name: p.read_bytes() for p in sorted((root / "reports").iterdir())}


@pytest.mark.slow
def test_end_to_end_reproducibility(verdict, tmp_path):
    t = time.perf_counter()
    config = tmp_path / "chain.json"
    config.write_text(json.dumps(CHAIN_CONFIG))
    a, b = _chain(tmp_path / "a", config), _chain(tmp_path / "b", config)
    same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    verdict(10, "end-to-end reproducibility", same and len(a) >= 7, f"{len(a)} report files byte-identical={same}", t, 1200)
