import logging

import numpy as np
import pytest
import torch

from phrasebreak.corpus import synthesize_corpus, synthesize_references
from phrasebreak.corruption import build_pretraining_set
from phrasebreak.errors import ConfigError, DataError, MissingLabelsError, StageMismatchError
from phrasebreak.corpus import LabeledUtterance
from phrasebreak.neural import (
    Checkpoint,
    EncoderConfig,
    Predictor,
    TrainConfig,
    Vocab,
    finetune_fine_grained,
    finetune_overall,
    pretrain_discriminator,
)
from phrasebreak.neural.encoder import masked_token_loss
from phrasebreak.neural.train import DegenerateTrainingWarning, batch_loss, build_model
from phrasebreak.tokenizer import parse, tokenize

from conftest import max_gradient_error

TINY = EncoderConfig(max_len=24, dim=8, layers=1, heads=2, ffn_dim=12, dropout=0.0)
FAST = TrainConfig(batch_size=16, epochs=1, lr=1e-3)


@pytest.fixture(scope="module")
def corpus():
    return synthesize_corpus(0, 40)


@pytest.fixture(scope="module")
def seqs(corpus):
    return [tokenize(r.utterance) for r in corpus]


# --- vocabulary -----------------------------------------------------------------


def test_vocab_layout():
    vocab = Vocab.build(["good", "morning", "br2"])
    enc = vocab.encode(parse("good br2 morning"), 32)
    assert enc.ids[0] == 2 and enc.ids[-1] == 3
    assert enc.ids[enc.break_positions[0]] == 6
    assert vocab.word_ids("good") == (vocab.pieces.index("good"),)
    # a literal word "br2" is never mapped onto the break token
    assert 6 not in vocab.word_ids("br2")
    assert Vocab.from_dict(vocab.to_dict()) == vocab


def test_unknown_word_falls_back_to_pieces_or_unk():
    vocab = Vocab.build(["abc"])
    assert vocab.word_ids("cab") == tuple(vocab.pieces.index(p) for p in ("c", "##a", "##b"))
    assert vocab.word_ids("zzz") == (1,)


def test_truncation_drops_trailing_breaks(caplog):
    vocab = Vocab.build(["a"])
    seq = parse(" br1 ".join(["a"] * 10))
    with caplog.at_level(logging.WARNING):
        enc = vocab.encode(seq, 8)
    assert len(enc.ids) == 8 and enc.truncated
    assert enc.n_breaks == 9 and len(enc.break_positions) == 3
    assert "truncated" in caplog.text


# --- gradients -----------------------------------------------------------------


@pytest.mark.parametrize("stage", ["finetuned-overall", "finetuned-fine-grained"])
def test_finite_difference_gradients(stage, seqs, corpus):
    vocab = Vocab.from_sequences(seqs[:6])
    encs = [vocab.encode(s, TINY.max_len) for s in seqs[:3]]
    if stage == "finetuned-overall":
        targets = [int(r.overall_rank) - 1 for r in corpus[:3]]
    else:
        targets = [[int(x) - 1 for x in r.interval_ranks] for r in corpus[:3]]
    model = build_model(TINY, len(vocab), stage, seed=1).double().eval()
    # larger weights than the 0.02 init so every parameter gets a sizeable gradient
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.randn_like(p) * 0.3)
    assert max_gradient_error(model, lambda: batch_loss(model, encs, targets, vocab.pad_id)) <= 1e-4


def test_masked_loss_ignores_unmasked_labels():
    logits = torch.randn(2, 5, 3)
    labels = torch.randint(0, 3, (2, 5))
    mask = torch.tensor([[0, 1, 0, 1, 0], [0, 0, 1, 0, 0]], dtype=torch.bool)
    base = masked_token_loss(logits, labels, mask)
    scrambled = torch.where(mask, labels, torch.randint(0, 3, (2, 5)) + 100)
    assert masked_token_loss(logits, scrambled, mask) == base
    ref = torch.nn.functional.cross_entropy(logits[mask], labels[mask])
    assert base.item() == pytest.approx(ref.item(), rel=1e-6)


# --- training, checkpoints, inference -----------------------------------------------


def test_training_is_bit_reproducible(corpus, tmp_path):
    a = finetune_fine_grained(corpus, enc=TINY, tc=FAST)
    b = finetune_fine_grained(corpus, enc=TINY, tc=FAST)
    assert a.digest() == b.digest()
    a.save(tmp_path / "a.ckpt")
    b.save(tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    c = finetune_fine_grained(corpus, enc=TINY, tc=FAST.with_(seed=1))
    assert c.digest() != a.digest()


def test_checkpoint_round_trip(corpus, tmp_path):
    ckpt = finetune_overall(corpus, enc=TINY, tc=FAST)
    ckpt.save(tmp_path / "m.ckpt")
    loaded = Checkpoint.load(tmp_path / "m.ckpt")
    assert loaded.digest() == ckpt.digest()
    assert loaded.stage == "finetuned-overall" and loaded.history == ckpt.history
    assert Predictor(loaded).overall(corpus[:5]) == Predictor(ckpt).overall(corpus[:5])
    with pytest.raises(ConfigError):
        Checkpoint.load(tmp_path / "m.ckpt", expected_config={"dim": 16})


def test_bad_checkpoint_file(tmp_path):
    (tmp_path / "x.ckpt").write_bytes(b"not a zip")
    with pytest.raises(DataError):
        Checkpoint.load(tmp_path / "x.ckpt")


def test_stage_mismatch(corpus):
    ckpt = finetune_overall(corpus, enc=TINY, tc=FAST)
    with pytest.raises(StageMismatchError):
        Predictor(ckpt).fine_grained(corpus[:1])


def test_fine_grained_predictions_cover_intervals(corpus):
    preds = Predictor(finetune_fine_grained(corpus, enc=TINY, tc=FAST)).fine_grained(corpus)
    for rec, p in zip(corpus, preds):
        assert not p.truncated
        assert len(p.intervals) == rec.utterance.n - 1
        for a in p.intervals:
            assert sum(a.probs) == pytest.approx(1.0)
            assert int(a.rank) == int(np.argmax(a.probs)) + 1


def test_truncated_prediction(corpus):
    short = EncoderConfig(max_len=6, dim=8, layers=1, heads=2, dropout=0.0)
    ckpt = finetune_fine_grained(corpus, enc=short, tc=FAST)
    long = next(r for r in corpus if r.utterance.n > 4)
    p = Predictor(ckpt).fine_grained([long])[0]
    assert p.truncated and len(p.intervals) < p.n_breaks


def test_pretrain_then_finetune_reuses_encoder():
    refs = [tokenize(u) for u in synthesize_references(0, 20)]
    pre = pretrain_discriminator(build_pretraining_set(refs, rng=0), TINY, FAST)
    assert pre.stage == "pretrained"
    probs = Predictor(pre).corrupted_probability(refs[:4])
    assert np.all((probs > 0) & (probs < 1))
    data = synthesize_corpus(1, 20)
    fine = finetune_fine_grained(data, init=pre, tc=FAST)
    assert fine.config == pre.config
    with pytest.raises(ConfigError):
        finetune_fine_grained(data, init=pre, enc=EncoderConfig(dim=16, heads=2), tc=FAST)


def test_degenerate_pretraining_warns():
    refs = [tokenize(u) for u in synthesize_references(0, 4)]
    from phrasebreak.corruption import original_record

    with pytest.warns(DegenerateTrainingWarning):
        pretrain_discriminator([original_record(s) for s in refs], TINY, FAST)


def test_missing_labels(corpus):
    unlabeled = [LabeledUtterance(r.utterance) for r in corpus[:3]]
    with pytest.raises(MissingLabelsError):
        finetune_overall(unlabeled, enc=TINY, tc=FAST)
    with pytest.raises(MissingLabelsError):
        finetune_fine_grained(unlabeled, enc=TINY, tc=FAST)


@pytest.mark.parametrize(
    "kwargs", [{"dim": 10, "heads": 4}, {"max_len": 1}, {"scale": "huge"}, {"scale": "pretrained-adapter"}, {"dropout": 1.0}]
)
def test_encoder_config_validation(kwargs):
    with pytest.raises(ConfigError):
        EncoderConfig(**kwargs)


@pytest.mark.parametrize("kwargs", [{"epochs": 0}, {"batch_size": 0}, {"lr": 0.0}, {"optimizer": "sgd"}])
def test_train_config_validation(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs)


def test_finetune_defaults():
    assert TrainConfig.finetune_defaults("toy").lr == 1e-3
    assert TrainConfig.finetune_defaults("pretrained-adapter", epochs=5).lr == 2e-5


# --- Hugging Face adapter, built offline ----------------------------------------------


@pytest.fixture(scope="module")
def tiny_hf_model(tmp_path_factory):
    transformers = pytest.importorskip("transformers")
    path = tmp_path_factory.mktemp("hf")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + list("abcdefghijklmnopqrstuvwxyz")
    vocab += ["##" + c for c in "abcdefghijklmnopqrstuvwxyz"]
    (path / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tok = transformers.BertTokenizer(str(path / "vocab.txt"))
    tok.save_pretrained(path)
    cfg = transformers.BertConfig(
        vocab_size=len(vocab), hidden_size=16, num_hidden_layers=1, num_attention_heads=2,
        intermediate_size=32, max_position_embeddings=64,
    )
    torch.manual_seed(0)
    transformers.BertModel(cfg).save_pretrained(path)
    return str(path)


def test_hf_adapter(tiny_hf_model, corpus, tmp_path):
    from phrasebreak.neural.adapter import load_adapter

    vocab, encoder = load_adapter(tiny_hf_model)
    enc = vocab.encode(tokenize(corpus[0].utterance), 64)
    assert all(enc.ids[p] in vocab.break_ids for p in enc.break_positions)
    assert encoder.model.get_input_embeddings().num_embeddings == len(vocab)

    cfg = EncoderConfig(max_len=64, scale="pretrained-adapter", pretrained_path=tiny_hf_model)
    ckpt = finetune_fine_grained(corpus[:16], enc=cfg, tc=TrainConfig.finetune_defaults(cfg.scale, epochs=1))
    ckpt.save(tmp_path / "hf.ckpt")
    preds = Predictor(Checkpoint.load(tmp_path / "hf.ckpt")).fine_grained(corpus[:4])
    assert [len(p.intervals) for p in preds] == [r.utterance.n - 1 for r in corpus[:4]]
