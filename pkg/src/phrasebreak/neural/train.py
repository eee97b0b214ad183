"""Pre-training, fine-tuning and inference for the break-aware encoder."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import torch
from torch.nn import functional as F

from ..corpus.schema import AlignedUtterance, LabeledUtterance, Rank
from ..corruption import CorruptionRecord, Label
from ..errors import ConfigError, MissingLabelsError, StageMismatchError
from ..tokenizer import TokenSequence, tokenize
from .checkpoint import Checkpoint
from .config import EncoderConfig, TrainConfig
from .encoder import BreakModel, ToyEncoder, masked_token_loss
from .vocab import Encoded, Vocab

logger = logging.getLogger(__name__)

KIND = "break-bert"

Item = Union[LabeledUtterance, AlignedUtterance, TokenSequence]


class DegenerateTrainingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IntervalAssessment:
    index: int
    rank: Rank
    probs: tuple[float, float, float]


@dataclass(frozen=True)
class FineGrainedPrediction:
    intervals: tuple[IntervalAssessment, ...]
    n_breaks: int

    @property
    def truncated(self) -> bool:
        return len(self.intervals) < self.n_breaks

    @property
    def ranks(self) -> list[Rank]:
        return [a.rank for a in self.intervals]


def as_sequence(item: Item) -> TokenSequence:
    if isinstance(item, TokenSequence):
        return item
    if isinstance(item, LabeledUtterance):
        item = item.utterance
    return tokenize(item)


# --- model construction --------------------------------------------------------


def _make_vocab(enc: EncoderConfig, seqs: Sequence[TokenSequence]):
    if enc.scale == "toy":
        return Vocab.from_sequences(seqs)
    from .adapter import HFVocab

    return HFVocab(enc.pretrained_path)


def _vocab_from_dict(d: dict):
    if d["kind"] == "wordpiece":
        return Vocab.from_dict(d)
    from .adapter import HFVocab

    return HFVocab(d["path"])


def _make_encoder(enc: EncoderConfig, vocab_size: int):
    if enc.scale == "toy":
        return ToyEncoder(vocab_size, enc)
    from transformers import AutoModel

    from .adapter import HFEncoder

    return HFEncoder(AutoModel.from_pretrained(enc.pretrained_path), vocab_size)


def build_model(enc: EncoderConfig, vocab_size: int, stage: str, seed: int = 0) -> BreakModel:
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return BreakModel(_make_encoder(enc, vocab_size), stage, enc.dropout)


def _state_to_numpy(model: torch.nn.Module) -> dict[str, np.ndarray]:
    return {k: v.detach().cpu().numpy().copy() for k, v in model.state_dict().items()}


def to_checkpoint(
    model: BreakModel, vocab, enc: EncoderConfig, tc: TrainConfig | None, history=None
) -> Checkpoint:
    return Checkpoint(
        kind=KIND,
        stage=model.stage,
        config=enc.to_dict(),
        vocab=vocab.to_dict(),
        state=_state_to_numpy(model),
        train_config={} if tc is None else tc.to_dict(),
        history=list(history or []),
    )


def load_model(ckpt: Checkpoint) -> tuple[BreakModel, object, EncoderConfig]:
    if ckpt.kind != KIND:
        raise StageMismatchError(f"checkpoint holds a {ckpt.kind!r} model, not {KIND!r}")
    enc = EncoderConfig.from_dict(ckpt.config)
    vocab = _vocab_from_dict(ckpt.vocab)
    model = BreakModel(_make_encoder(enc, len(vocab)), ckpt.stage, enc.dropout)
    model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in ckpt.state.items()})
    model.eval()
    return model, vocab, enc


# --- batching -------------------------------------------------------------------


def collate(encs: Sequence[Encoded], pad_id: int) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(e.ids) for e in encs)
    ids = torch.full((len(encs), width), pad_id, dtype=torch.long)
    for i, e in enumerate(encs):
        ids[i, : len(e.ids)] = torch.tensor(e.ids, dtype=torch.long)
    pad = torch.ones((len(encs), width), dtype=torch.bool)
    for i, e in enumerate(encs):
        pad[i, : len(e.ids)] = False
    return ids, pad


def _token_targets(encs: Sequence[Encoded], labels: Sequence[Sequence[int]], width: int):
    y = torch.zeros((len(encs), width), dtype=torch.long)
    mask = torch.zeros((len(encs), width), dtype=torch.bool)
    for i, (e, lab) in enumerate(zip(encs, labels)):
        for pos, value in zip(e.break_positions, lab):
            y[i, pos] = value
            mask[i, pos] = True
    return y, mask


def _class_weights(labels: Sequence[int], n_classes: int) -> torch.Tensor:
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes).astype(float)
    w = np.where(counts > 0, counts.sum() / (n_classes * np.maximum(counts, 1)), 0.0)
    return torch.tensor(w, dtype=torch.float32)


def batch_loss(model: BreakModel, encs, targets, pad_id: int, weight=None) -> torch.Tensor:
    ids, pad = collate(encs, pad_id)
    logits = model(ids, pad)
    if model.per_token:
        y, mask = _token_targets(encs, targets, ids.shape[1])
        return masked_token_loss(logits, y, mask, weight)
    y = torch.tensor(list(targets), dtype=torch.long)
    return F.cross_entropy(logits, y, weight=weight)


def _fit(model: BreakModel, encs, targets, pad_id: int, tc: TrainConfig) -> list[dict]:
    if tc.class_weights:
        flat = [v for t in targets for v in t] if model.per_token else list(targets)
        weight = _class_weights(flat, model.head.out_features)
    else:
        weight = None
    opt = torch.optim.Adam(model.parameters(), lr=tc.lr, weight_decay=tc.weight_decay)
    order_rng = np.random.default_rng(tc.seed)
    history = []
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(tc.seed)
        model.train()
        for epoch in range(tc.epochs):
            perm = order_rng.permutation(len(encs))
            total, seen = 0.0, 0
            for start in range(0, len(perm), tc.batch_size):
                idx = perm[start : start + tc.batch_size]
                loss = batch_loss(model, [encs[i] for i in idx], [targets[i] for i in idx], pad_id, weight)
                opt.zero_grad()
                loss.backward()
                opt.step()
                total += float(loss.detach()) * len(idx)
                seen += len(idx)
            history.append({"epoch": epoch + 1, "loss": total / seen})
            logger.info("%s epoch %d loss %.5f", model.stage, epoch + 1, total / seen)
    model.eval()
    return history


# --- public training ops -----------------------------------------------------------


def pretrain_discriminator(
    records: Sequence[CorruptionRecord], enc: EncoderConfig | None = None, tc: TrainConfig | None = None
) -> Checkpoint:
    """Train a binary original-vs-corrupted classifier on the pooled representation."""
    enc = enc or EncoderConfig()
    tc = tc or TrainConfig()
    if not records:
        raise ValueError("no pre-training records")
    labels = [int(r.label is Label.CORRUPTED) for r in records]
    if len(set(labels)) < 2:
        warnings.warn(
            "all pre-training records carry the same label; the discriminator will be degenerate",
            DegenerateTrainingWarning,
            stacklevel=2,
        )
    seqs = [r.sequence for r in records]
    vocab = _make_vocab(enc, seqs)
    encs = [vocab.encode(s, enc.max_len) for s in seqs]
    model = build_model(enc, len(vocab), "pretrained", tc.seed)
    history = _fit(model, encs, labels, vocab.pad_id, tc)
    return to_checkpoint(model, vocab, enc, tc, history)


def _init_from(init: Checkpoint | None, enc: EncoderConfig | None, stage: str, seqs, seed: int):
    if init is None:
        enc = enc or EncoderConfig()
        vocab = _make_vocab(enc, seqs)
        return build_model(enc, len(vocab), stage, seed), vocab, enc
    base, vocab, init_enc = load_model(init)
    if enc is not None and enc.architecture() != init_enc.architecture():
        raise ConfigError(
            "encoder config differs from the initial checkpoint: "
            f"{enc.architecture()} vs {init_enc.architecture()}"
        )
    enc = enc or init_enc
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = BreakModel(base.encoder, stage, enc.dropout)
    return model, vocab, enc


def finetune_overall(
    data: Sequence[LabeledUtterance],
    init: Checkpoint | None = None,
    enc: EncoderConfig | None = None,
    tc: TrainConfig | None = None,
) -> Checkpoint:
    """Three-way overall-rank classifier; reuses ``init``'s encoder when given."""
    missing = [r.utterance_id for r in data if r.overall_rank is None]
    if missing:
        raise MissingLabelsError("overall_rank", missing)
    if not data:
        raise ValueError("no fine-tuning records")
    tc = tc or TrainConfig.finetune_defaults((enc or EncoderConfig()).scale)
    seqs = [as_sequence(r) for r in data]
    model, vocab, enc = _init_from(init, enc, "finetuned-overall", seqs, tc.seed)
    encs = [vocab.encode(s, enc.max_len) for s in seqs]
    targets = [int(r.overall_rank) - 1 for r in data]
    history = _fit(model, encs, targets, vocab.pad_id, tc)
    return to_checkpoint(model, vocab, enc, tc, history)


def finetune_fine_grained(
    data: Sequence[LabeledUtterance],
    init: Checkpoint | None = None,
    enc: EncoderConfig | None = None,
    tc: TrainConfig | None = None,
) -> Checkpoint:
    """Per-interval rank labeler; only break positions contribute to the loss."""
    missing = [r.utterance_id for r in data if r.interval_ranks is None]
    if missing:
        raise MissingLabelsError("interval_ranks", missing)
    if not data:
        raise ValueError("no fine-tuning records")
    tc = tc or TrainConfig.finetune_defaults((enc or EncoderConfig()).scale)
    seqs = [as_sequence(r) for r in data]
    model, vocab, enc = _init_from(init, enc, "finetuned-fine-grained", seqs, tc.seed)
    encs = [vocab.encode(s, enc.max_len) for s in seqs]
    targets = [[int(x) - 1 for x in r.interval_ranks] for r in data]
    history = _fit(model, encs, targets, vocab.pad_id, tc)
    return to_checkpoint(model, vocab, enc, tc, history)


# --- inference ----------------------------------------------------------------------


class Predictor:
    """Inference over an immutable checkpoint; safe to share across threads."""

    def __init__(self, ckpt: Checkpoint, batch_size: int = 64):
        self.stage = ckpt.stage
        self.model, self.vocab, self.enc = load_model(ckpt)
        self.batch_size = batch_size

    def _require(self, stage: str) -> None:
        if self.stage != stage:
            raise StageMismatchError(f"checkpoint stage is {self.stage!r}, this call needs {stage!r}")

    def _logits(self, encs: Sequence[Encoded]) -> list[np.ndarray]:
        out = []
        with torch.no_grad():
            for start in range(0, len(encs), self.batch_size):
                chunk = encs[start : start + self.batch_size]
                ids, pad = collate(chunk, self.vocab.pad_id)
                logits = self.model(ids, pad).numpy().astype(np.float64)
                out.extend(logits[i] for i in range(len(chunk)))
        return out

    def _encode(self, items: Sequence[Item]) -> list[Encoded]:
        return [self.vocab.encode(as_sequence(x), self.enc.max_len) for x in items]

    def corrupted_probability(self, items: Sequence[Item]) -> np.ndarray:
        self._require("pretrained")
        logits = self._logits(self._encode(items))
        return np.array([_softmax(l)[1] for l in logits])

    def overall(self, items: Sequence[Item]) -> list[tuple[Rank, tuple[float, float, float]]]:
        self._require("finetuned-overall")
        out = []
        for logits in self._logits(self._encode(items)):
            p = _softmax(logits)
            out.append((Rank(int(np.argmax(p)) + 1), tuple(float(v) for v in p)))
        return out

    def fine_grained(self, items: Sequence[Item]) -> list[FineGrainedPrediction]:
        self._require("finetuned-fine-grained")
        encs = self._encode(items)
        out = []
        for e, logits in zip(encs, self._logits(encs)):
            intervals = []
            for i, pos in enumerate(e.break_positions):
                p = _softmax(logits[pos])
                intervals.append(
                    IntervalAssessment(i, Rank(int(np.argmax(p)) + 1), tuple(float(v) for v in p))
                )
            out.append(FineGrainedPrediction(tuple(intervals), e.n_breaks))
        return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


def predict_overall(ckpt: Checkpoint, item: Item) -> tuple[Rank, tuple[float, float, float]]:
    return Predictor(ckpt).overall([item])[0]


def predict_fine_grained(ckpt: Checkpoint, item: Item) -> FineGrainedPrediction:
    return Predictor(ckpt).fine_grained([item])[0]


def discriminator_scores(ckpt: Checkpoint, records: Sequence[CorruptionRecord]) -> dict[str, float]:
    """Accuracy and F1 (corrupted = positive) of a pre-trained discriminator."""
    p = Predictor(ckpt).corrupted_probability([r.sequence for r in records])
    pred = p > 0.5
    gold = np.array([r.label is Label.CORRUPTED for r in records])
    tp = float(np.sum(pred & gold))
    precision = tp / max(pred.sum(), 1)
    recall = tp / max(gold.sum(), 1)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return {"accuracy": float(np.mean(pred == gold)), "f1": f1}
