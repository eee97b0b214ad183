"""Bi-LSTM baselines: a linear head for overall rank, a CRF for intervals.

Both read the same word-piece/break-token ids as the transformer models and
return the same prediction types, so evaluation treats every system alike.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from ..corpus.schema import LabeledUtterance, Rank
from ..errors import ConfigError, MissingLabelsError, StageMismatchError
from ..neural.checkpoint import Checkpoint
from ..neural.config import TrainConfig
from ..neural.train import FineGrainedPrediction, IntervalAssessment, Item, as_sequence, collate
from ..neural.vocab import Encoded, Vocab
from .crf import CRF, N_LABELS

KIND = "bilstm"


@dataclass(frozen=True)
class BiLSTMConfig:
    hidden: int = 1024
    embed_dim: int = 128
    layers: int = 1
    dropout: float = 0.1
    max_len: int = 128

    def __post_init__(self) -> None:
        if min(self.hidden, self.embed_dim, self.layers) < 1:
            raise ConfigError("hidden, embed_dim and layers must be positive")
        if self.max_len < 2:
            raise ConfigError("max_len must be >= 2")

    def to_dict(self) -> dict:
        return asdict(self)


class BiLSTMEncoder(nn.Module):
    def __init__(self, vocab_size: int, cfg: BiLSTMConfig):
        super().__init__()
        self.emb = nn.Embedding(vocab_size, cfg.embed_dim, padding_idx=0)
        self.lstm = nn.LSTM(
            cfg.embed_dim,
            cfg.hidden,
            num_layers=cfg.layers,
            bidirectional=True,
            batch_first=True,
            dropout=cfg.dropout if cfg.layers > 1 else 0.0,
        )
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, ids: torch.Tensor, pad: torch.Tensor):
        lengths = (~pad).sum(1)
        packed = pack_padded_sequence(self.emb(ids), lengths, batch_first=True, enforce_sorted=False)
        out, (h_n, _) = self.lstm(packed)
        states, _ = pad_packed_sequence(out, batch_first=True, total_length=ids.shape[1])
        final = torch.cat([h_n[-2], h_n[-1]], dim=-1)
        return self.drop(states), self.drop(final)


class BiLSTMClassifier(nn.Module):
    stage = "finetuned-overall"

    def __init__(self, vocab_size: int, cfg: BiLSTMConfig):
        super().__init__()
        self.encoder = BiLSTMEncoder(vocab_size, cfg)
        self.head = nn.Linear(2 * cfg.hidden, N_LABELS)

    def forward(self, ids, pad):
        _, final = self.encoder(ids, pad)
        return self.head(final)


class BiLSTMCRFTagger(nn.Module):
    stage = "finetuned-fine-grained"

    def __init__(self, vocab_size: int, cfg: BiLSTMConfig):
        super().__init__()
        self.encoder = BiLSTMEncoder(vocab_size, cfg)
        self.emit = nn.Linear(2 * cfg.hidden, N_LABELS)
        self.crf = CRF(N_LABELS)

    def emissions(self, ids, pad, encs: Sequence[Encoded]):
        """Emission scores at break positions, padded to ``[B, T_breaks, 3]``."""
        states, _ = self.encoder(ids, pad)
        scores = self.emit(states)
        lengths = torch.tensor([len(e.break_positions) for e in encs], dtype=torch.long)
        width = max(int(lengths.max()), 1)
        out = scores.new_zeros((len(encs), width, N_LABELS))
        for i, e in enumerate(encs):
            if e.break_positions:
                out[i, : len(e.break_positions)] = scores[i, list(e.break_positions)]
        return out, lengths


_MODELS = {"finetuned-overall": BiLSTMClassifier, "finetuned-fine-grained": BiLSTMCRFTagger}


def _loss(model, encs, targets, pad_id):
    ids, pad = collate(encs, pad_id)
    if isinstance(model, BiLSTMClassifier):
        return F.cross_entropy(model(ids, pad), torch.tensor(list(targets), dtype=torch.long))
    em, lengths = model.emissions(ids, pad, encs)
    keep = lengths > 0
    tags = torch.zeros(em.shape[:2], dtype=torch.long)
    for i, (e, t) in enumerate(zip(encs, targets)):
        n = len(e.break_positions)
        tags[i, :n] = torch.tensor(t[:n], dtype=torch.long)
    return model.crf.nll(em[keep], lengths[keep], tags[keep])


def _train(stage: str, targets, seqs, cfg: BiLSTMConfig, tc: TrainConfig) -> Checkpoint:
    vocab = Vocab.from_sequences(seqs)
    encs = [vocab.encode(s, cfg.max_len) for s in seqs]
    if stage == "finetuned-fine-grained":
        usable = [i for i, e in enumerate(encs) if e.break_positions]
        encs = [encs[i] for i in usable]
        targets = [targets[i] for i in usable]
    history = []
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(tc.seed)
        model = _MODELS[stage](len(vocab), cfg)
        opt = torch.optim.Adam(model.parameters(), lr=tc.lr, weight_decay=tc.weight_decay)
        order = np.random.default_rng(tc.seed)
        model.train()
        for epoch in range(tc.epochs):
            perm = order.permutation(len(encs))
            total = 0.0
            for start in range(0, len(perm), tc.batch_size):
                idx = perm[start : start + tc.batch_size]
                loss = _loss(model, [encs[i] for i in idx], [targets[i] for i in idx], vocab.pad_id)
                opt.zero_grad()
                loss.backward()
                opt.step()
                total += float(loss.detach()) * len(idx)
            history.append({"epoch": epoch + 1, "loss": total / max(len(perm), 1)})
    model.eval()
    return Checkpoint(
        kind=KIND,
        stage=stage,
        config=cfg.to_dict(),
        vocab=vocab.to_dict(),
        state={k: v.detach().numpy().copy() for k, v in model.state_dict().items()},
        train_config=tc.to_dict(),
        history=history,
    )


def _default_tc(tc: TrainConfig | None) -> TrainConfig:
    return tc or TrainConfig(lr=1e-3, epochs=10, batch_size=32)


def bilstm_overall(
    data: Sequence[LabeledUtterance], cfg: BiLSTMConfig | None = None, tc: TrainConfig | None = None
) -> Checkpoint:
    """Bi-LSTM + linear layer over the concatenated final states."""
    missing = [r.utterance_id for r in data if r.overall_rank is None]
    if missing:
        raise MissingLabelsError("overall_rank", missing)
    seqs = [as_sequence(r) for r in data]
    targets = [int(r.overall_rank) - 1 for r in data]
    return _train("finetuned-overall", targets, seqs, cfg or BiLSTMConfig(), _default_tc(tc))


def bilstm_crf_fine_grained(
    data: Sequence[LabeledUtterance], cfg: BiLSTMConfig | None = None, tc: TrainConfig | None = None
) -> Checkpoint:
    """Bi-LSTM emissions at break positions decoded by a linear-chain CRF."""
    missing = [r.utterance_id for r in data if r.interval_ranks is None]
    if missing:
        raise MissingLabelsError("interval_ranks", missing)
    seqs = [as_sequence(r) for r in data]
    targets = [[int(x) - 1 for x in r.interval_ranks] for r in data]
    return _train("finetuned-fine-grained", targets, seqs, cfg or BiLSTMConfig(), _default_tc(tc))


class BiLSTMPredictor:
    """Same surface as :class:`phrasebreak.neural.Predictor`.

    Interval ranks are the Viterbi path; the reported probabilities are the
    CRF's per-interval marginals, so a rank can differ from the marginal
    argmax when the joint optimum disagrees with the local one.
    """

    def __init__(self, ckpt: Checkpoint, batch_size: int = 64):
        if ckpt.kind != KIND:
            raise StageMismatchError(f"checkpoint holds a {ckpt.kind!r} model, not {KIND!r}")
        self.stage = ckpt.stage
        self.cfg = BiLSTMConfig(**ckpt.config)
        self.vocab = Vocab.from_dict(ckpt.vocab)
        self.model = _MODELS[ckpt.stage](len(self.vocab), self.cfg)
        self.model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in ckpt.state.items()})
        self.model.eval()
        self.batch_size = batch_size

    def _require(self, stage: str) -> None:
        if self.stage != stage:
            raise StageMismatchError(f"checkpoint stage is {self.stage!r}, this call needs {stage!r}")

    def _chunks(self, items):
        encs = [self.vocab.encode(as_sequence(x), self.cfg.max_len) for x in items]
        for start in range(0, len(encs), self.batch_size):
            yield encs[start : start + self.batch_size]

    def overall(self, items: Sequence[Item]) -> list[tuple[Rank, tuple[float, float, float]]]:
        self._require("finetuned-overall")
        out = []
        with torch.no_grad():
            for chunk in self._chunks(items):
                ids, pad = collate(chunk, self.vocab.pad_id)
                probs = torch.softmax(self.model(ids, pad).double(), dim=-1).numpy()
                for p in probs:
                    out.append((Rank(int(np.argmax(p)) + 1), tuple(float(v) for v in p)))
        return out

    def fine_grained(self, items: Sequence[Item]) -> list[FineGrainedPrediction]:
        self._require("finetuned-fine-grained")
        out = []
        with torch.no_grad():
            for chunk in self._chunks(items):
                ids, pad = collate(chunk, self.vocab.pad_id)
                em, lengths = self.model.emissions(ids, pad, chunk)
                safe = lengths.clamp_min(1)
                paths = self.model.crf.decode(em, safe)
                margs = self.model.crf.marginals(em, safe)
                for e, n, path, marg in zip(chunk, lengths.tolist(), paths, margs):
                    intervals = tuple(
                        IntervalAssessment(i, Rank(path[i] + 1), tuple(float(v) for v in marg[i]))
                        for i in range(n)
                    )
                    out.append(FineGrainedPrediction(intervals, e.n_breaks))
        return out
