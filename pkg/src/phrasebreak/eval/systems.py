"""Assessor adapters: every system behind one fit/predict surface."""

from __future__ import annotations

import logging
from collections import Counter
from typing import Callable, Sequence

from ..baselines.against_tts import against_tts_intervals, against_tts_score, binarized_agreement
from ..baselines.bilstm import BiLSTMConfig, BiLSTMPredictor, bilstm_crf_fine_grained, bilstm_overall
from ..corpus.schema import LabeledUtterance, Rank
from ..llm.assess import Backoff, assess_many
from ..llm.client import ChatClient
from ..llm.prompt import build_prompt, load_rubric, select_shots
from ..neural.checkpoint import Checkpoint
from ..neural.config import EncoderConfig, TrainConfig
from ..neural.train import FineGrainedPrediction, Predictor, as_sequence, finetune_fine_grained, finetune_overall
from ..tokenizer import tokenize

logger = logging.getLogger(__name__)

GREAT = int(Rank.GREAT)


def _fill_truncated(pred: FineGrainedPrediction) -> list[int]:
    """Intervals cut off by the encoder's length limit count as Great."""
    ranks = [int(r) for r in pred.ranks]
    return ranks + [GREAT] * (pred.n_breaks - len(ranks))


class MajorityAssessor:
    """Predicts the most frequent training label everywhere."""

    trainable = True

    def __init__(self, name: str = "majority"):
        self.name = name
        self.label = GREAT

    def fit(self, train: Sequence[LabeledUtterance], task: str) -> None:
        if task == "overall":
            counts = Counter(int(r.overall_rank) for r in train)
        else:
            counts = Counter(int(x) for r in train for x in r.interval_ranks)
        # ties go to the higher rank so the choice is deterministic
        self.label = max(counts, key=lambda c: (counts[c], c))

    def predict(self, test, task, offset=()):
        if task == "overall":
            return [self.label] * len(test)
        return [[self.label] * (r.utterance.n - 1) for r in test]


class BreakBertAssessor:
    """Fine-tunes a fresh copy per fold, from ``init`` when given."""

    trainable = True

    def __init__(
        self,
        init: Checkpoint | None = None,
        enc: EncoderConfig | None = None,
        tc: TrainConfig | None = None,
        name: str | None = None,
    ):
        self.init = init
        self.enc = enc
        self.tc = tc
        self.name = name or ("break-bert" if init is not None else "bert")
        self.checkpoints: list[Checkpoint] = []
        self._predictor: Predictor | None = None

    def fit(self, train, task):
        enc = None if self.init is not None else self.enc
        op = finetune_overall if task == "overall" else finetune_fine_grained
        ckpt = op(train, init=self.init, enc=enc, tc=self.tc)
        self.checkpoints.append(ckpt)
        self._predictor = Predictor(ckpt)

    def predict(self, test, task, offset=()):
        if task == "overall":
            return [int(r) for r, _ in self._predictor.overall(test)]
        return [_fill_truncated(p) for p in self._predictor.fine_grained(test)]


class BiLSTMAssessor:
    trainable = True

    def __init__(self, cfg: BiLSTMConfig | None = None, tc: TrainConfig | None = None, name: str = "bilstm"):
        self.cfg = cfg
        self.tc = tc
        self.name = name
        self._predictor: BiLSTMPredictor | None = None

    def fit(self, train, task):
        op = bilstm_overall if task == "overall" else bilstm_crf_fine_grained
        self._predictor = BiLSTMPredictor(op(train, self.cfg, self.tc))

    def predict(self, test, task, offset=()):
        if task == "overall":
            return [int(r) for r, _ in self._predictor.overall(test)]
        return [_fill_truncated(p) for p in self._predictor.fine_grained(test)]


class AgainstTTSAssessor:
    """Training-free; needs a reference source with ``reference_for(words)``."""

    trainable = False

    def __init__(self, references, similarity: Callable = binarized_agreement, name: str = "against-tts"):
        self.references = references
        self.similarity = similarity
        self.name = name

    def fit(self, train, task):
        pass

    def predict(self, test, task, offset=()):
        out = []
        for r in test:
            seq = tokenize(r.utterance)
            ref = self.references.reference_for(seq.words)
            if task == "overall":
                out.append(int(against_tts_score(seq, ref, self.similarity)[1]))
            else:
                out.append([int(x) for x in against_tts_intervals(seq, ref)])
        return out


class LlmAssessor:
    """Prompted assessment, zero-shot or with shots drawn from the training fold.

    Fine-grained labels: intervals named in the verdict's position set are
    Fair, all others Great, so the collapsed binary view is exact.  An
    answer that never parses falls back to Great and is noted.
    """

    def __init__(
        self,
        client: ChatClient,
        shots: int = 0,
        seed: int = 0,
        retries: int = 2,
        max_in_flight: int = 4,
        rubric: str | None = None,
        backoff: Backoff = Backoff(),
        name: str | None = None,
    ):
        self.client = client
        self.shots = shots
        self.seed = seed
        self.retries = retries
        self.max_in_flight = max_in_flight
        self.rubric = rubric if rubric is not None else load_rubric()
        self.backoff = backoff
        self.name = name or f"llm-{shots}shot"
        self.trainable = shots > 0
        self.pool: list[LabeledUtterance] = []
        self.notes: list[str] = []
        self.verdicts: dict[str, object] = {}

    def fit(self, train, task):
        self.pool = list(train)

    def bundles(self, test, offset):
        out = []
        for r, idx in zip(test, offset):
            shots = select_shots(self.pool, self.shots, self.seed, idx) if self.shots else ()
            out.append(build_prompt(as_sequence(r), shots, self.rubric, faithful=False))
        return out

    def predict(self, test, task, offset=()):
        offset = list(offset) or list(range(len(test)))
        results = assess_many(
            self.client, self.bundles(test, offset), self.retries, self.max_in_flight, self.backoff
        )
        out = []
        for r, res in zip(test, results):
            n = r.utterance.n - 1
            self.verdicts[r.utterance_id] = res.verdict
            if not res.ok:
                self.notes.append(f"{r.utterance_id}: unparseable answer, scored as Great")
                out.append(GREAT if task == "overall" else [GREAT] * n)
                continue
            if task == "overall":
                out.append(int(res.verdict.rank))
            else:
                flagged = set(res.verdict.indices)
                out.append([int(Rank.FAIR) if i in flagged else GREAT for i in range(n)])
        return out
