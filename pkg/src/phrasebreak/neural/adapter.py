"""Seam for running the heads on a Hugging Face encoder checkpoint.

``transformers`` is imported lazily so the toy path never pays for it.
The local directory must hold both the model and its tokenizer; break
tokens are added to the tokenizer as atomic special tokens.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import torch
from torch import nn

from ..tokenizer import BREAKS, TokenSequence
from .vocab import Encoded

if TYPE_CHECKING:  # pragma: no cover
    from transformers import PreTrainedModel, PreTrainedTokenizerBase


class HFVocab:
    def __init__(self, path: str, tokenizer: "PreTrainedTokenizerBase | None" = None):
        if tokenizer is None:
            from transformers import AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(path)
        tokenizer.add_special_tokens({"additional_special_tokens": [b.value for b in BREAKS]})
        self.path = path
        self.tokenizer = tokenizer
        self.break_ids = tuple(tokenizer.convert_tokens_to_ids(b.value) for b in BREAKS)
        self.pad_id = tokenizer.pad_token_id
        self._cls = tokenizer.cls_token_id
        self._sep = tokenizer.sep_token_id
        self._cache: dict[str, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self.tokenizer)

    def word_ids(self, word: str) -> tuple[int, ...]:
        if word not in self._cache:
            pieces = self.tokenizer.tokenize(word)
            self._cache[word] = tuple(self.tokenizer.convert_tokens_to_ids(pieces))
        return self._cache[word]

    def encode(self, seq: TokenSequence, max_len: int) -> Encoded:
        ids = [self._cls]
        positions = []
        for tok in seq.tokens:
            if isinstance(tok, str):
                ids.extend(self.word_ids(tok))
            else:
                positions.append(len(ids))
                ids.append(self.break_ids[tok.index])
        if len(ids) + 1 > max_len:
            ids = ids[: max_len - 1]
        kept = [p for p in positions if p < len(ids)]
        ids.append(self._sep)
        return Encoded(tuple(ids), tuple(kept), len(positions))

    def to_dict(self) -> dict:
        return {"kind": "hf", "path": self.path}


class HFEncoder(nn.Module):
    def __init__(self, model: "PreTrainedModel", vocab_size: int | None = None):
        super().__init__()
        if vocab_size is not None and model.get_input_embeddings().num_embeddings != vocab_size:
            model.resize_token_embeddings(vocab_size)
        self.model = model
        self.dim = model.config.hidden_size
        self.pooler = nn.Linear(self.dim, self.dim)

    def forward(self, ids: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        return self.model(input_ids=ids, attention_mask=(~pad).long()).last_hidden_state

    def pool(self, hidden: torch.Tensor) -> torch.Tensor:
        return torch.tanh(self.pooler(hidden[:, 0]))


def load_adapter(path: str) -> tuple[HFVocab, HFEncoder]:
    from transformers import AutoModel

    vocab = HFVocab(path)
    model = AutoModel.from_pretrained(path)
    return vocab, HFEncoder(model, len(vocab))
