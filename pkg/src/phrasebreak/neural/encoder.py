"""Small post-LN transformer encoder and the task heads on top of it."""

from __future__ import annotations

import math

import torch
from torch import nn
from torch.nn import functional as F

from .config import EncoderConfig

STAGES = ("pretrained", "finetuned-overall", "finetuned-fine-grained")
HEAD_CLASSES = {"pretrained": 2, "finetuned-overall": 3, "finetuned-fine-grained": 3}


class SelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int, dropout: float):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        B, L, D = x.shape
        h = self.heads
        q, k, v = self.qkv(x).view(B, L, 3, h, D // h).permute(2, 0, 3, 1, 4)
        scores = q @ k.transpose(-1, -2) / math.sqrt(D // h)
        scores = scores.masked_fill(pad[:, None, None, :], torch.finfo(scores.dtype).min)
        attn = self.drop(scores.softmax(dim=-1))
        ctx = (attn @ v).transpose(1, 2).reshape(B, L, D)
        return self.out(ctx)


class Block(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.attn = SelfAttention(cfg.dim, cfg.heads, cfg.dropout)
        self.ln1 = nn.LayerNorm(cfg.dim)
        self.ff1 = nn.Linear(cfg.dim, cfg.ffn)
        self.ff2 = nn.Linear(cfg.ffn, cfg.dim)
        self.ln2 = nn.LayerNorm(cfg.dim)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        x = self.ln1(x + self.drop(self.attn(x, pad)))
        return self.ln2(x + self.drop(self.ff2(F.gelu(self.ff1(x)))))


class ToyEncoder(nn.Module):
    """Token + position embeddings, ``layers`` blocks, and a tanh pooler on position 0."""

    def __init__(self, vocab_size: int, cfg: EncoderConfig):
        super().__init__()
        self.tok = nn.Embedding(vocab_size, cfg.dim)
        self.pos = nn.Embedding(cfg.max_len, cfg.dim)
        self.ln = nn.LayerNorm(cfg.dim)
        self.drop = nn.Dropout(cfg.dropout)
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.layers))
        self.pooler = nn.Linear(cfg.dim, cfg.dim)
        self.dim = cfg.dim
        for module in self.modules():
            if isinstance(module, (nn.Linear, nn.Embedding)):
                nn.init.normal_(module.weight, std=0.02)
            if isinstance(module, nn.Linear):
                nn.init.zeros_(module.bias)

    def forward(self, ids: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.drop(self.ln(self.tok(ids) + self.pos(positions)[None]))
        for block in self.blocks:
            x = block(x, pad)
        return x

    def pool(self, hidden: torch.Tensor) -> torch.Tensor:
        return torch.tanh(self.pooler(hidden[:, 0]))


class BreakModel(nn.Module):
    """Encoder plus one stage-specific linear head.

    ``pretrained`` and ``finetuned-overall`` classify the pooled sequence;
    ``finetuned-fine-grained`` labels every position (only break positions
    are ever read).
    """

    def __init__(self, encoder: nn.Module, stage: str, dropout: float = 0.1):
        super().__init__()
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        self.stage = stage
        self.encoder = encoder
        self.drop = nn.Dropout(dropout)
        self.head = nn.Linear(encoder.dim, HEAD_CLASSES[stage])
        nn.init.normal_(self.head.weight, std=0.02)
        nn.init.zeros_(self.head.bias)

    @property
    def per_token(self) -> bool:
        return self.stage == "finetuned-fine-grained"

    def forward(self, ids: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        hidden = self.encoder(ids, pad)
        if self.per_token:
            return self.head(self.drop(hidden))
        return self.head(self.drop(self.encoder.pool(hidden)))


def masked_token_loss(
    logits: torch.Tensor,
    labels: torch.Tensor,
    mask: torch.Tensor,
    weight: torch.Tensor | None = None,
) -> torch.Tensor:
    """Cross-entropy averaged over positions where ``mask`` is true.

    Labels at masked-out positions never reach the loss: they are replaced
    before the cross-entropy is evaluated.
    """
    safe = torch.where(mask, labels, torch.zeros_like(labels))
    ce = F.cross_entropy(logits.reshape(-1, logits.shape[-1]), safe.reshape(-1), reduction="none")
    m = mask.reshape(-1).to(ce.dtype)
    if weight is not None:
        m = m * weight[safe.reshape(-1)]
    return (ce * m).sum() / m.sum().clamp_min(torch.finfo(ce.dtype).tiny)
