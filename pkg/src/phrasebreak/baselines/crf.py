"""Linear-chain CRF over break positions.

The log-partition and its gradient come from the compiled forward-backward
kernels: d log Z / d emission[t, k] is the unary marginal, and the
transition/start/stop gradients are expected edge/first/last-label counts.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .._kernels import crf_marginals, crf_viterbi

N_LABELS = 3


class _LogPartition(torch.autograd.Function):
    @staticmethod
    def forward(ctx, emissions, transitions, start, stop, lengths):
        log_z, unary, pairwise = crf_marginals(
            emissions.detach().cpu().double().numpy(),
            lengths.cpu().numpy(),
            transitions.detach().cpu().double().numpy(),
            start.detach().cpu().double().numpy(),
            stop.detach().cpu().double().numpy(),
        )
        B = emissions.shape[0]
        ln = lengths.cpu().numpy()
        first = unary[:, 0]
        last = unary[np.arange(B), ln - 1]
        dt = emissions.dtype
        ctx.save_for_backward(
            torch.from_numpy(unary).to(dt),
            torch.from_numpy(pairwise).to(dt),
            torch.from_numpy(first).to(dt),
            torch.from_numpy(last).to(dt),
        )
        return torch.from_numpy(log_z).to(dt)

    @staticmethod
    def backward(ctx, grad):
        unary, pairwise, first, last = ctx.saved_tensors
        g = grad[:, None]
        return (
            unary * grad[:, None, None],
            (pairwise * grad[:, None, None]).sum(0),
            (first * g).sum(0),
            (last * g).sum(0),
            None,
        )


def log_partition(emissions, transitions, start, stop, lengths) -> torch.Tensor:
    """``log Z`` per sequence, differentiable in every score tensor."""
    return _LogPartition.apply(emissions, transitions, start, stop, lengths)


def path_score(emissions, transitions, start, stop, lengths, tags) -> torch.Tensor:
    """Unnormalized score of ``tags [B, T]`` (entries past ``lengths`` ignored)."""
    B, T, _ = emissions.shape
    live = torch.arange(T)[None, :] < lengths[:, None]
    safe = torch.where(live, tags, torch.zeros_like(tags))
    emit = emissions.gather(2, safe[:, :, None]).squeeze(2)
    score = (emit * live).sum(1) + start[safe[:, 0]]
    if T > 1:
        trans = transitions[safe[:, :-1], safe[:, 1:]]
        score = score + (trans * live[:, 1:]).sum(1)
    last = safe[torch.arange(B), lengths - 1]
    return score + stop[last]


class CRF(nn.Module):
    """Transitions start at zero so the first updates are emission-driven."""

    def __init__(self, n_labels: int = N_LABELS):
        super().__init__()
        self.n_labels = n_labels
        self.transitions = nn.Parameter(torch.zeros(n_labels, n_labels))
        self.start = nn.Parameter(torch.zeros(n_labels))
        self.stop = nn.Parameter(torch.zeros(n_labels))

    def nll(self, emissions, lengths, tags) -> torch.Tensor:
        """Mean negative log-likelihood of the gold tag paths."""
        log_z = log_partition(emissions, self.transitions, self.start, self.stop, lengths)
        gold = path_score(emissions, self.transitions, self.start, self.stop, lengths, tags)
        return (log_z - gold).mean()

    def _np(self):
        return (
            self.transitions.detach().double().numpy(),
            self.start.detach().double().numpy(),
            self.stop.detach().double().numpy(),
        )

    def decode(self, emissions, lengths) -> list[list[int]]:
        tr, st, sp = self._np()
        paths, _ = crf_viterbi(emissions.detach().double().numpy(), lengths.numpy(), tr, st, sp)
        return [p[: int(n)].tolist() for p, n in zip(paths, lengths)]

    def marginals(self, emissions, lengths) -> list[np.ndarray]:
        tr, st, sp = self._np()
        _, unary, _ = crf_marginals(emissions.detach().double().numpy(), lengths.numpy(), tr, st, sp)
        return [u[: int(n)] for u, n in zip(unary, lengths)]

