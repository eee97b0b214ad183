"""Pure-numpy linear-chain CRF dynamic programs, vectorized over the batch.

Shapes: ``emissions [B, T, K]`` (padded past ``lengths[b]``),
``transitions [K, K]`` with ``transitions[i, j]`` scoring ``i -> j``,
``start [K]`` and ``stop [K]``.  Every sequence must have length >= 1.
"""

from __future__ import annotations

import numpy as np


def _lse(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    return np.squeeze(m, axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def _forward(emissions, lengths, transitions, start):
    B, T, K = emissions.shape
    alpha = np.empty((B, T, K))
    alpha[:, 0] = start + emissions[:, 0]
    for t in range(1, T):
        step = _lse(alpha[:, t - 1, :, None] + transitions[None], axis=1) + emissions[:, t]
        live = (t < lengths)[:, None]
        alpha[:, t] = np.where(live, step, alpha[:, t - 1])
    return alpha


def _last(x: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    return x[np.arange(x.shape[0]), lengths - 1]


def log_partition(emissions, lengths, transitions, start, stop):
    alpha = _forward(emissions, lengths, transitions, start)
    return _lse(_last(alpha, lengths) + stop, axis=1)


def marginals(emissions, lengths, transitions, start, stop):
    """Return ``(log_z [B], unary [B, T, K], pairwise [B, K, K])``.

    ``pairwise[b]`` sums the edge marginals over all transitions in
    sequence ``b``; padded positions of ``unary`` are zero.
    """
    B, T, K = emissions.shape
    alpha = _forward(emissions, lengths, transitions, start)
    log_z = _lse(_last(alpha, lengths) + stop, axis=1)
    beta = np.zeros((B, T, K))
    beta[np.arange(B), lengths - 1] = stop
    for t in range(T - 2, -1, -1):
        step = _lse(transitions[None] + (emissions[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
        live = (t < lengths - 1)[:, None]
        beta[:, t] = np.where(live, step, beta[:, t])
    valid = (np.arange(T)[None, :] < lengths[:, None])[:, :, None]
    unary = np.where(valid, np.exp(alpha + beta - log_z[:, None, None]), 0.0)
    pairwise = np.zeros((B, K, K))
    for t in range(1, T):
        live = (t < lengths)[:, None, None]
        edge = (
            alpha[:, t - 1, :, None]
            + transitions[None]
            + (emissions[:, t] + beta[:, t])[:, None, :]
            - log_z[:, None, None]
        )
        pairwise += np.where(live, np.exp(edge), 0.0)
    return log_z, unary, pairwise


def viterbi(emissions, lengths, transitions, start, stop):
    """Return ``(paths [B, T] padded with -1, best scores [B])``."""
    B, T, K = emissions.shape
    delta = start + emissions[:, 0]
    back = np.zeros((B, T, K), dtype=np.int64)
    best_end = np.full((B, K), -np.inf)
    for t in range(1, T):
        cand = delta[:, :, None] + transitions[None]
        back[:, t] = np.argmax(cand, axis=1)
        step = np.max(cand, axis=1) + emissions[:, t]
        live = (t < lengths)[:, None]
        delta = np.where(live, step, delta)
    final = delta + stop
    best_end = np.argmax(final, axis=1)
    scores = final[np.arange(B), best_end]
    paths = np.full((B, T), -1, dtype=np.int64)
    for b in range(B):
        n = int(lengths[b])
        y = int(best_end[b])
        paths[b, n - 1] = y
        for t in range(n - 1, 0, -1):
            y = int(back[b, t, y])
            paths[b, t - 1] = y
    return paths, scores
