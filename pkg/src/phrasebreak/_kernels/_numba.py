"""Numba-compiled twins of :mod:`._numpy`; same signatures and results."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _lse_row(x):
    m = x.max()
    if m == -np.inf:
        return m
    s = 0.0
    for v in x:
        s += np.exp(v - m)
    return m + np.log(s)


@njit(cache=True)
def _alpha(em, n, trans, start, out):
    K = em.shape[1]
    tmp = np.empty(K)
    for j in range(K):
        out[0, j] = start[j] + em[0, j]
    for t in range(1, n):
        for j in range(K):
            for i in range(K):
                tmp[i] = out[t - 1, i] + trans[i, j]
            out[t, j] = _lse_row(tmp) + em[t, j]


@njit(cache=True)
def _beta(em, n, trans, stop, out):
    K = em.shape[1]
    tmp = np.empty(K)
    for i in range(K):
        out[n - 1, i] = stop[i]
    for t in range(n - 2, -1, -1):
        for i in range(K):
            for j in range(K):
                tmp[j] = trans[i, j] + em[t + 1, j] + out[t + 1, j]
            out[t, i] = _lse_row(tmp)


@njit(cache=True)
def log_partition(emissions, lengths, transitions, start, stop):
    B, T, K = emissions.shape
    log_z = np.empty(B)
    alpha = np.empty((T, K))
    last = np.empty(K)
    for b in range(B):
        n = lengths[b]
        _alpha(emissions[b], n, transitions, start, alpha)
        for j in range(K):
            last[j] = alpha[n - 1, j] + stop[j]
        log_z[b] = _lse_row(last)
    return log_z


@njit(cache=True)
def marginals(emissions, lengths, transitions, start, stop):
    B, T, K = emissions.shape
    log_z = np.empty(B)
    unary = np.zeros((B, T, K))
    pairwise = np.zeros((B, K, K))
    alpha = np.empty((T, K))
    beta = np.empty((T, K))
    last = np.empty(K)
    for b in range(B):
        n = lengths[b]
        em = emissions[b]
        _alpha(em, n, transitions, start, alpha)
        _beta(em, n, transitions, stop, beta)
        for j in range(K):
            last[j] = alpha[n - 1, j] + stop[j]
        z = _lse_row(last)
        log_z[b] = z
        for t in range(n):
            for j in range(K):
                unary[b, t, j] = np.exp(alpha[t, j] + beta[t, j] - z)
        for t in range(1, n):
            for i in range(K):
                for j in range(K):
                    pairwise[b, i, j] += np.exp(
                        alpha[t - 1, i] + transitions[i, j] + em[t, j] + beta[t, j] - z
                    )
    return log_z, unary, pairwise


@njit(cache=True)
def viterbi(emissions, lengths, transitions, start, stop):
    B, T, K = emissions.shape
    paths = np.full((B, T), -1, dtype=np.int64)
    scores = np.empty(B)
    delta = np.empty((T, K))
    back = np.zeros((T, K), dtype=np.int64)
    for b in range(B):
        n = lengths[b]
        em = emissions[b]
        for j in range(K):
            delta[0, j] = start[j] + em[0, j]
        for t in range(1, n):
            for j in range(K):
                best = -np.inf
                arg = 0
                for i in range(K):
                    v = delta[t - 1, i] + transitions[i, j]
                    if v > best:
                        best = v
                        arg = i
                delta[t, j] = best + em[t, j]
                back[t, j] = arg
        best = -np.inf
        y = 0
        for j in range(K):
            v = delta[n - 1, j] + stop[j]
            if v > best:
                best = v
                y = j
        scores[b] = best
        paths[b, n - 1] = y
        for t in range(n - 1, 0, -1):
            y = back[t, y]
            paths[b, t - 1] = y
    return paths, scores
