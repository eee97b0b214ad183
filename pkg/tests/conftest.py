import numpy as np
import pytest
import torch

from phrasebreak.corpus import AlignedUtterance, AlignedWord

torch.set_num_threads(1)


def utterance_from_gaps(words, gaps, uid="utt", word_dur=0.3):
    """Build an aligned utterance whose inter-word gaps are exactly ``gaps``."""
    assert len(gaps) == len(words) - 1
    out, t = [], 0.0
    for i, w in enumerate(words):
        out.append(AlignedWord(w, t, t + word_dur))
        t += word_dur
        if i < len(gaps):
            t += gaps[i]
    return AlignedUtterance(uid, tuple(out))


def max_gradient_error(model, loss_fn, eps=1e-5):
    """Worst relative gap between autograd and central differences over every parameter."""
    model.zero_grad()
    loss_fn().backward()
    worst = 0.0
    with torch.no_grad():
        for name, p in model.named_parameters():
            # unused parameters (the pooler under a per-token head) have no grad
            grad = torch.zeros_like(p) if p.grad is None else p.grad
            analytic = grad.detach().clone().reshape(-1)
            flat = p.data.reshape(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                up = loss_fn().item()
                flat[i] = orig - eps
                down = loss_fn().item()
                flat[i] = orig
                numeric = (up - down) / (2 * eps)
                a = analytic[i].item()
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
                worst = max(worst, err)
    return worst


@pytest.fixture
def make_utterance():
    return utterance_from_gaps


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
