"""CRF kernels against exhaustive path enumeration, and numba against numpy."""

import itertools

import numpy as np
import pytest

from phrasebreak import _kernels
from phrasebreak._kernels import _numba, _numpy

BACKENDS = [_numpy, _numba]


def score(em, tr, start, stop, path):
    s = start[path[0]] + em[0, path[0]] + stop[path[-1]]
    for t in range(1, len(path)):
        s += tr[path[t - 1], path[t]] + em[t, path[t]]
    return s


def enumerate_paths(em, n, tr, start, stop):
    k = em.shape[1]
    paths = list(itertools.product(range(k), repeat=n))
    scores = np.array([score(em, tr, start, stop, p) for p in paths])
    return paths, scores


def random_instance(rng, batch=4, max_len=5, k=3, scale=2.0):
    lengths = rng.integers(1, max_len + 1, batch)
    em = rng.normal(scale=scale, size=(batch, max_len, k))
    return em, lengths, rng.normal(size=(k, k)), rng.normal(size=k), rng.normal(size=k)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_against_enumeration(impl, rng):
    for _ in range(30):
        em, ln, tr, st, sp = random_instance(rng)
        log_z = impl.log_partition(em, ln, tr, st, sp)
        paths, scores = impl.viterbi(em, ln, tr, st, sp)
        lz2, unary, pair = impl.marginals(em, ln, tr, st, sp)
        np.testing.assert_allclose(lz2, log_z, rtol=1e-12)
        for b, n in enumerate(ln):
            all_paths, all_scores = enumerate_paths(em[b], n, tr, st, sp)
            ref = np.logaddexp.reduce(all_scores)
            assert abs(log_z[b] - ref) <= 1e-8 * abs(ref)
            best = int(np.argmax(all_scores))
            assert list(paths[b, :n]) == list(all_paths[best])
            assert np.all(paths[b, n:] == -1)
            assert scores[b] == pytest.approx(all_scores[best], rel=1e-12)
            probs = np.exp(all_scores - ref)
            expect_unary = np.zeros((n, em.shape[2]))
            for p, w in zip(all_paths, probs):
                expect_unary[np.arange(n), p] += w
            np.testing.assert_allclose(unary[b, :n], expect_unary, atol=1e-10)
            assert np.all(unary[b, n:] == 0)
            assert pair[b].sum() == pytest.approx(n - 1, abs=1e-10)


def test_backends_agree(rng):
    em, ln, tr, st, sp = random_instance(rng, batch=64, max_len=30, scale=5.0)
    for name in ("log_partition", "marginals", "viterbi"):
        a, b = getattr(_numpy, name)(em, ln, tr, st, sp), getattr(_numba, name)(em, ln, tr, st, sp)
        for x, y in zip(a if isinstance(a, tuple) else [a], b if isinstance(b, tuple) else [b]):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


def test_large_scores_stay_finite(rng):
    em, ln, tr, st, sp = random_instance(rng, scale=1e3)
    assert np.all(np.isfinite(_kernels.crf_log_partition(em, ln, tr, st, sp)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"emissions": np.zeros((2, 3))},
        {"lengths": np.array([0, 1])},
        {"lengths": np.array([4, 1])},
        {"transitions": np.zeros((2, 2))},
    ],
)
def test_input_validation(kwargs):
    args = {
        "emissions": np.zeros((2, 3, 3)),
        "lengths": np.array([3, 1]),
        "transitions": np.zeros((3, 3)),
        "start": np.zeros(3),
        "stop": np.zeros(3),
    }
    args.update(kwargs)
    with pytest.raises(ValueError):
        _kernels.crf_log_partition(**args)


def test_backend_flag(monkeypatch):
    import importlib

    monkeypatch.setenv("PHRASEBREAK_NUMBA", "0")
    try:
        assert importlib.reload(_kernels).BACKEND == "numpy"
        monkeypatch.setenv("PHRASEBREAK_NUMBA", "1")
        assert importlib.reload(_kernels).BACKEND == "numba"
    finally:
        monkeypatch.delenv("PHRASEBREAK_NUMBA")
        importlib.reload(_kernels)
