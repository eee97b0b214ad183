"""Hot CRF kernels with a numba path and a pure-numpy fallback.

Set ``PHRASEBREAK_NUMBA=0`` to force the numpy implementation; numba is
also skipped automatically when it cannot be imported.  ``BACKEND`` names
the active path.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import _numpy

logger = logging.getLogger(__name__)


def _numba_requested() -> bool:
    return os.environ.get("PHRASEBREAK_NUMBA", "1").strip().lower() not in {"0", "false", "no", "off"}


try:
    from . import _numba
except ImportError:  # pragma: no cover - numba missing
    _numba = None

if _numba is not None and _numba_requested():
    _impl = _numba
    BACKEND = "numba"
else:
    _impl = _numpy
    BACKEND = "numpy"
    if _numba is None:
        logger.debug("numba unavailable; using numpy CRF kernels")


def _prep(emissions, lengths, transitions, start, stop):
    em = np.ascontiguousarray(emissions, dtype=np.float64)
    if em.ndim != 3:
        raise ValueError(f"emissions must be [B, T, K], got shape {em.shape}")
    ln = np.ascontiguousarray(lengths, dtype=np.int64)
    if ln.shape != (em.shape[0],):
        raise ValueError("lengths must have one entry per sequence")
    if ln.size and (ln.min() < 1 or ln.max() > em.shape[1]):
        raise ValueError("every length must be in [1, T]")
    K = em.shape[2]
    tr = np.ascontiguousarray(transitions, dtype=np.float64)
    st = np.ascontiguousarray(start, dtype=np.float64)
    sp = np.ascontiguousarray(stop, dtype=np.float64)
    if tr.shape != (K, K) or st.shape != (K,) or sp.shape != (K,):
        raise ValueError("transition/start/stop shapes do not match the label count")
    return em, ln, tr, st, sp


def crf_log_partition(emissions, lengths, transitions, start, stop) -> np.ndarray:
    return _impl.log_partition(*_prep(emissions, lengths, transitions, start, stop))


def crf_marginals(emissions, lengths, transitions, start, stop):
    """``(log_z, unary_marginals, summed_pairwise_marginals)``."""
    return _impl.marginals(*_prep(emissions, lengths, transitions, start, stop))


def crf_viterbi(emissions, lengths, transitions, start, stop):
    """``(paths padded with -1, best path scores)``."""
    return _impl.viterbi(*_prep(emissions, lengths, transitions, start, stop))


__all__ = ["BACKEND", "crf_log_partition", "crf_marginals", "crf_viterbi"]
