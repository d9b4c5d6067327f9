"""Kernel dispatch: compiled Cython core when importable, numpy otherwise.

Set ``LORENTZOT_PURE=1`` in the environment to force the numpy fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("LORENTZOT_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _fallback

pair_cost = _impl.pair_cost
inf_convolution = _impl.inf_convolution
sup_convolution = _impl.sup_convolution
bellman_ford = _impl.bellman_ford

COINCIDENT = _fallback.COINCIDENT
TIMELIKE_FUTURE = _fallback.TIMELIKE_FUTURE
NULL_FUTURE = _fallback.NULL_FUTURE
SPACELIKE = _fallback.SPACELIKE
NULL_PAST = _fallback.NULL_PAST
TIMELIKE_PAST = _fallback.TIMELIKE_PAST
CAUSAL_FUTURE_CODES = (COINCIDENT, TIMELIKE_FUTURE, NULL_FUTURE)

__all__ = [
    "BACKEND",
    "pair_cost",
    "inf_convolution",
    "sup_convolution",
    "bellman_ford",
]
