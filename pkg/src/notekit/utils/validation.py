"""Input validation helpers for the estimator-style API."""
from __future__ import annotations

import numpy as np

from ..core import Music, check_valid


def check_music(music) -> Music:
    """Ensure ``music`` is a valid :class:`Music`, raising otherwise."""
    if not isinstance(music, Music):
        raise TypeError(f"expected a Music object, got {type(music).__name__}")
    return check_valid(music)


def check_music_collection(X):
    """Normalize ``X`` (one Music or an iterable of them) into a validated list."""
    if isinstance(X, Music):
        return [check_music(X)]
    try:
        items = list(X)
    except TypeError:
        raise TypeError(
            f"expected a Music or an iterable of Music, got {type(X).__name__}") from None
    return [check_music(m) for m in items]


def check_tokens(tokens, vocab_size: int, *, ndim=None) -> np.ndarray:
    """Validate integer token data against a vocabulary size.

    Returns an int64 array. ``ndim`` optionally pins the dimensionality
    (1 for a single sequence, 2 for a batch of windows).
    """
    array = np.asarray(tokens)
    if array.size == 0:
        array = array.astype(np.int64)
    if not np.issubdtype(array.dtype, np.integer):
        raise TypeError(f"tokens must be integers, got dtype {array.dtype}")
    if ndim is not None and array.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional tokens, got shape {array.shape}")
    if array.size and (array.min() < 0 or array.max() >= vocab_size):
        raise ValueError(f"tokens must lie in [0, {vocab_size}), "
                         f"found range [{array.min()}, {array.max()}]")
    return array.astype(np.int64, copy=False)
