"""Note-based representation: an N x 4 table of (time, pitch, duration, velocity)."""
from __future__ import annotations

import numpy as np

from ..core import DEFAULT_RESOLUTION, Music, Note, Track, check_valid
from ..errors import DomainError

COLUMNS = ("time", "pitch", "duration", "velocity")


def encode_notes(music: Music) -> np.ndarray:
    """All notes as an int64 array of shape (N, 4), sorted row-wise."""
    check_valid(music)
    rows = sorted((n.time, n.pitch, n.duration, n.velocity) for n in music.notes())
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


def decode_notes(table, resolution: int = DEFAULT_RESOLUTION) -> Music:
    """Single-track Music from an (N, 4) note table.

    Raises
    ------
    DomainError
        Wrong shape, negative times or durations, or pitch/velocity outside 0-127.
    """
    table = np.asarray(table)
    if table.size == 0:
        return Music(resolution=resolution)
    if table.ndim != 2 or table.shape[1] != 4:
        raise DomainError(f"note table must have shape (N, 4), got {table.shape}")
    if not np.issubdtype(table.dtype, np.integer):
        if not np.array_equal(table, np.round(table)):
            raise DomainError("note table values must be integers")
        table = table.astype(np.int64)
    for column, (low, high) in zip(COLUMNS, [(0, None), (0, 127), (0, None), (0, 127)]):
        values = table[:, COLUMNS.index(column)]
        bad = values < low if high is None else (values < low) | (values > high)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DomainError(f"row {row}: {column}={int(values[row])} out of range")
    notes = [Note(*map(int, row)) for row in table.tolist()]
    return Music(resolution=resolution, tracks=[Track(notes=notes)])
