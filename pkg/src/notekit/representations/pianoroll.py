"""Piano-roll representation: a T x 128 time-by-pitch matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DEFAULT_RESOLUTION, DEFAULT_VELOCITY, Music, Note, Track, check_valid
from ..errors import DomainError

MODES = ("binary", "velocity")


@dataclass
class PianoRoll:
    matrix: np.ndarray
    binary: bool = True
    resolution: int = DEFAULT_RESOLUTION

    def __eq__(self, other):
        if not isinstance(other, PianoRoll):
            return NotImplemented
        return (self.binary == other.binary and self.resolution == other.resolution
                and np.array_equal(self.matrix, other.matrix))


def encode_pianoroll(music: Music, mode: str = "binary") -> PianoRoll:
    """Rasterize all notes; a note covers ``max(duration, 1)`` steps.

    In velocity mode overlapping notes keep the larger velocity.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    check_valid(music)
    notes = list(music.notes())
    length = max((n.time + max(n.duration, 1) for n in notes), default=0)
    binary = mode == "binary"
    roll = np.zeros((length, 128), dtype=bool if binary else np.uint8)
    for note in notes:
        span = slice(note.time, note.time + max(note.duration, 1))
        if binary:
            roll[span, note.pitch] = True
        else:
            column = roll[span, note.pitch]
            np.maximum(column, note.velocity, out=column)
            roll[span, note.pitch] = column
    return PianoRoll(roll, binary, music.resolution)


def decode_pianoroll(roll: PianoRoll) -> Music:
    """Turn runs of nonzero cells into notes (lossy).

    Adjacent re-articulations of the same pitch merge into a single note.
    The velocity of a note is the first cell of its run, or 64 for binary
    rolls.
    """
    matrix = np.asarray(roll.matrix)
    if matrix.ndim != 2 or matrix.shape[1] != 128:
        raise DomainError(f"piano roll must have shape (T, 128), got {matrix.shape}")
    if roll.binary:
        if not np.isin(matrix, (0, 1)).all():
            raise DomainError("binary piano roll cells must be 0 or 1")
    elif matrix.size and (matrix.min() < 0 or matrix.max() > 127):
        raise DomainError("velocity piano roll cells must lie in [0, 127]")
    active = matrix != 0
    padded = np.zeros((matrix.shape[0] + 2, 128), dtype=np.int8)
    padded[1:-1] = active
    changes = np.diff(padded, axis=0)
    notes = []
    for pitch in range(128):
        starts = np.flatnonzero(changes[:, pitch] == 1)
        stops = np.flatnonzero(changes[:, pitch] == -1)
        for start, stop in zip(starts.tolist(), stops.tolist()):
            velocity = DEFAULT_VELOCITY if roll.binary else int(round(float(matrix[start, pitch])))
            notes.append(Note(start, pitch, stop - start, velocity))
    notes.sort(key=lambda n: (n.time, n.pitch))
    return Music(resolution=roll.resolution, tracks=[Track(notes=notes)])
