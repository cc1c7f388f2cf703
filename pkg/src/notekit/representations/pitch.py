"""Pitch-based representation for monophonic music.

One token per tick: the pitch (0-127) at a note onset, ``HOLD`` (128) while
that note sustains and ``REST`` (129) when nothing sounds.
"""
from __future__ import annotations

import numpy as np

from ..core import DEFAULT_VELOCITY, Music, Note, Track, check_valid
from ..errors import DomainError, PolyphonyError
from .event import EncodedSequence

HOLD = 128
REST = 129
VOCAB_SIZE = 130
POLICIES = ("error", "keep-highest", "skip-new")


class PitchConfig:
    """Marker configuration for pitch-based sequences."""

    vocab_size = VOCAB_SIZE

    def __eq__(self, other):
        return isinstance(other, PitchConfig)

    def __hash__(self):
        return hash(PitchConfig)

    def __repr__(self):
        return "PitchConfig()"


PITCH_CONFIG = PitchConfig()


def encode_pitch(music: Music, policy: str = "error") -> EncodedSequence:
    """Encode a monophonic Music as one token per tick.

    Zero-length notes occupy a single tick. When notes overlap, ``policy``
    decides: ``"error"`` raises, ``"keep-highest"`` keeps the highest
    sounding pitch at every tick, ``"skip-new"`` drops any note that starts
    while an earlier kept note still sounds.

    Raises
    ------
    PolyphonyError
        Overlapping notes under the ``"error"`` policy; names the first tick.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown overlap policy {policy!r}, expected one of {POLICIES}")
    check_valid(music)
    notes = sorted(music.notes(), key=lambda n: (n.time, n.pitch))
    if policy == "skip-new":
        kept, busy_until = [], 0
        for note in notes:
            if note.time >= busy_until:
                kept.append(note)
                busy_until = note.time + max(note.duration, 1)
        notes = kept
    length = max((n.time + max(n.duration, 1) for n in notes), default=0)
    # active[t] holds indices of notes sounding at tick t
    active = [[] for _ in range(length)]
    for index, note in enumerate(notes):
        for t in range(note.time, note.time + max(note.duration, 1)):
            active[t].append(index)

    tokens = np.full(length, REST, dtype=np.int64)
    previous = None
    for t, sounding in enumerate(active):
        if not sounding:
            previous = None
            continue
        if len(sounding) == 1:
            chosen = sounding[0]
        elif policy == "error":
            raise PolyphonyError(t)
        else:
            chosen = max(sounding, key=lambda i: (notes[i].pitch, -notes[i].time))
        if chosen == previous and notes[chosen].time != t:
            tokens[t] = HOLD
        else:
            tokens[t] = notes[chosen].pitch
        previous = chosen
    return EncodedSequence(tokens, PITCH_CONFIG, music.resolution)


def decode_pitch(seq: EncodedSequence) -> Music:
    """Inverse of :func:`encode_pitch`; velocities default to 64.

    Raises
    ------
    DomainError
        Token outside 0-129, or a hold token with no note to sustain.
    """
    tokens = np.asarray(seq.tokens if isinstance(seq, EncodedSequence) else seq)
    resolution = seq.resolution if isinstance(seq, EncodedSequence) else 24
    notes = []
    current = None
    for t, token in enumerate(tokens.tolist()):
        if not 0 <= token < VOCAB_SIZE:
            raise DomainError(f"token {token} at step {t} outside pitch vocabulary")
        if token == HOLD:
            if current is None:
                raise DomainError(f"hold token at step {t} without a sounding note")
            current.duration += 1
        elif token == REST:
            current = None
        else:
            current = Note(t, token, 1, DEFAULT_VELOCITY)
            notes.append(current)
    return Music(resolution=resolution, tracks=[Track(notes=notes)])
