"""Event-based representation: note-on, note-off, time-shift and velocity tokens.

Token layout (default configuration)::

    0-127     note-on(pitch)
    128-255   note-off(pitch)
    256-355   time-shift(1..100 ticks)
    356-387   velocity bin (when use_velocity)
    next id   end-of-sequence (when use_end_of_sequence)
"""
from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass

import numpy as np

from ..core import DEFAULT_RESOLUTION, DEFAULT_VELOCITY, Music, Note, Track, check_valid
from ..errors import DomainError


@dataclass(frozen=True)
class EventConfig:
    use_velocity: bool = True
    velocity_bins: int = 32
    max_time_shift: int = 100
    use_end_of_sequence: bool = False

    def __post_init__(self):
        if self.velocity_bins < 1 or self.velocity_bins > 128:
            raise ValueError(f"velocity_bins must be in [1, 128], got {self.velocity_bins}")
        if self.max_time_shift < 1:
            raise ValueError(f"max_time_shift must be >= 1, got {self.max_time_shift}")

    @property
    def note_off_offset(self) -> int:
        return 128

    @property
    def time_shift_offset(self) -> int:
        # token for a shift of t ticks is time_shift_offset + t - 1
        return 256

    @property
    def velocity_offset(self) -> int:
        return 256 + self.max_time_shift

    @property
    def eos_token(self):
        if not self.use_end_of_sequence:
            return None
        return self.velocity_offset + (self.velocity_bins if self.use_velocity else 0)

    @property
    def vocab_size(self) -> int:
        size = 128 + 128 + self.max_time_shift
        if self.use_velocity:
            size += self.velocity_bins
        if self.use_end_of_sequence:
            size += 1
        return size

    def velocity_bin(self, velocity: int) -> int:
        return velocity * self.velocity_bins // 128

    def bin_velocity(self, index: int) -> int:
        """Velocity at the centre of bin ``index``."""
        low = -(-index * 128 // self.velocity_bins)
        high = -(-(index + 1) * 128 // self.velocity_bins) - 1
        return (low + high + 1) // 2


DEFAULT_CONFIG = EventConfig()
#: no velocity tokens, end-of-sequence on: 357 tokens
EXPERIMENT_CONFIG = EventConfig(use_velocity=False, use_end_of_sequence=True)


@dataclass
class EncodedSequence:
    """Token sequence plus the configuration and time base it was made with."""

    tokens: np.ndarray
    config: object = DEFAULT_CONFIG
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64).reshape(-1)

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        if not isinstance(other, EncodedSequence):
            return NotImplemented
        return (self.config == other.config and self.resolution == other.resolution
                and np.array_equal(self.tokens, other.tokens))


def encode_event(music: Music, config: EventConfig = DEFAULT_CONFIG) -> EncodedSequence:
    """Encode all notes of ``music`` (tracks merged) as event tokens.

    At equal ticks note-offs precede note-ons, except the note-off of a
    zero-length note, which follows its own note-on. Gaps are filled with
    the largest time shifts first. A velocity token is emitted before a
    note-on only when the velocity bin changes.
    """
    check_valid(music)
    events = []
    for note in music.notes():
        # same-pitch onsets are ordered by offset so FIFO decoding pairs them back
        events.append((note.time, 1, note.pitch, note.end, note.velocity))
        events.append((note.end, 2 if note.duration == 0 else 0, note.pitch, note.time, 0))
    events.sort()

    tokens = []
    now, current_bin = 0, None
    shift_base = config.time_shift_offset - 1
    for time, kind, pitch, _, velocity in events:
        gap = time - now
        while gap > 0:
            step = min(gap, config.max_time_shift)
            tokens.append(shift_base + step)
            gap -= step
        now = time
        if kind == 1:
            if config.use_velocity:
                index = config.velocity_bin(velocity)
                if index != current_bin:
                    tokens.append(config.velocity_offset + index)
                    current_bin = index
            tokens.append(pitch)
        else:
            tokens.append(config.note_off_offset + pitch)
    if config.use_end_of_sequence:
        tokens.append(config.eos_token)
    return EncodedSequence(np.array(tokens, dtype=np.int64), config, music.resolution)


def decode_event(seq: EncodedSequence) -> Music:
    """Decode event tokens into a single-track Music.

    Note-offs close the earliest open note of the same pitch; notes still
    open at the end close at the final time. Decoding stops at an
    end-of-sequence token. Orphan note-offs are counted in
    ``music.diagnostics``.
    """
    config = seq.config
    tokens = np.asarray(seq.tokens)
    if tokens.size and (tokens.min() < 0 or tokens.max() >= config.vocab_size):
        bad = tokens[(tokens < 0) | (tokens >= config.vocab_size)][0]
        raise DomainError(f"token {int(bad)} outside vocabulary of size {config.vocab_size}")

    diagnostics = Counter()
    open_notes = defaultdict(deque)
    notes = []
    now = 0
    velocity = DEFAULT_VELOCITY
    for token in tokens.tolist():
        if token < 128:
            open_notes[token].append((now, velocity))
        elif token < 256:
            pitch = token - 128
            if not open_notes[pitch]:
                diagnostics["orphan_note_off"] += 1
                continue
            onset, vel = open_notes[pitch].popleft()
            notes.append(Note(onset, pitch, now - onset, vel))
        elif token < config.velocity_offset:
            now += token - config.time_shift_offset + 1
        elif token == config.eos_token:
            break
        else:
            velocity = config.bin_velocity(token - config.velocity_offset)
    for pitch, queue in open_notes.items():
        for onset, vel in queue:
            notes.append(Note(onset, pitch, now - onset, vel))
            diagnostics["unterminated_note"] += 1
    notes.sort(key=lambda n: (n.time, n.pitch, n.duration))
    music = Music(resolution=seq.resolution, tracks=[Track(notes=notes)])
    music.diagnostics = diagnostics
    return music
