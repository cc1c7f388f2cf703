"""Canonical music container and its timing operations.

All times are integer ticks; ``resolution`` ticks make one quarter note.
Operations in this module never mutate their input, they return new
objects.
"""
from __future__ import annotations

import copy
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import ValidationError

SCHEMA_VERSION = "1.0"
DEFAULT_RESOLUTION = 24
DEFAULT_QPM = 120.0
DEFAULT_VELOCITY = 64
SOURCE_FORMATS = ("midi", "musicxml", "abc", "muspy")
MODES = ("major", "minor")
DENOMINATORS = (1, 2, 4, 8, 16, 32, 64)


@dataclass
class Metadata:
    schema_version: str = SCHEMA_VERSION
    title: Optional[str] = None
    creators: List[str] = field(default_factory=list)
    copyright: Optional[str] = None
    collection: Optional[str] = None
    source_filename: Optional[str] = None
    source_format: str = "muspy"


@dataclass
class Tempo:
    time: int
    qpm: float


@dataclass
class KeySignature:
    time: int
    root: int
    mode: str = "major"


@dataclass
class TimeSignature:
    time: int
    numerator: int = 4
    denominator: int = 4


@dataclass
class Note:
    time: int
    pitch: int
    duration: int
    velocity: int = DEFAULT_VELOCITY

    @property
    def end(self) -> int:
        return self.time + self.duration


@dataclass
class Chord:
    time: int
    pitches: List[int]
    duration: int
    velocity: int = DEFAULT_VELOCITY


@dataclass
class Lyric:
    time: int
    text: str


@dataclass
class Track:
    program: int = 0
    is_drum: bool = False
    name: Optional[str] = None
    notes: List[Note] = field(default_factory=list)
    chords: List[Chord] = field(default_factory=list)
    lyrics: List[Lyric] = field(default_factory=list)


@dataclass
class Music:
    """Universal container for symbolic music.

    Attributes
    ----------
    metadata : Metadata
    resolution : int
        Ticks per quarter note.
    tempos, key_signatures, time_signatures : list
        Time-ordered global event lists.
    tracks : list of Track
    diagnostics : collections.Counter
        Counts of recoverable oddities met by a reader (skipped grace notes,
        orphan note-offs, ...). Not part of equality or serialization.
    """

    metadata: Metadata = field(default_factory=Metadata)
    resolution: int = DEFAULT_RESOLUTION
    tempos: List[Tempo] = field(default_factory=list)
    key_signatures: List[KeySignature] = field(default_factory=list)
    time_signatures: List[TimeSignature] = field(default_factory=list)
    tracks: List[Track] = field(default_factory=list)
    diagnostics: Counter = field(default_factory=Counter, compare=False, repr=False)

    def notes(self, drums: Optional[bool] = None):
        """Iterate over all notes; ``drums`` filters by track drum flag."""
        for track in self.tracks:
            if drums is None or track.is_drum == drums:
                yield from track.notes


@dataclass(frozen=True)
class Violation:
    """One broken invariant: dotted field path plus the offending value."""

    field: str
    value: object
    reason: str

    def __str__(self):
        return f"{self.field}={self.value!r}: {self.reason}"


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_int(out, path, value, lo=None, hi=None):
    if not _is_int(value):
        out.append(Violation(path, value, "expected an integer"))
        return
    if lo is not None and value < lo:
        out.append(Violation(path, value, f"must be >= {lo}"))
    elif hi is not None and value > hi:
        out.append(Violation(path, value, f"must be <= {hi}"))


def _check_optional_str(out, path, value):
    if value is not None and not isinstance(value, str):
        out.append(Violation(path, value, "expected a string or null"))


def validate(music: Music) -> List[Violation]:
    """Return every invariant violation found in ``music``.

    An empty list means the object is valid. Violations are data, this
    function never raises for bad content.
    """
    out: List[Violation] = []
    meta = music.metadata
    if meta.schema_version != SCHEMA_VERSION:
        out.append(Violation("metadata.schema_version", meta.schema_version,
                             f"expected {SCHEMA_VERSION!r}"))
    for name in ("title", "copyright", "collection", "source_filename"):
        _check_optional_str(out, f"metadata.{name}", getattr(meta, name))
    if not isinstance(meta.creators, list) or not all(
            isinstance(c, str) for c in meta.creators):
        out.append(Violation("metadata.creators", meta.creators,
                             "expected a list of strings"))
    if meta.source_format not in SOURCE_FORMATS:
        out.append(Violation("metadata.source_format", meta.source_format,
                             f"expected one of {SOURCE_FORMATS}"))

    _check_int(out, "resolution", music.resolution, lo=1)

    for i, tempo in enumerate(music.tempos):
        _check_int(out, f"tempos[{i}].time", tempo.time, lo=0)
        qpm = tempo.qpm
        if (not isinstance(qpm, (int, float)) or isinstance(qpm, bool)
                or not math.isfinite(qpm) or qpm <= 0):
            out.append(Violation(f"tempos[{i}].qpm", qpm,
                                 "must be a finite number > 0"))
    for i, key in enumerate(music.key_signatures):
        _check_int(out, f"key_signatures[{i}].time", key.time, lo=0)
        _check_int(out, f"key_signatures[{i}].root", key.root, lo=0, hi=11)
        if key.mode not in MODES:
            out.append(Violation(f"key_signatures[{i}].mode", key.mode,
                                 "expected 'major' or 'minor'"))
    for i, ts in enumerate(music.time_signatures):
        _check_int(out, f"time_signatures[{i}].time", ts.time, lo=0)
        _check_int(out, f"time_signatures[{i}].numerator", ts.numerator, lo=1)
        if ts.denominator not in DENOMINATORS or not _is_int(ts.denominator):
            out.append(Violation(f"time_signatures[{i}].denominator",
                                 ts.denominator, f"expected one of {DENOMINATORS}"))

    for t, track in enumerate(music.tracks):
        prefix = f"tracks[{t}]"
        _check_int(out, f"{prefix}.program", track.program, lo=0, hi=127)
        if not isinstance(track.is_drum, bool):
            out.append(Violation(f"{prefix}.is_drum", track.is_drum,
                                 "expected a boolean"))
        _check_optional_str(out, f"{prefix}.name", track.name)
        for i, note in enumerate(track.notes):
            p = f"{prefix}.notes[{i}]"
            _check_int(out, f"{p}.time", note.time, lo=0)
            _check_int(out, f"{p}.pitch", note.pitch, lo=0, hi=127)
            _check_int(out, f"{p}.duration", note.duration, lo=0)
            _check_int(out, f"{p}.velocity", note.velocity, lo=0, hi=127)
        for i, chord in enumerate(track.chords):
            p = f"{prefix}.chords[{i}]"
            _check_int(out, f"{p}.time", chord.time, lo=0)
            if not chord.pitches:
                out.append(Violation(f"{p}.pitches", chord.pitches,
                                     "must be non-empty"))
            for j, pitch in enumerate(chord.pitches):
                _check_int(out, f"{p}.pitches[{j}]", pitch, lo=0, hi=127)
            _check_int(out, f"{p}.duration", chord.duration, lo=0)
            _check_int(out, f"{p}.velocity", chord.velocity, lo=0, hi=127)
        for i, lyric in enumerate(track.lyrics):
            _check_int(out, f"{prefix}.lyrics[{i}].time", lyric.time, lo=0)
            if not isinstance(lyric.text, str):
                out.append(Violation(f"{prefix}.lyrics[{i}].text", lyric.text,
                                     "expected a string"))
    return out


def check_valid(music: Music) -> Music:
    """Raise :class:`ValidationError` unless ``music`` is valid."""
    violations = validate(music)
    if violations:
        raise ValidationError(violations)
    return music


def _by_time(item):
    return item.time


def sort(music: Music) -> Music:
    """Return a copy with every event list sorted stably by time.

    Notes sharing an onset are ordered by ascending pitch.
    """
    music = copy.deepcopy(music)
    music.tempos.sort(key=_by_time)
    music.key_signatures.sort(key=_by_time)
    music.time_signatures.sort(key=_by_time)
    for track in music.tracks:
        track.notes.sort(key=lambda n: (n.time, n.pitch))
        track.chords.sort(key=_by_time)
        track.lyrics.sort(key=_by_time)
    return music


def _rescale(value: int, target: int, resolution: int) -> int:
    # round-half-up of value * target / resolution, exact in integers
    return (2 * value * target + resolution) // (2 * resolution)


def adjust_resolution(music: Music, target: int) -> Music:
    """Return a copy rescaled to ``target`` ticks per quarter note.

    Every time and duration ``t`` becomes ``round(t * target / resolution)``
    with halves rounded up. Durations that round to zero stay zero.
    """
    if not _is_int(target) or target < 1:
        raise ValueError(f"target resolution must be a positive integer, got {target!r}")
    music = copy.deepcopy(music)
    old = music.resolution
    if target == old:
        return music

    def scale(t):
        return _rescale(t, target, old)

    for event in (*music.tempos, *music.key_signatures, *music.time_signatures):
        event.time = scale(event.time)
    for track in music.tracks:
        for note in track.notes:
            note.time, note.duration = scale(note.time), scale(note.duration)
        for chord in track.chords:
            chord.time, chord.duration = scale(chord.time), scale(chord.duration)
        for lyric in track.lyrics:
            lyric.time = scale(lyric.time)
    music.resolution = target
    return music


def end_time(music: Music) -> int:
    """Latest note offset (``time + duration``) over all tracks, 0 if none."""
    return max((note.end for note in music.notes()), default=0)


def duration_seconds(music: Music) -> float:
    """Length of the music in seconds, integrating over the tempo map.

    Spans before the first tempo event (or the whole piece if there is
    none) play at 120 qpm.
    """
    stop = end_time(music)
    tempos = sorted(music.tempos, key=_by_time)
    seconds = 0.0
    position, qpm = 0, DEFAULT_QPM
    for tempo in tempos:
        if tempo.time >= stop:
            break
        if tempo.time > position:
            seconds += (tempo.time - position) / music.resolution * 60.0 / qpm
            position = tempo.time
        qpm = tempo.qpm
    seconds += (stop - position) / music.resolution * 60.0 / qpm
    return seconds
