"""Hypothesis strategies for Music objects used by the round-trip suites."""
from hypothesis import strategies as st

from notekit.core import (KeySignature, Lyric, Metadata, Music, Note, Tempo, TimeSignature,
                          Track)

texts = st.text(st.characters(blacklist_categories=("Cs",)), max_size=12)


def _drop_same_pitch_overlaps(notes):
    """Keep notes so that same-pitch notes never overlap (FIFO pairing stays exact)."""
    kept, busy_until = [], {}
    for note in sorted(notes, key=lambda n: (n.time, n.pitch, n.duration)):
        if note.time >= busy_until.get(note.pitch, 0):
            kept.append(note)
            busy_until[note.pitch] = note.end
    return kept


@st.composite
def note_lists(draw, max_notes=30, min_duration=1, min_velocity=1, max_time=400,
               pitches=st.integers(0, 127)):
    raw = draw(st.lists(st.builds(
        Note, st.integers(0, max_time), pitches, st.integers(min_duration, 120),
        st.integers(min_velocity, 127)), max_size=max_notes))
    return _drop_same_pitch_overlaps(raw)


@st.composite
def midi_music(draw):
    """Multi-track music with SMF-representable notes."""
    n_tracks = draw(st.integers(1, 4))
    tracks = [Track(program=draw(st.integers(0, 127)), is_drum=draw(st.booleans()),
                    notes=draw(note_lists())) for _ in range(n_tracks)]
    return Music(resolution=draw(st.integers(1, 960)), tracks=tracks)


@st.composite
def any_music(draw):
    """Arbitrary valid music, including zero-length notes and unicode text."""
    tracks = []
    for _ in range(draw(st.integers(0, 3))):
        tracks.append(Track(
            program=draw(st.integers(0, 127)), is_drum=draw(st.booleans()),
            name=draw(st.none() | texts),
            notes=draw(st.lists(st.builds(Note, st.integers(0, 10_000), st.integers(0, 127),
                                          st.integers(0, 500), st.integers(0, 127)),
                                max_size=20)),
            lyrics=draw(st.lists(st.builds(Lyric, st.integers(0, 10_000), texts), max_size=3))))
    metadata = Metadata(title=draw(st.none() | texts), creators=draw(st.lists(texts, max_size=2)),
                        copyright=draw(st.none() | texts), collection=draw(st.none() | texts),
                        source_filename=draw(st.none() | texts),
                        source_format=draw(st.sampled_from(["midi", "musicxml", "abc", "muspy"])))
    return Music(
        metadata=metadata, resolution=draw(st.integers(1, 960)),
        tempos=draw(st.lists(st.builds(Tempo, st.integers(0, 10_000), st.floats(
            1e-3, 1e4, allow_nan=False, allow_infinity=False)), max_size=3)),
        key_signatures=draw(st.lists(st.builds(
            KeySignature, st.integers(0, 10_000), st.integers(0, 11),
            st.sampled_from(["major", "minor"])), max_size=2)),
        time_signatures=draw(st.lists(st.builds(
            TimeSignature, st.integers(0, 10_000), st.integers(1, 16),
            st.sampled_from([1, 2, 4, 8, 16, 32, 64])), max_size=2)),
        tracks=tracks)


@st.composite
def single_track_music(draw, min_velocity=1):
    notes = draw(note_lists(min_velocity=min_velocity))
    return Music(resolution=draw(st.integers(1, 480)), tracks=[Track(notes=notes)])


@st.composite
def monophonic_music(draw):
    """Back-to-back or gapped notes at default velocity, never overlapping."""
    notes, time = [], draw(st.integers(0, 10))
    for _ in range(draw(st.integers(0, 15))):
        duration = draw(st.integers(1, 30))
        notes.append(Note(time, draw(st.integers(0, 127)), duration))
        time += duration + draw(st.integers(0, 5))
    return Music(resolution=draw(st.integers(1, 96)), tracks=[Track(notes=notes)])


def note_multiset(music, with_velocity=True):
    key = (lambda n: (n.time, n.pitch, n.duration, n.velocity)) if with_velocity else \
        (lambda n: (n.time, n.pitch, n.duration))
    return sorted(key(n) for n in music.notes())
