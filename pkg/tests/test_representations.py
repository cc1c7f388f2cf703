import numpy as np
import pytest
from hypothesis import given
from sklearn.pipeline import Pipeline

from notekit.core import Music, Note, Track
from notekit.errors import DomainError, PolyphonyError
from notekit.representations import (
    DEFAULT_CONFIG, EXPERIMENT_CONFIG, HOLD, PITCH_CONFIG, REST, EncodedSequence, EventConfig,
    EventRepresentation, NoteRepresentation, PianoRoll, PianoRollRepresentation,
    PitchRepresentation, decode_event, decode_notes, decode_pianoroll, decode_pitch,
    encode_event, encode_notes, encode_pianoroll, encode_pitch)

from strategies import monophonic_music, note_multiset, single_track_music


def song(*notes, resolution=24):
    return Music(resolution=resolution, tracks=[Track(notes=[Note(*n) for n in notes])])


# ---------------------------------------------------------------- event

def test_vocabulary_sizes():
    assert DEFAULT_CONFIG.vocab_size == 388
    assert EXPERIMENT_CONFIG.vocab_size == 357
    assert EXPERIMENT_CONFIG.eos_token == 356
    assert PITCH_CONFIG.vocab_size == 130


def test_event_token_layout():
    tokens = encode_event(song((0, 60, 4, 100))).tokens.tolist()
    # velocity 100 -> bin 25 -> token 356 + 25; on 60; shift 4 -> 259; off 60 -> 188
    assert tokens == [381, 60, 259, 188]


def test_event_long_gap_uses_largest_shifts():
    tokens = encode_event(song((250, 60, 1)), EXPERIMENT_CONFIG).tokens.tolist()
    assert tokens == [355, 355, 305, 60, 256, 188, 356]


def test_repeated_pitch_offs_before_ons():
    seq = encode_event(song((0, 60, 2), (2, 60, 2)), EventConfig(use_velocity=False))
    assert seq.tokens.tolist() == [60, 257, 188, 60, 257, 188]
    assert note_multiset(decode_event(seq)) == [(0, 60, 2, 64), (2, 60, 2, 64)]


def test_decode_event_stops_at_eos_and_rejects_unknown_tokens():
    seq = EncodedSequence([60, 256, 188, 356, 61], EXPERIMENT_CONFIG)
    assert note_multiset(decode_event(seq)) == [(0, 60, 1, 64)]
    with pytest.raises(DomainError):
        decode_event(EncodedSequence([357], EXPERIMENT_CONFIG))


def test_orphan_note_off_is_counted():
    music = decode_event(EncodedSequence([188], DEFAULT_CONFIG))
    assert music.diagnostics["orphan_note_off"] == 1 and not list(music.notes())


@pytest.mark.parametrize("velocity", range(128))
def test_velocity_bins_round_trip_within_two(velocity):
    index = DEFAULT_CONFIG.velocity_bin(velocity)
    assert index == velocity // 4
    assert abs(DEFAULT_CONFIG.bin_velocity(index) - velocity) <= 2


@given(single_track_music(min_velocity=0))
def test_event_round_trip(music):
    back = decode_event(encode_event(music))
    assert note_multiset(back, with_velocity=False) == note_multiset(music, with_velocity=False)
    got = sorted((n.time, n.pitch, n.duration, n.velocity) for n in back.notes())
    want = note_multiset(music)
    assert all(abs(g[3] - w[3]) <= 2 for g, w in zip(got, want))


@given(single_track_music())
def test_event_tokens_in_range(music):
    for config in (DEFAULT_CONFIG, EXPERIMENT_CONFIG):
        tokens = encode_event(music, config).tokens
        assert tokens.size == 0 or (tokens.min() >= 0 and tokens.max() < config.vocab_size)


# ---------------------------------------------------------------- pitch

def test_pitch_layout():
    assert encode_pitch(song((0, 60, 2), (3, 62, 1))).tokens.tolist() == [60, HOLD, REST, 62]
    assert encode_pitch(Music()).tokens.tolist() == []


def test_pitch_polyphony_policies():
    chord = song((0, 60, 2), (1, 64, 2))
    with pytest.raises(PolyphonyError) as info:
        encode_pitch(chord)
    assert info.value.tick == 1
    assert encode_pitch(chord, "skip-new").tokens.tolist() == [60, HOLD]
    assert encode_pitch(chord, "keep-highest").tokens.tolist() == [60, 64, HOLD]


def test_decode_pitch_errors_and_rests():
    with pytest.raises(DomainError):
        decode_pitch(EncodedSequence([HOLD, 60], PITCH_CONFIG))
    assert not list(decode_pitch(EncodedSequence([REST, REST], PITCH_CONFIG)).notes())


@given(monophonic_music())
def test_pitch_round_trip(music):
    seq = encode_pitch(music)
    back = decode_pitch(seq)
    assert note_multiset(back) == note_multiset(music)


# ---------------------------------------------------------------- piano roll

def test_pianoroll_cells():
    roll = encode_pianoroll(song((0, 60, 2, 100), (1, 60, 2, 40), (3, 61, 0)), "velocity")
    assert roll.matrix.shape == (4, 128)
    assert roll.matrix[:, 60].tolist() == [100, 100, 40, 0]
    assert roll.matrix[3, 61] == 64
    assert encode_pianoroll(Music()).matrix.shape == (0, 128)


def test_pianoroll_merges_adjacent_notes():
    back = decode_pianoroll(encode_pianoroll(song((0, 60, 2), (2, 60, 2))))
    assert note_multiset(back) == [(0, 60, 4, 64)]


def test_pianoroll_rejects_bad_cells():
    with pytest.raises(DomainError):
        decode_pianoroll(PianoRoll(np.full((2, 128), 2), binary=True))
    with pytest.raises(DomainError):
        decode_pianoroll(PianoRoll(np.zeros((2, 12)), binary=True))


@given(single_track_music())
def test_pianoroll_round_trip_on_separated_notes(music):
    # keep notes separated from any same-pitch neighbour by a gap
    kept, last_end = [], {}
    for note in sorted(music.notes(), key=lambda n: n.time):
        if note.time > last_end.get(note.pitch, -1):
            kept.append(Note(note.time, note.pitch, note.duration, note.velocity))
            last_end[note.pitch] = note.end
    music = Music(resolution=music.resolution, tracks=[Track(notes=kept)])
    back = decode_pianoroll(encode_pianoroll(music, "velocity"))
    assert note_multiset(back) == note_multiset(music)


# ---------------------------------------------------------------- note table

@given(single_track_music(min_velocity=0))
def test_note_table_round_trip(music):
    table = encode_notes(music)
    assert table.shape == (len(music.tracks[0].notes), 4)
    assert note_multiset(decode_notes(table, music.resolution)) == note_multiset(music)


def test_note_table_errors_and_empty():
    assert encode_notes(Music()).shape == (0, 4)
    assert decode_notes(np.zeros((0, 4))) == Music()
    with pytest.raises(DomainError):
        decode_notes([[0, 128, 1, 64]])
    with pytest.raises(DomainError):
        decode_notes([[0, 60, 1]])


# ---------------------------------------------------------------- estimators

def test_transformers_in_pipeline():
    songs = [song((0, 60, 24), (24, 62, 24)), song((0, 64, 48))]
    pipe = Pipeline([("events", EventRepresentation(use_velocity=False,
                                                    use_end_of_sequence=True, resolution=4))])
    sequences = pipe.fit_transform(songs)
    assert pipe.named_steps["events"].vocab_size_ == 357
    assert sequences[0].tolist() == [60, 259, 188, 62, 259, 190, 356]
    back = pipe.named_steps["events"].inverse_transform(sequences)
    assert note_multiset(back[1]) == [(0, 64, 8, 64)]


def test_other_transformers_round_trip():
    songs = [song((0, 60, 2), (2, 62, 1))]
    for transformer in (PitchRepresentation(), PianoRollRepresentation(), NoteRepresentation()):
        encoded = transformer.fit(songs).transform(songs)
        back = transformer.inverse_transform(encoded)
        assert note_multiset(back[0]) == note_multiset(songs[0])
    assert PianoRollRepresentation(mode="velocity").get_params()["mode"] == "velocity"


def test_transformer_validates_input():
    with pytest.raises(TypeError):
        EventRepresentation().fit([1, 2])
