import math

import pytest
from hypothesis import given, settings, strategies as st

from notekit.core import KeySignature, Music, Note, Track
from notekit import metrics

import oracles


def song(*notes, resolution=24, drums=()):
    tracks = [Track(notes=[Note(*n) for n in notes])]
    if drums:
        tracks.append(Track(is_drum=True, notes=[Note(*n) for n in drums]))
    return Music(resolution=resolution, tracks=tracks)


@st.composite
def small_music(draw):
    resolution = draw(st.sampled_from([6, 12, 24]))
    def notes(max_size):
        return draw(st.lists(st.builds(Note, st.integers(0, 8 * resolution), st.integers(36, 84),
                                       st.integers(0, 2 * resolution), st.integers(1, 127)),
                             max_size=max_size))
    return Music(resolution=resolution, tracks=[Track(notes=notes(12)), Track(notes=notes(6)),
                                                Track(is_drum=True, notes=notes(6))])


def same(value, expected):
    if expected is None:
        return math.isnan(value)
    return abs(value - expected) <= 1e-9


@settings(max_examples=50)
@given(small_music(), st.integers(0, 11), st.sampled_from(["major", "minor"]))
def test_metrics_match_brute_force_oracle(music, root, mode):
    measure_len = 4 * music.resolution
    assert same(metrics.polyphony(music), oracles.polyphony(music))
    assert same(metrics.polyphony_rate(music), oracles.polyphony_rate(music))
    assert same(metrics.polyphony_rate(music, 3), oracles.polyphony_rate(music, 3))
    assert same(metrics.pitch_in_scale_rate(music, root, mode),
                oracles.pitch_in_scale_rate(music, root, mode))
    assert same(metrics.scale_consistency(music), oracles.scale_consistency(music))
    pitches = [n.pitch for n in music.notes(drums=False)]
    assert same(metrics.pitch_entropy(music), oracles.entropy(pitches))
    assert same(metrics.pitch_class_entropy(music), oracles.entropy([p % 12 for p in pitches]))
    assert same(metrics.empty_beat_rate(music), oracles.empty_beat_rate(music))
    for meter in ("duple", "triple"):
        assert same(metrics.drum_in_pattern_rate(music, meter),
                    oracles.drum_in_pattern_rate(music, meter))
    assert same(metrics.groove_consistency(music, measure_len),
                oracles.groove_consistency(music, measure_len))


def test_polyphony_anchors():
    assert metrics.polyphony(song((0, 60, 4), (4, 62, 4))) == 1.0
    assert metrics.polyphony(song((0, 60, 4), (0, 64, 4))) == 2.0
    assert math.isnan(metrics.polyphony(Music()))
    assert metrics.polyphony_rate(song((0, 60, 4), (4, 62, 4))) == 0.0
    assert metrics.polyphony_rate(song((0, 60, 4), (0, 64, 4))) == 1.0
    # notes over [0,4) and [2,6): ticks 2 and 3 of 0..5 have two pitches
    assert metrics.polyphony_rate(song((0, 60, 4), (2, 64, 4))) == pytest.approx(2 / 6)


def test_half_overlapped_pair():
    # two equal notes overlapping for half their length: grid ticks 0..2, overlap at 1
    assert metrics.polyphony_rate(song((0, 60, 2), (1, 64, 2))) == pytest.approx(1 / 3)


def test_scale_anchors():
    c_major = song(*[(i, p, 1) for i, p in enumerate([60, 62, 64, 65, 67, 69, 71])])
    chromatic = song(*[(i, 60 + i, 1) for i in range(12)])
    assert metrics.pitch_in_scale_rate(c_major, 0, "major") == 1.0
    assert metrics.pitch_in_scale_rate(chromatic, 5, "minor") == pytest.approx(7 / 12)
    assert metrics.pitch_in_scale_rate(song((0, 66, 1)), 0, "major") == 0.0
    assert metrics.scale_consistency(c_major) == 1.0
    assert metrics.scale_consistency(chromatic) == pytest.approx(7 / 12)
    assert math.isnan(metrics.scale_consistency(Music()))
    with pytest.raises(ValueError):
        metrics.pitch_in_scale_rate(c_major, 0, "dorian")


def test_entropy_anchors():
    assert metrics.pitch_entropy(song((0, 60, 1), (1, 60, 1))) == 0.0
    uniform = song(*[(i, 60 + i, 1) for i in range(12)])
    assert abs(metrics.pitch_class_entropy(uniform) - math.log2(12)) <= 1e-9
    skewed = song((0, 60, 1), (1, 60, 1), (2, 60, 1), (3, 62, 1))
    assert metrics.pitch_entropy(skewed) == pytest.approx(0.81128, abs=1e-5)


def test_empty_beat_anchors():
    assert metrics.empty_beat_rate(song(*[(24 * i, 60, 24) for i in range(4)])) == 0.0
    assert metrics.empty_beat_rate(song((0, 60, 96))) == 0.75
    assert metrics.empty_beat_rate(song((0, 60, 96)), sounding=True) == 0.0
    assert math.isnan(metrics.empty_beat_rate(Music()))


def test_drum_anchors():
    half_beats = song(drums=[(12 * i, 36, 1) for i in range(8)])
    triplets = song(drums=[(0, 36, 1), (8, 36, 1), (16, 36, 1)])
    assert metrics.drum_in_pattern_rate(half_beats, "duple") == 1.0
    assert metrics.drum_in_pattern_rate(triplets, "duple") == pytest.approx(1 / 3)
    assert metrics.drum_pattern_consistency(half_beats) == 1.0
    assert metrics.drum_pattern_consistency(triplets) == 1.0
    assert math.isnan(metrics.drum_in_pattern_rate(song((0, 60, 1)), "duple"))
    assert math.isnan(metrics.drum_pattern_consistency(song((0, 60, 1))))
    with pytest.raises(ValueError):
        metrics.drum_in_pattern_rate(song(resolution=4, drums=[(0, 36, 1)]), "duple")


def test_groove_anchors():
    bar = [(0, 60, 2), (4, 62, 2), (8, 64, 4)]
    repeated = song(*bar, *[(t + 16, p, d) for t, p, d in bar], resolution=4)
    assert metrics.groove_consistency(repeated, 16) == 1.0
    full_then_empty = song(*[(t, 60, 1) for t in range(16)], (16, 60, 16), resolution=4)
    full_then_empty.tracks[0].notes[-1] = Note(15, 61, 17)
    assert metrics.groove_consistency(full_then_empty, 16) == 0.0
    one_bit = song(*bar, *[(t + 16, p, d) for t, p, d in bar], (30, 65, 2), resolution=4)
    assert metrics.groove_consistency(one_bit, 16) == pytest.approx(1 - 1 / 16)
    assert math.isnan(metrics.groove_consistency(song((0, 60, 16), resolution=4), 16))


@given(small_music(), st.integers(-24, 24))
def test_transposition_invariance(music, shift):
    moved = Music(resolution=music.resolution, tracks=[
        Track(is_drum=t.is_drum, notes=[Note(n.time, n.pitch + shift, n.duration) for n in t.notes])
        for t in music.tracks])
    for metric in (metrics.scale_consistency, metrics.pitch_entropy, metrics.pitch_class_entropy):
        a, b = metric(music), metric(moved)
        assert (math.isnan(a) and math.isnan(b)) or a == pytest.approx(b)


@given(small_music())
def test_ranges(music):
    pce, pe = metrics.pitch_class_entropy(music), metrics.pitch_entropy(music)
    if not math.isnan(pe):
        assert 0 <= pce <= pe + 1e-12 and pce <= math.log2(12) + 1e-12
        for root in range(12):
            assert metrics.scale_consistency(music) >= metrics.pitch_in_scale_rate(music, root)


def test_report_marks_undefined_values():
    report = metrics.evaluate(Music(resolution=4))
    flat = report.to_dict()
    assert flat["polyphony"] is None and "polyphony.reason" in flat
    assert "resolution 4" in flat["drum_in_pattern_rate.reason"]
    assert flat["param.entropy_base"] == 2


def test_report_uses_first_key():
    music = song((0, 69, 24), (24, 71, 24))
    music.key_signatures = [KeySignature(0, 9, "minor")]
    report = metrics.evaluate(music)
    assert report.parameters["root"] == 9 and report.parameters["mode"] == "minor"
    assert report.values["pitch_in_scale_rate"] == 1.0
