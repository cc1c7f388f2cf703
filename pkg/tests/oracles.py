"""Brute-force metric definitions, written tick by tick with plain Python sets.

Deliberately shares no code with notekit.metrics.
"""
import math

MAJOR = {0, 2, 4, 5, 7, 9, 11}
MINOR = {0, 2, 3, 5, 7, 8, 10}


def _notes(music, drums):
    return [n for t in music.tracks if t.is_drum == drums for n in t.notes]


def _end(music):
    return max((n.time + n.duration for t in music.tracks for n in t.notes), default=0)


def sounding_sets(music):
    notes = _notes(music, False)
    horizon = max((n.time + max(n.duration, 1) for n in notes), default=0)
    return [{n.pitch for n in notes if n.time <= t < n.time + max(n.duration, 1)}
            for t in range(horizon)]


def polyphony(music):
    sizes = [len(s) for s in sounding_sets(music) if s]
    return sum(sizes) / len(sizes) if sizes else None


def polyphony_rate(music, threshold=2):
    sizes = [len(s) for s in sounding_sets(music) if s]
    return sum(1 for k in sizes if k >= threshold) / len(sizes) if sizes else None


def pitch_in_scale_rate(music, root, mode):
    scale = {(root + i) % 12 for i in (MAJOR if mode == "major" else MINOR)}
    pitches = [n.pitch for n in _notes(music, False)]
    return sum(1 for p in pitches if p % 12 in scale) / len(pitches) if pitches else None


def scale_consistency(music):
    rates = [pitch_in_scale_rate(music, r, m) for r in range(12) for m in ("major", "minor")]
    return None if rates[0] is None else max(rates)


def entropy(values):
    if not values:
        return None
    total = len(values)
    return -sum(values.count(v) / total * math.log2(values.count(v) / total)
                for v in set(values))


def empty_beat_rate(music):
    end = _end(music)
    if end == 0:
        return None
    r = music.resolution
    beats = math.ceil(end / r)
    onsets = [n.time for t in music.tracks for n in t.notes]
    empty = sum(1 for k in range(beats) if not any(k * r <= o < (k + 1) * r for o in onsets))
    return empty / beats


def drum_in_pattern_rate(music, meter):
    onsets = [n.time for n in _notes(music, True)]
    if not onsets:
        return None
    step = music.resolution // 2 if meter == "duple" else music.resolution // 3
    return sum(1 for o in onsets if o % step == 0) / len(onsets)


def groove_consistency(music, measure_len):
    end = _end(music)
    if end <= measure_len:
        return None
    count = math.ceil(end / measure_len)
    onsets = {n.time for t in music.tracks for n in t.notes}
    measures = [[1 if m * measure_len + i in onsets else 0 for i in range(measure_len)]
                for m in range(count)]
    distances = [sum(a != b for a, b in zip(measures[i], measures[i + 1])) / measure_len
                 for i in range(count - 1)]
    return 1 - sum(distances) / len(distances)
