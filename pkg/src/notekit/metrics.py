"""Objective evaluation metrics for generated music.

Every metric returns ``math.nan`` when it is undefined for the input (for
example polyphony of a silent piece); :func:`evaluate` turns those into
``None`` with a reason. Pitch metrics ignore drum tracks, drum metrics use
only drum tracks, and the rhythm metrics (empty beats, groove) use every
note.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .core import Music, end_time

MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
NATURAL_MINOR_SCALE = (0, 2, 3, 5, 7, 8, 10)


def step_grid(music: Music, drums: bool = False) -> np.ndarray:
    """Boolean (T, 128) grid of sounding pitches; notes last at least one tick."""
    notes = list(music.notes(drums=drums))
    length = max((n.time + max(n.duration, 1) for n in notes), default=0)
    grid = np.zeros((length, 128), dtype=bool)
    for note in notes:
        grid[note.time:note.time + max(note.duration, 1), note.pitch] = True
    return grid


def polyphony(music: Music) -> float:
    """Mean number of sounding pitches over ticks where something sounds."""
    counts = step_grid(music).sum(axis=1)
    counts = counts[counts > 0]
    return float(counts.mean()) if counts.size else math.nan


def polyphony_rate(music: Music, threshold: int = 2) -> float:
    """Fraction of sounding ticks with at least ``threshold`` pitches."""
    counts = step_grid(music).sum(axis=1)
    counts = counts[counts > 0]
    return float((counts >= threshold).mean()) if counts.size else math.nan


def scale_pitch_classes(root: int, mode: str):
    intervals = MAJOR_SCALE if mode == "major" else NATURAL_MINOR_SCALE
    return frozenset((root + i) % 12 for i in intervals)


def pitch_in_scale_rate(music: Music, root: int = 0, mode: str = "major") -> float:
    """Fraction of non-drum notes whose pitch class is in the scale (natural minor)."""
    if mode not in ("major", "minor"):
        raise ValueError(f"mode must be 'major' or 'minor', got {mode!r}")
    scale = scale_pitch_classes(root, mode)
    pitches = [n.pitch for n in music.notes(drums=False)]
    if not pitches:
        return math.nan
    return sum(p % 12 in scale for p in pitches) / len(pitches)


def scale_consistency(music: Music) -> float:
    """Largest pitch-in-scale rate over all 24 major and minor keys."""
    rates = [pitch_in_scale_rate(music, root, mode)
             for mode in ("major", "minor") for root in range(12)]
    return math.nan if math.isnan(rates[0]) else max(rates)


def _entropy(counts) -> float:
    counts = np.asarray([c for c in counts if c > 0], dtype=float)
    if not counts.size:
        return math.nan
    probs = counts / counts.sum()
    return float(max(-(probs * np.log2(probs)).sum(), 0.0))


def pitch_entropy(music: Music) -> float:
    """Base-2 entropy of the note-count histogram over the 128 pitches."""
    return _entropy(Counter(n.pitch for n in music.notes(drums=False)).values())


def pitch_class_entropy(music: Music) -> float:
    """Base-2 entropy of the note-count histogram over the 12 pitch classes."""
    return _entropy(Counter(n.pitch % 12 for n in music.notes(drums=False)).values())


def empty_beat_rate(music: Music, sounding: bool = False) -> float:
    """Fraction of beats (quarter notes) without a note onset.

    Beats are ``[k*r, (k+1)*r)`` for ``k < ceil(end_time / r)``.

    With ``sounding=True`` a beat counts as non-empty when any note sounds
    during it, not only when one starts.
    """
    stop = end_time(music)
    if stop <= 0:
        return math.nan
    r = music.resolution
    n_beats = -(-stop // r)
    filled = np.zeros(n_beats, dtype=bool)
    for note in music.notes():
        if note.time >= n_beats * r:
            continue  # zero-length note sitting on the final barline
        if sounding:
            last = (note.time + max(note.duration, 1) - 1) // r
            filled[note.time // r:min(last, n_beats - 1) + 1] = True
        else:
            filled[note.time // r] = True
    return float(1.0 - filled.mean())


def drum_in_pattern_rate(music: Music, meter: str = "duple") -> float:
    """Fraction of drum onsets on the half-beat (duple) or third-beat (triple) grid."""
    if meter not in ("duple", "triple"):
        raise ValueError(f"meter must be 'duple' or 'triple', got {meter!r}")
    if music.resolution % 6:
        raise ValueError(
            f"resolution {music.resolution} must be divisible by 6 for drum patterns")
    onsets = [n.time for n in music.notes(drums=True)]
    if not onsets:
        return math.nan
    step = music.resolution // (2 if meter == "duple" else 3)
    return sum(t % step == 0 for t in onsets) / len(onsets)


def drum_pattern_consistency(music: Music) -> float:
    """Larger of the duple and triple drum-in-pattern rates."""
    duple = drum_in_pattern_rate(music, "duple")
    if math.isnan(duple):
        return math.nan
    return max(duple, drum_in_pattern_rate(music, "triple"))


def groove_consistency(music: Music, measure_len: int) -> float:
    """One minus the mean normalized Hamming distance of consecutive measures.

    Each measure is a binary vector of length ``measure_len`` marking ticks
    with an onset; there are ``ceil(end_time / measure_len)`` measures and
    the final partial one is zero-padded.
    """
    if measure_len < 1:
        raise ValueError(f"measure_len must be positive, got {measure_len}")
    stop = end_time(music)
    if stop <= measure_len:
        return math.nan
    n_measures = -(-stop // measure_len)
    grooves = np.zeros(n_measures * measure_len, dtype=bool)
    for note in music.notes():
        if note.time < len(grooves):
            grooves[note.time] = True
    grooves = grooves.reshape(n_measures, measure_len)
    distances = (grooves[1:] != grooves[:-1]).sum(axis=1) / measure_len
    return float(1.0 - distances.mean())


@dataclass
class MetricReport:
    """Metric values plus the parameters used to compute them."""

    values: Dict[str, Optional[float]] = field(default_factory=dict)
    reasons: Dict[str, str] = field(default_factory=dict)
    parameters: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Flat JSON-ready map; undefined metrics are null with a ``<name>.reason`` key."""
        out = {}
        for name, value in self.values.items():
            out[name] = value
            if name in self.reasons:
                out[f"{name}.reason"] = self.reasons[name]
        for name, value in self.parameters.items():
            out[f"param.{name}"] = value
        return out


_REASONS = {
    "polyphony": "no sounding non-drum step",
    "polyphony_rate": "no sounding non-drum step",
    "pitch_in_scale_rate": "no non-drum notes",
    "scale_consistency": "no non-drum notes",
    "pitch_entropy": "no non-drum notes",
    "pitch_class_entropy": "no non-drum notes",
    "empty_beat_rate": "music has zero length",
    "drum_in_pattern_rate": "no drum notes",
    "drum_pattern_consistency": "no drum notes",
    "groove_consistency": "fewer than two measures",
}


def evaluate(music: Music, *, root=None, mode=None, threshold=2, meter="duple",
             measure_len=None, empty_beat="onset") -> MetricReport:
    """Compute every metric for one song.

    ``root``/``mode`` default to the first key signature (C major when there
    is none); ``measure_len`` defaults to one 4/4 bar, or the first time
    signature's bar length.
    """
    if root is None or mode is None:
        key = min(music.key_signatures, key=lambda k: k.time, default=None)
        root = root if root is not None else (key.root if key else 0)
        mode = mode if mode is not None else (key.mode if key else "major")
    if measure_len is None:
        ts = min(music.time_signatures, key=lambda t: t.time, default=None)
        if ts is None:
            measure_len = 4 * music.resolution
        else:
            measure_len = max(ts.numerator * 4 * music.resolution // ts.denominator, 1)
    report = MetricReport(parameters={
        "root": root, "mode": mode, "threshold": threshold, "meter": meter,
        "measure_len": measure_len, "empty_beat": empty_beat,
        "entropy_base": 2, "minor_scale": "natural",
    })
    values = {
        "polyphony": polyphony(music),
        "polyphony_rate": polyphony_rate(music, threshold),
        "pitch_in_scale_rate": pitch_in_scale_rate(music, root, mode),
        "scale_consistency": scale_consistency(music),
        "pitch_entropy": pitch_entropy(music),
        "pitch_class_entropy": pitch_class_entropy(music),
        "empty_beat_rate": empty_beat_rate(music, sounding=empty_beat == "sounding"),
        "groove_consistency": groove_consistency(music, measure_len),
    }
    if music.resolution % 6 == 0:
        values["drum_in_pattern_rate"] = drum_in_pattern_rate(music, meter)
        values["drum_pattern_consistency"] = drum_pattern_consistency(music)
    else:
        values["drum_in_pattern_rate"] = values["drum_pattern_consistency"] = math.nan
        report.reasons["drum_in_pattern_rate"] = report.reasons[
            "drum_pattern_consistency"] = f"resolution {music.resolution} not divisible by 6"
    for name, value in values.items():
        if math.isnan(value):
            report.values[name] = None
            report.reasons.setdefault(name, _REASONS[name])
        else:
            report.values[name] = value
    return report
