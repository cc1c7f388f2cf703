"""Corpus statistics: song lengths, initial tempos and keys."""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .core import Music, duration_seconds, end_time

PITCH_CLASS_NAMES = ("C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B")
REPORTS = ("lengths", "tempos", "keys")


def key_name(root: int, mode: str) -> str:
    return f"{PITCH_CLASS_NAMES[root % 12]} {mode}"


@dataclass
class SongRecord:
    name: str
    length_ticks: int
    length_quarters: float
    length_seconds: float
    initial_qpm: Optional[float]
    key: Optional[str]


def song_record(music: Music, name: str = "") -> SongRecord:
    """Length in three units plus the first tempo and first key of a song."""
    ticks = end_time(music)
    tempo = min(music.tempos, key=lambda t: t.time, default=None)
    key = min(music.key_signatures, key=lambda k: k.time, default=None)
    return SongRecord(
        name=name or music.metadata.source_filename or music.metadata.title or "",
        length_ticks=ticks,
        length_quarters=ticks / music.resolution,
        length_seconds=duration_seconds(music),
        initial_qpm=tempo.qpm if tempo else None,
        key=key_name(key.root, key.mode) if key else None,
    )


@dataclass
class Histogram:
    """Counts of values in half-open bins ``[edges[i], edges[i+1])``; the last bin is closed."""

    edges: List[float]
    counts: List[int]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["bin_start", "bin_end", "count"])
        for i, count in enumerate(self.counts):
            writer.writerow([repr(float(self.edges[i])), repr(float(self.edges[i + 1])), count])
        return buffer.getvalue()


def histogram(values: Sequence[float], width: float) -> Histogram:
    """Fixed-width bins aligned to multiples of ``width`` covering every value."""
    if not values:
        return Histogram([], [])
    low = math.floor(min(values) / width) * width
    n_bins = max(int(math.floor((max(values) - low) / width)) + 1, 1)
    edges = [low + i * width for i in range(n_bins + 1)]
    counts = [0] * n_bins
    for value in values:
        counts[min(int((value - low) // width), n_bins - 1)] += 1
    return Histogram(edges, counts)


@dataclass
class StatReport:
    records: List[SongRecord] = field(default_factory=list)
    length_width: float = 30.0
    tempo_width: float = 10.0

    def lengths(self) -> Histogram:
        """Histogram of song lengths in seconds."""
        return histogram([r.length_seconds for r in self.records], self.length_width)

    def tempos(self) -> Histogram:
        return histogram([r.initial_qpm for r in self.records if r.initial_qpm is not None],
                         self.tempo_width)

    def keys(self) -> List[tuple]:
        """(key name, count) pairs by descending count, then name."""
        counts = Counter(r.key for r in self.records if r.key is not None)
        return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def keys_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["key", "count"])
        writer.writerows(self.keys())
        return buffer.getvalue()

    def songs_csv(self) -> str:
        buffer = io.StringIO()
        names = list(SongRecord.__dataclass_fields__)
        writer = csv.DictWriter(buffer, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for record in self.records:
            writer.writerow({k: ("" if v is None else v) for k, v in asdict(record).items()})
        return buffer.getvalue()

    def summary(self) -> Dict[str, object]:
        return {
            "songs": len(self.records),
            "songs_without_tempo": sum(r.initial_qpm is None for r in self.records),
            "songs_without_key": sum(r.key is None for r in self.records),
            "keys": dict(self.keys()),
            "length_bin_width_seconds": self.length_width,
            "tempo_bin_width_qpm": self.tempo_width,
        }


def collect(songs: Iterable[Music], **kwargs) -> StatReport:
    return StatReport([song_record(m) for m in songs], **kwargs)
