"""notekit: a toolkit for symbolic music processing.

One canonical container (:class:`Music`) with readers and writers for MIDI,
MusicXML and ABC, four representations for generative models, objective
metrics, corpus management and a perplexity harness.
"""
from .core import (Chord, KeySignature, Lyric, Metadata, Music, Note, Tempo, TimeSignature,
                   Track, Violation, adjust_resolution, check_valid, duration_seconds,
                   end_time, sort, validate)
from .errors import NotekitError
from .io import read, write
from .serialization import load, load_file, save, save_file

__version__ = "0.1.0"

__all__ = [
    "Chord", "KeySignature", "Lyric", "Metadata", "Music", "Note", "Tempo", "TimeSignature",
    "Track", "Violation", "adjust_resolution", "check_valid", "duration_seconds", "end_time",
    "sort", "validate", "NotekitError", "read", "write", "load", "load_file", "save",
    "save_file",
]
