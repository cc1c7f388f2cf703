"""The four generative-modeling representations: event, pitch, piano roll, note."""
from .event import (
    DEFAULT_CONFIG, EXPERIMENT_CONFIG, EncodedSequence, EventConfig, decode_event,
    encode_event,
)
from .note import decode_notes, encode_notes
from .pianoroll import PianoRoll, decode_pianoroll, encode_pianoroll
from .pitch import HOLD, PITCH_CONFIG, REST, decode_pitch, encode_pitch
from .transformers import (
    EventRepresentation, NoteRepresentation, PianoRollRepresentation, PitchRepresentation,
)

__all__ = [
    "DEFAULT_CONFIG", "EXPERIMENT_CONFIG", "EncodedSequence", "EventConfig",
    "decode_event", "encode_event", "decode_notes", "encode_notes", "PianoRoll",
    "decode_pianoroll", "encode_pianoroll", "HOLD", "PITCH_CONFIG", "REST",
    "decode_pitch", "encode_pitch", "EventRepresentation", "NoteRepresentation",
    "PianoRollRepresentation", "PitchRepresentation",
]
