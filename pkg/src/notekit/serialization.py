"""Canonical JSON documents for :class:`~notekit.core.Music`.

Documents are UTF-8, two-space indented, LF terminated and byte
deterministic: keys follow field declaration order, event lists are
sorted and absent optional fields are omitted.
"""
from __future__ import annotations

import json
from pathlib import Path

from .core import (
    SCHEMA_VERSION, Chord, KeySignature, Lyric, Metadata, Music, Note, Tempo,
    TimeSignature, Track, check_valid, sort,
)
from .errors import ParseError, SchemaError, VersionError

EXTENSION = ".muspy.json"

# (field name, required) per object kind, in emission order
_FIELDS = {
    "music": [("schema_version", True), ("metadata", True), ("resolution", True),
              ("tempos", True), ("key_signatures", True),
              ("time_signatures", True), ("tracks", True)],
    "metadata": [("title", False), ("creators", True), ("copyright", False),
                 ("collection", False), ("source_filename", False),
                 ("source_format", True)],
    "tempo": [("time", True), ("qpm", True)],
    "key_signature": [("time", True), ("root", True), ("mode", True)],
    "time_signature": [("time", True), ("numerator", True), ("denominator", True)],
    "track": [("program", True), ("is_drum", True), ("name", False),
              ("notes", True), ("chords", True), ("lyrics", True)],
    "note": [("time", True), ("pitch", True), ("duration", True), ("velocity", True)],
    "chord": [("time", True), ("pitches", True), ("duration", True), ("velocity", True)],
    "lyric": [("time", True), ("text", True)],
}


def _emit(kind, obj):
    out = {}
    for name, required in _FIELDS[kind]:
        value = getattr(obj, name)
        if value is None and not required:
            continue
        out[name] = value
    return out


def to_dict(music: Music) -> dict:
    """Plain nested-dict form of a (sorted, validated) Music."""
    music = sort(check_valid(music))
    doc = {"schema_version": SCHEMA_VERSION}
    doc["metadata"] = _emit("metadata", music.metadata)
    doc["resolution"] = music.resolution
    doc["tempos"] = [{"time": t.time, "qpm": float(t.qpm)} for t in music.tempos]
    doc["key_signatures"] = [_emit("key_signature", k) for k in music.key_signatures]
    doc["time_signatures"] = [_emit("time_signature", t) for t in music.time_signatures]
    tracks = []
    for track in music.tracks:
        item = _emit("track", track)
        item["notes"] = [_emit("note", n) for n in track.notes]
        item["chords"] = [
            {**_emit("chord", c), "pitches": list(c.pitches)} for c in track.chords]
        item["lyrics"] = [_emit("lyric", ly) for ly in track.lyrics]
        tracks.append(item)
    doc["tracks"] = tracks
    return doc


def save(music: Music) -> str:
    """Serialize ``music`` to its canonical JSON text.

    Raises
    ------
    ValidationError
        If ``music`` violates an invariant.
    """
    return json.dumps(to_dict(music), indent=2, ensure_ascii=False) + "\n"


def _take(kind, data, path):
    if not isinstance(data, dict):
        raise SchemaError(f"expected an object, got {type(data).__name__}", path)
    known = {name for name, _ in _FIELDS[kind]}
    for key in data:
        if key not in known:
            raise SchemaError(f"unknown key {key!r}", f"{path}.{key}" if path else key)
    values = {}
    for name, required in _FIELDS[kind]:
        if name in data:
            values[name] = data[name]
        elif required:
            raise SchemaError(f"missing required key {name!r}", path or "<root>")
    return values


def _list(data, path):
    if not isinstance(data, list):
        raise SchemaError(f"expected a list, got {type(data).__name__}", path)
    return data


def from_dict(doc) -> Music:
    """Build a validated Music from the nested-dict document form."""
    values = _take("music", doc, "")
    if values["schema_version"] != SCHEMA_VERSION:
        raise VersionError(
            f"unsupported schema_version {values['schema_version']!r}, "
            f"expected {SCHEMA_VERSION!r}")
    meta = _take("metadata", values["metadata"], "metadata")
    music = Music(
        metadata=Metadata(schema_version=values["schema_version"], **meta),
        resolution=values["resolution"],
        tempos=[Tempo(**_take("tempo", t, f"tempos[{i}]"))
                for i, t in enumerate(_list(values["tempos"], "tempos"))],
        key_signatures=[
            KeySignature(**_take("key_signature", k, f"key_signatures[{i}]"))
            for i, k in enumerate(_list(values["key_signatures"], "key_signatures"))],
        time_signatures=[
            TimeSignature(**_take("time_signature", t, f"time_signatures[{i}]"))
            for i, t in enumerate(_list(values["time_signatures"], "time_signatures"))],
    )
    for i, item in enumerate(_list(values["tracks"], "tracks")):
        path = f"tracks[{i}]"
        fields = _take("track", item, path)
        track = Track(program=fields["program"], is_drum=fields["is_drum"],
                      name=fields.get("name"))
        track.notes = [Note(**_take("note", n, f"{path}.notes[{j}]"))
                       for j, n in enumerate(_list(fields["notes"], f"{path}.notes"))]
        for j, c in enumerate(_list(fields["chords"], f"{path}.chords")):
            chord = _take("chord", c, f"{path}.chords[{j}]")
            chord["pitches"] = list(_list(chord["pitches"], f"{path}.chords[{j}].pitches"))
            track.chords.append(Chord(**chord))
        track.lyrics = [Lyric(**_take("lyric", ly, f"{path}.lyrics[{j}]"))
                        for j, ly in enumerate(_list(fields["lyrics"], f"{path}.lyrics"))]
        music.tracks.append(track)
    for tempo in music.tempos:
        if isinstance(tempo.qpm, int) and not isinstance(tempo.qpm, bool):
            tempo.qpm = float(tempo.qpm)
    return sort(check_valid(music))


def load(text) -> Music:
    """Parse a canonical JSON document.

    Raises
    ------
    ParseError
        Malformed JSON, with line and column.
    VersionError
        ``schema_version`` differs from the library's.
    SchemaError
        Unknown or missing key, or wrong container type; names the path.
    ValidationError
        Well-formed document describing invalid music.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return from_dict(doc)


def save_file(music: Music, path) -> None:
    Path(path).write_text(save(music), encoding="utf-8", newline="\n")


def load_file(path) -> Music:
    return load(Path(path).read_text(encoding="utf-8"))
