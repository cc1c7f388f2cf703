import json

import pytest
from hypothesis import given

from notekit.core import Music, Note, Tempo, Track, sort
from notekit.errors import ParseError, SchemaError, ValidationError, VersionError
from notekit.serialization import from_dict, load, load_file, save, save_file, to_dict

from strategies import any_music


@given(any_music())
def test_save_load_identity(music):
    text = save(music)
    assert load(text) == sort(music)
    assert save(load(text)) == text


def test_document_layout():
    music = Music(tempos=[Tempo(0, 120)], tracks=[Track(notes=[Note(0, 60, 24)])])
    text = save(music)
    assert text.endswith("}\n")
    doc = json.loads(text)
    assert list(doc) == ["schema_version", "metadata", "resolution", "tempos",
                         "key_signatures", "time_signatures", "tracks"]
    assert doc["schema_version"] == "1.0"
    assert doc["tempos"] == [{"time": 0, "qpm": 120.0}]
    assert "title" not in doc["metadata"]
    assert doc["tracks"][0]["notes"] == [{"time": 0, "pitch": 60, "duration": 24,
                                          "velocity": 64}]


def test_load_reports_line_and_column():
    with pytest.raises(ParseError) as info:
        load('{\n  "schema_version": "1.0",\n  oops\n}')
    assert info.value.line == 3


def test_load_rejects_other_versions():
    doc = to_dict(Music())
    doc["schema_version"] = "2.0"
    with pytest.raises(VersionError):
        from_dict(doc)


def test_unknown_key_names_path():
    doc = to_dict(Music(tracks=[Track(notes=[Note(0, 60, 1)])]))
    doc["tracks"][0]["notes"][0]["colour"] = "red"
    with pytest.raises(SchemaError) as info:
        from_dict(doc)
    assert "tracks[0].notes[0]" in str(info.value)


def test_missing_key_is_schema_error():
    doc = to_dict(Music())
    del doc["resolution"]
    with pytest.raises(SchemaError):
        from_dict(doc)


def test_invalid_values_fail_validation():
    doc = to_dict(Music())
    doc["resolution"] = 0
    with pytest.raises(ValidationError):
        from_dict(doc)


def test_file_round_trip(tmp_path):
    music = Music(tracks=[Track(name="Ünïcode ♪", notes=[Note(0, 60, 1)])])
    path = tmp_path / "song.muspy.json"
    save_file(music, path)
    assert load_file(path) == music
