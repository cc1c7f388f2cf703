"""MusicXML (score-partwise) reader and writer, plus ``.mxl`` containers.

Only the playback-relevant subset is read: notes, rests, chords, ties,
backup/forward, key and time signatures, tempo and dynamics. Repeats and
endings are read as a single pass.
"""
from __future__ import annotations

import io
import math
import zipfile
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    DEFAULT_VELOCITY, KeySignature, Lyric, Metadata, Music, Note, Tempo,
    TimeSignature, Track, check_valid, sort,
)
from .errors import ArchiveError, ParseError, SchemaError, UnsupportedFeatureError
from .midi import key_from_sharps, sharps_from_key

SEMITONES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
STEPS = ["C", "C", "D", "D", "E", "F", "F", "G", "G", "A", "A", "B"]
ALTERS = [0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0]
# beat-unit name -> length in quarter notes
BEAT_UNITS = {
    "whole": 4.0, "half": 2.0, "quarter": 1.0, "eighth": 0.5, "16th": 0.25,
    "32nd": 0.125, "64th": 0.0625, "breve": 8.0,
}
DYNAMICS_SCALE = 90 / 100  # MusicXML dynamics are percent of forte = velocity 90


def pitch_to_midi(step: str, alter: int, octave: int) -> int:
    """MIDI number of a MusicXML pitch; middle C (C4) is 60."""
    try:
        semitone = SEMITONES[step.upper()]
    except KeyError:
        raise SchemaError(f"invalid pitch step {step!r}") from None
    value = (octave + 1) * 12 + semitone + alter
    if not 0 <= value <= 127:
        raise ValueError(f"pitch {step}{alter:+d}/{octave} maps outside 0-127: {value}")
    return value


@dataclass
class PartState:
    divisions: int = 0
    time: int = 0
    last_onset: int = 0
    velocity: int = DEFAULT_VELOCITY
    # pitch -> notes awaiting a tie continuation
    pending: dict = field(default_factory=lambda: defaultdict(list))


def _text(element, path, default=None):
    child = element.find(path)
    if child is None or child.text is None:
        return default
    return child.text.strip()


def _number(text, path):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise SchemaError(f"expected a number, got {text!r}", path) from None


def _strip_namespaces(root):
    for element in root.iter():
        if isinstance(element.tag, str) and "}" in element.tag:
            element.tag = element.tag.split("}", 1)[1]


def _all_divisions(root):
    values = []
    for element in root.iter("divisions"):
        value = _number(element.text, "divisions")
        if value <= 0 or value != int(value):
            raise SchemaError(f"divisions must be a positive integer, got {element.text!r}",
                              "divisions")
        values.append(int(value))
    return values


class _PartReader:
    def __init__(self, part, resolution, diagnostics, first_part):
        self.part = part
        self.resolution = resolution
        self.diagnostics = diagnostics
        self.read_signatures = first_part
        self.state = PartState()
        self.notes = []
        self.lyrics = []
        self.tempos = []
        self.keys = []
        self.time_signatures = []
        self.measure_length = None

    def ticks(self, divisions_text, path):
        if self.state.divisions == 0:
            raise SchemaError("duration given before any divisions", path)
        value = _number(divisions_text, path)
        scaled = value * self.resolution / self.state.divisions
        if scaled != int(scaled):
            self.diagnostics["fractional_duration"] += 1
        return int(math.floor(scaled + 0.5))

    def run(self):
        for number, measure in enumerate(self.part.findall("measure")):
            start = self.state.time
            high = start
            for element in measure:
                handler = getattr(self, "_" + element.tag.replace("-", "_"), None)
                if handler is not None:
                    handler(element)
                high = max(high, self.state.time)
            self.state.time = high
            if self.measure_length is not None and number > 0 and \
                    high - start not in (0, self.measure_length):
                self.diagnostics["irregular_measure"] += 1
        for notes in self.state.pending.values():
            if notes:
                self.diagnostics["unterminated_tie"] += len(notes)

    def _attributes(self, element):
        divisions = _text(element, "divisions")
        if divisions is not None:
            self.state.divisions = int(float(divisions))
        for key in element.findall("key"):
            fifths = _text(key, "fifths")
            if fifths is None:
                self.diagnostics["non_traditional_key"] += 1
                continue
            mode = _text(key, "mode", "major")
            if mode not in ("major", "minor"):
                self.diagnostics["modal_key_as_major"] += 1
                mode = "major"
            root = key_from_sharps(int(float(fifths)), mode == "minor")
            if self.read_signatures:
                self.keys.append(KeySignature(self.state.time, root, mode))
        for time in element.findall("time"):
            beats, beat_type = _text(time, "beats"), _text(time, "beat-type")
            if beats is None or beat_type is None:
                self.diagnostics["unmetered_time"] += 1
                continue
            try:
                numerator = sum(int(b) for b in beats.split("+"))
                denominator = int(beat_type)
            except ValueError:
                self.diagnostics["unsupported_time_signature"] += 1
                continue
            if denominator not in (1, 2, 4, 8, 16, 32, 64) or numerator < 1:
                self.diagnostics["unsupported_time_signature"] += 1
                continue
            self.measure_length = numerator * 4 * self.resolution // denominator
            if self.read_signatures:
                self.time_signatures.append(
                    TimeSignature(self.state.time, numerator, denominator))

    def _backup(self, element):
        self.state.time = max(self.state.time - self.ticks(_text(element, "duration"),
                                                           "backup/duration"), 0)

    def _forward(self, element):
        self.state.time += self.ticks(_text(element, "duration"), "forward/duration")

    def _sound(self, element):
        tempo = element.get("tempo")
        if tempo is not None:
            qpm = _number(tempo, "sound@tempo")
            if qpm > 0:
                self.tempos.append(Tempo(self.state.time, qpm))
        dynamics = element.get("dynamics")
        if dynamics is not None:
            self.state.velocity = _velocity(_number(dynamics, "sound@dynamics"))

    def _direction(self, element):
        for metronome in element.iter("metronome"):
            unit = _text(metronome, "beat-unit")
            per_minute = _text(metronome, "per-minute")
            if unit not in BEAT_UNITS or per_minute is None:
                self.diagnostics["unsupported_metronome"] += 1
                continue
            try:
                rate = float(per_minute)
            except ValueError:
                self.diagnostics["unsupported_metronome"] += 1
                continue
            quarters = BEAT_UNITS[unit]
            if metronome.find("beat-unit-dot") is not None:
                quarters *= 1.5
            if rate > 0:
                self.tempos.append(Tempo(self.state.time, rate * quarters))
        sound = element.find("sound")
        if sound is not None:
            self._sound(sound)

    def _note(self, element):
        state = self.state
        if element.find("grace") is not None:
            self.diagnostics["grace_note_skipped"] += 1
            return
        if element.find("cue") is not None:
            self.diagnostics["cue_note_skipped"] += 1
            return
        duration_text = _text(element, "duration")
        if duration_text is None:
            raise SchemaError("note without duration", "note/duration")
        duration = self.ticks(duration_text, "note/duration")
        if element.find("chord") is not None:
            onset = state.last_onset
        else:
            onset = state.time
            state.last_onset = onset
            state.time += duration
        pitch_element = element.find("pitch")
        if element.find("rest") is not None or pitch_element is None:
            if element.find("unpitched") is not None:
                self.diagnostics["unpitched_note_skipped"] += 1
            return
        step = _text(pitch_element, "step")
        alter = round(_number(_text(pitch_element, "alter", "0"), "pitch/alter"))
        octave = int(_number(_text(pitch_element, "octave"), "pitch/octave"))
        pitch = pitch_to_midi(step, alter, octave)

        velocity = state.velocity
        if element.get("dynamics") is not None:
            velocity = _velocity(_number(element.get("dynamics"), "note@dynamics"))
        ties = {t.get("type") for t in element.findall("tie")}
        if not ties:
            ties = {t.get("type") for t in element.findall("notations/tied")}

        note = None
        if "stop" in ties:
            for candidate in state.pending[pitch]:
                if candidate.end == onset:
                    note = candidate
                    state.pending[pitch].remove(candidate)
                    note.duration = onset + duration - note.time
                    break
            else:
                self.diagnostics["orphan_tie_stop"] += 1
        if note is None:
            note = Note(onset, pitch, duration, velocity)
            self.notes.append(note)
        if "start" in ties:
            state.pending[pitch].append(note)
        for lyric in element.findall("lyric"):
            text = _text(lyric, "text")
            if text:
                self.lyrics.append(Lyric(onset, text))


def _velocity(dynamics: float) -> int:
    return int(min(max(math.floor(dynamics * DYNAMICS_SCALE + 0.5), 0), 127))


def _part_info(root):
    info = {}
    for score_part in root.iter("score-part"):
        part_id = score_part.get("id")
        program, is_drum = 0, False
        instrument = score_part.find("midi-instrument")
        if instrument is not None:
            midi_program = _text(instrument, "midi-program")
            if midi_program is not None:
                program = min(max(int(float(midi_program)) - 1, 0), 127)
            is_drum = _text(instrument, "midi-channel") == "10"
        info[part_id] = (_text(score_part, "part-name"), program, is_drum)
    return info


def read_musicxml(text) -> Music:
    """Parse a score-partwise MusicXML document.

    The resolution is the least common multiple of every ``divisions``
    value in the score, so durations convert to whole ticks.

    Raises
    ------
    ParseError
        Malformed XML.
    UnsupportedFeatureError
        score-timewise documents.
    SchemaError
        Missing divisions or malformed required elements.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(f"malformed XML: {exc}", line=line, column=column) from None
    _strip_namespaces(root)
    if root.tag == "score-timewise":
        raise UnsupportedFeatureError("score-timewise MusicXML is not supported")
    if root.tag != "score-partwise":
        raise SchemaError(f"unexpected root element <{root.tag}>", root.tag)

    divisions = _all_divisions(root)
    parts = root.findall("part")
    if not divisions:
        if any(n.find("duration") is not None for n in root.iter("note")):
            raise SchemaError("missing divisions", "attributes/divisions")
        divisions = [1]
    resolution = math.lcm(*divisions)

    diagnostics = Counter()
    metadata = Metadata(source_format="musicxml")
    metadata.title = _text(root, "work/work-title") or _text(root, "movement-title")
    metadata.creators = [c.text.strip() for c in root.findall("identification/creator")
                         if c.text and c.text.strip()]
    metadata.copyright = _text(root, "identification/rights")
    music = Music(metadata=metadata, resolution=resolution)

    info = _part_info(root)
    tempos = {}
    for index, part in enumerate(parts):
        reader = _PartReader(part, resolution, diagnostics, first_part=index == 0)
        reader.run()
        name, program, is_drum = info.get(part.get("id"), (None, 0, False))
        music.tracks.append(Track(program=program, is_drum=is_drum, name=name,
                                  notes=reader.notes, lyrics=reader.lyrics))
        music.key_signatures += reader.keys
        music.time_signatures += reader.time_signatures
        for tempo in reader.tempos:
            if tempo.time in tempos:
                diagnostics["tempo_overridden"] += 1
            tempos[tempo.time] = tempo  # later marking wins at equal ticks
    music.tempos = list(tempos.values())
    if not parts:
        diagnostics["no_parts"] += 1
    result = sort(music)
    result.diagnostics = diagnostics
    return result


def read_mxl(data: bytes) -> Music:
    """Read a compressed MusicXML (``.mxl``) container."""
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except (zipfile.BadZipFile, OSError) as exc:
        raise ArchiveError(f"not a ZIP archive: {exc}") from None
    with archive:
        try:
            manifest = archive.read("META-INF/container.xml")
        except KeyError:
            raise ArchiveError("missing META-INF/container.xml") from None
        try:
            container = ET.fromstring(manifest)
        except ET.ParseError as exc:
            raise ArchiveError(f"malformed container manifest: {exc}") from None
        _strip_namespaces(container)
        rootfile = container.find(".//rootfile")
        if rootfile is None or not rootfile.get("full-path"):
            raise ArchiveError("container manifest names no rootfile")
        try:
            document = archive.read(rootfile.get("full-path"))
        except KeyError:
            raise ArchiveError(
                f"rootfile {rootfile.get('full-path')!r} missing from archive") from None
    return read_musicxml(document)


def _pitch_xml(parent, pitch):
    element = ET.SubElement(parent, "pitch")
    pc, octave = pitch % 12, pitch // 12 - 1
    ET.SubElement(element, "step").text = STEPS[pc]
    if ALTERS[pc]:
        ET.SubElement(element, "alter").text = str(ALTERS[pc])
    ET.SubElement(element, "octave").text = str(octave)


def _measure_bounds(music, end):
    """Measure start ticks from the time-signature map (4/4 when absent)."""
    starts = []
    changes = sorted(music.time_signatures, key=lambda t: t.time)
    length = 4 * music.resolution
    position, index = 0, 0
    while position < end or not starts:
        while index < len(changes) and changes[index].time <= position:
            ts = changes[index]
            length = max(ts.numerator * 4 * music.resolution // ts.denominator, 1)
            index += 1
        starts.append(position)
        nxt = position + length
        if index < len(changes) and changes[index].time < nxt:
            nxt = changes[index].time
        position = nxt
    return starts


def write_musicxml(music: Music) -> str:
    """Serialize ``music`` as a score-partwise MusicXML string.

    ``divisions`` equals the resolution. Notes crossing barlines are split
    and tied; overlapping notes are placed with ``<backup>``. Velocities
    become note ``dynamics`` attributes.
    """
    music = sort(check_valid(music))
    root = ET.Element("score-partwise", version="3.1")
    if music.metadata.title is not None:
        ET.SubElement(ET.SubElement(root, "work"), "work-title").text = music.metadata.title
    if music.metadata.creators or music.metadata.copyright is not None:
        ident = ET.SubElement(root, "identification")
        for creator in music.metadata.creators:
            ET.SubElement(ident, "creator", type="composer").text = creator
        if music.metadata.copyright is not None:
            ET.SubElement(ident, "rights").text = music.metadata.copyright
    part_list = ET.SubElement(root, "part-list")
    tracks = music.tracks or [Track()]
    end = max((n.end for n in music.notes()), default=0)
    starts = _measure_bounds(music, end)

    for index, track in enumerate(tracks):
        part_id = f"P{index + 1}"
        score_part = ET.SubElement(part_list, "score-part", id=part_id)
        ET.SubElement(score_part, "part-name").text = track.name or ""
        instrument = ET.SubElement(score_part, "midi-instrument", id=f"{part_id}-I1")
        ET.SubElement(instrument, "midi-channel").text = "10" if track.is_drum else "1"
        ET.SubElement(instrument, "midi-program").text = str(track.program + 1)

        part = ET.SubElement(root, "part", id=part_id)
        _write_part(part, music, track, starts, with_tempos=index == 0)
    ET.indent(root, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            '<!DOCTYPE score-partwise PUBLIC "-//Recordare//DTD MusicXML 3.1 Partwise//EN" '
            '"http://www.musicxml.org/dtds/partwise.dtd">\n' + body + "\n")


def _write_part(part, music, track, starts, with_tempos):
    bounds = starts + [None]
    notes = sorted(track.notes, key=lambda n: (n.time, n.pitch, n.duration))
    for number, (start, stop) in enumerate(zip(bounds, bounds[1:]), 1):
        measure = ET.SubElement(part, "measure", number=str(number))
        items = []  # (offset, order, payload)

        def inside(t):
            return t >= start and (stop is None or t < stop)

        offsets = sorted({e.time for e in (*music.key_signatures, *music.time_signatures)
                          if inside(e.time)} | ({start} if number == 1 else set()))
        for offset in offsets:
            keys = [k for k in music.key_signatures if k.time == offset]
            times = [t for t in music.time_signatures if t.time == offset]
            items.append((offset, 0, ("attributes", keys, times, number == 1 and
                                      offset == start)))
        if with_tempos:
            for tempo in music.tempos:
                if inside(tempo.time):
                    items.append((tempo.time, 1, ("tempo", tempo)))
        for note in notes:
            seg_start = max(note.time, start)
            seg_end = note.end if stop is None else min(note.end, stop)
            in_measure = inside(note.time)
            continues = note.time < start and note.end > start
            if not (in_measure or continues):
                continue
            tie_stop = note.time < start
            tie_start = stop is not None and note.end > stop
            items.append((seg_start, 2, ("note", note, seg_end - seg_start,
                                         tie_start, tie_stop)))
        cursor = start
        for offset, _, item in sorted(items, key=lambda x: (x[0], x[1])):
            if offset > cursor:
                ET.SubElement(ET.SubElement(measure, "forward"), "duration").text = \
                    str(offset - cursor)
            elif offset < cursor:
                ET.SubElement(ET.SubElement(measure, "backup"), "duration").text = \
                    str(cursor - offset)
            cursor = offset
            if item[0] == "attributes":
                _, keys, times, first = item
                attributes = ET.SubElement(measure, "attributes")
                if first:
                    ET.SubElement(attributes, "divisions").text = str(music.resolution)
                for key in keys:
                    element = ET.SubElement(attributes, "key")
                    minor = key.mode == "minor"
                    ET.SubElement(element, "fifths").text = str(sharps_from_key(key.root, minor))
                    ET.SubElement(element, "mode").text = key.mode
                for ts in times:
                    element = ET.SubElement(attributes, "time")
                    ET.SubElement(element, "beats").text = str(ts.numerator)
                    ET.SubElement(element, "beat-type").text = str(ts.denominator)
            elif item[0] == "tempo":
                direction = ET.SubElement(measure, "direction", placement="above")
                metro = ET.SubElement(ET.SubElement(direction, "direction-type"), "metronome")
                ET.SubElement(metro, "beat-unit").text = "quarter"
                ET.SubElement(metro, "per-minute").text = f"{item[1].qpm:g}"
                ET.SubElement(direction, "sound", tempo=repr(float(item[1].qpm)))
            else:
                _, note, length, tie_start, tie_stop = item
                element = ET.SubElement(
                    measure, "note", dynamics=f"{note.velocity / DYNAMICS_SCALE:.4f}")
                _pitch_xml(element, note.pitch)
                ET.SubElement(element, "duration").text = str(length)
                if tie_stop:
                    ET.SubElement(element, "tie", type="stop")
                if tie_start:
                    ET.SubElement(element, "tie", type="start")
                cursor += length
        if stop is not None and cursor < stop:
            ET.SubElement(ET.SubElement(measure, "forward"), "duration").text = \
                str(stop - cursor)
        elif stop is not None and cursor > stop:
            ET.SubElement(ET.SubElement(measure, "backup"), "duration").text = \
                str(cursor - stop)


def read_musicxml_file(path) -> Music:
    path = Path(path)
    data = path.read_bytes()
    music = read_mxl(data) if path.suffix.lower() == ".mxl" else read_musicxml(data)
    music.metadata.source_filename = path.name
    return music


def write_musicxml_file(music: Music, path) -> None:
    Path(path).write_text(write_musicxml(music), encoding="utf-8")
