"""ABC notation reader (single-voice subset, v1.6 to 2.1).

Timing is purely duration driven: every note, chord and rest advances the
clock by its length and bar lines only reset accidentals. Repeats are read
as a single pass. All tunes use a fixed resolution of 24 ticks per quarter.
"""
from __future__ import annotations

import re
from collections import Counter
from fractions import Fraction
from pathlib import Path
from typing import List, Tuple

from .core import (
    DEFAULT_VELOCITY, KeySignature, Metadata, Music, Note, Tempo, TimeSignature,
    Track, check_valid, sort,
)
from .errors import ParseError, SchemaError, UnsupportedFeatureError

RESOLUTION = 24
TICKS_PER_WHOLE = 4 * RESOLUTION

_NOTE_BASE = {"C": 60, "D": 62, "E": 64, "F": 65, "G": 67, "A": 69, "B": 71}
_LETTER_PC = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
# accidentals in key-signature order
_SHARP_ORDER = "FCGDAEB"
_FLAT_ORDER = "BEADGCF"
_MAJOR_SHARPS = {"C": 0, "G": 1, "D": 2, "A": 3, "E": 4, "B": 5, "F": -1}
_MODE_OFFSET = {"maj": 0, "ion": 0, "min": -3, "aeo": -3, "m": -3, "mix": -1,
                "dor": -2, "phr": -4, "lyd": 1, "loc": -5}
_MINOR_LIKE = {"min", "aeo", "m", "dor", "phr", "loc"}
_DECORATIONS = set(".~HLMOPSTuv")
_FIELD = re.compile(r"^([A-Za-z+]):(.*)$")
_KEY = re.compile(r"^([A-Ga-g])([#b]?)\s*([A-Za-z]*)")
_LENGTH = re.compile(r"(\d*)(/*)(\d*)")
_NOTE = re.compile(r"(\^\^|\^|__|_|=)?([A-Ga-g])([',]*)")
_TUPLET = re.compile(r"\((\d+)(?::(\d*))?(?::(\d*))?")
_BAR = re.compile(r"[|:\]]+\s*(\[?\d+([,-]\d+)*)?")
_INLINE_FIELD = re.compile(r"\[([A-Za-z]):([^\]]*)\]")
_ENDING = re.compile(r"\[\d+([,-]\d+)*")
_DIGITS = re.compile(r"\d*")
_BROKEN = re.compile(r"<+|>+")


def scan_tunes(text) -> List[Tuple[int, Tuple[int, int]]]:
    """Locate tunes in a (possibly multi-tune) ABC file.

    Returns ``(reference number, (start, end))`` character spans. Each span
    runs from its ``X:`` line to the next ``X:`` line or the end of text.
    """
    text = _decode(text)
    starts = [m.start() for m in re.finditer(r"(?m)^X:", text)]
    spans = []
    for i, start in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else len(text)
        line = text[start:text.find("\n", start) if "\n" in text[start:] else end]
        digits = re.match(r"X:\s*(\d+)", line)
        spans.append((int(digits.group(1)) if digits else 0, (start, end)))
    return spans


def _decode(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError:
            return bytes(text).decode("latin-1")
    return text


def parse_meter(value: str):
    """``(numerator, denominator)`` for an M: field, None for free meter."""
    value = value.strip()
    if value == "C":
        return 4, 4
    if value == "C|":
        return 2, 2
    if value.lower() in ("none", ""):
        return None
    match = re.match(r"^\(?([\d+]+)\)?\s*/\s*(\d+)", value)
    if not match:
        raise ValueError(f"unrecognized meter {value!r}")
    numerator = sum(int(x) for x in match.group(1).split("+") if x)
    return numerator, int(match.group(2))


def parse_key(value: str):
    """Parse a K: field.

    Returns ``(tonic pitch class, mode, accidentals)`` where accidentals maps
    note letters to semitone alterations, or None when the field carries no
    tonic (``K:none`` or a bare clef).
    """
    value = value.split("%", 1)[0].strip()
    tokens = value.split()
    if not tokens or tokens[0].lower() == "none" or "=" in tokens[0]:
        return None
    first = tokens[0]
    if first in ("HP", "Hp"):
        # highland pipes; Hp is written with F and C sharp
        return 2, "mix", ({} if first == "HP" else {"F": 1, "C": 1})
    match = _KEY.match(value)
    if not match:
        raise ValueError(f"unrecognized key {value!r}")
    letter, accidental, mode_word = match.groups()
    letter = letter.upper()
    mode = "m" if mode_word.lower() == "m" else mode_word.lower()[:3]
    if mode not in _MODE_OFFSET:
        mode = "maj"  # no mode, or a keyword such as clef= / exp
    shift = {"#": 1, "b": -1, "": 0}[accidental]
    sharps = _MAJOR_SHARPS[letter] + 7 * shift + _MODE_OFFSET[mode]
    accidentals = {}
    if sharps > 0:
        for i, l in enumerate(_SHARP_ORDER * 2):
            if i < sharps:
                accidentals[l] = accidentals.get(l, 0) + 1
    elif sharps < 0:
        for i, l in enumerate(_FLAT_ORDER * 2):
            if i < -sharps:
                accidentals[l] = accidentals.get(l, 0) - 1
    # explicit extra accidentals, e.g. "K:D exp ^f _b"
    for token in tokens[1:]:
        extra = re.match(r"^(\^\^|\^|__|_|=)([A-Ga-g])$", token)
        if extra:
            accidentals[extra.group(2).upper()] = {"^^": 2, "^": 1, "__": -2, "_": -1,
                                                   "=": 0}[extra.group(1)]
    return (_LETTER_PC[letter] + shift) % 12, mode, accidentals


def parse_length(text: str) -> Fraction:
    """Multiplier for a note length suffix such as ``3``, ``/2``, ``3/2``, ``//``."""
    match = _LENGTH.fullmatch(text)
    if not match:
        raise ValueError(f"bad length {text!r}")
    num_text, slashes, den_text = match.groups()
    numerator = int(num_text) if num_text else 1
    if not slashes:
        if den_text:
            raise ValueError(f"bad length {text!r}")
        return Fraction(numerator)
    if den_text:
        denominator = int(den_text) * 2 ** (len(slashes) - 1)
    else:
        denominator = 2 ** len(slashes)
    if denominator == 0:
        raise ValueError(f"zero denominator in length {text!r}")
    return Fraction(numerator, denominator)


class _NoteRecord:
    __slots__ = ("start", "length", "pitch")

    def __init__(self, start, length, pitch):
        self.start, self.length, self.pitch = start, length, pitch

    @property
    def end(self):
        return self.start + self.length


class _TuneParser:
    def __init__(self, text: str, base: int, ref: int):
        self.text = text
        self.base = base
        self.ref = ref
        self.diagnostics = Counter()
        self.metadata = Metadata(source_format="abc")
        self.meter = None
        self.unit = None
        self.key_acc = {}
        self.bar_acc = {}
        self.time = Fraction(0)  # whole notes
        self.notes: List[_NoteRecord] = []
        self.tempos, self.keys, self.time_signatures = [], [], []
        self.pending_ties = {}
        self.last_group = None  # (start, records, advance, is_rest)
        self.broken_next = Fraction(1)
        self.tuplet_left = 0
        self.tuplet_factor = Fraction(1)
        self.pending_q = None
        self.rest_total = Fraction(0)

    def error(self, message, offset):
        return ParseError(f"tune X:{self.ref}: {message}", offset=self.base + offset)

    # -- fields ---------------------------------------------------------
    def field(self, name, value, offset, in_body):
        value = value.split("%", 1)[0].strip() if name not in "TCw" else value.strip()
        if name == "T":
            if self.metadata.title is None and value:
                self.metadata.title = value
        elif name == "C":
            if value:
                self.metadata.creators.append(value)
        elif name == "M":
            try:
                self.meter = parse_meter(value)
            except ValueError:
                self.diagnostics["unrecognized_meter"] += 1
                return
            if self.meter is not None:
                numerator, denominator = self.meter
                if denominator in (1, 2, 4, 8, 16, 32, 64) and numerator >= 1:
                    self.time_signatures.append(
                        (self.time, numerator, denominator))
                else:
                    self.diagnostics["unsupported_meter"] += 1
        elif name == "L":
            try:
                unit = Fraction(value.replace(" ", ""))
            except (ValueError, ZeroDivisionError):
                raise self.error(f"bad unit note length {value!r}", offset) from None
            if unit <= 0:
                raise self.error(f"bad unit note length {value!r}", offset)
            self.unit = unit
        elif name == "Q":
            if in_body and self.unit is None:
                self.unit = self.default_unit()
            self.tempo(value)
        elif name == "K":
            if self.unit is None:
                self.unit = self.default_unit()
            try:
                key = parse_key(value)
            except ValueError:
                self.diagnostics["unrecognized_key"] += 1
                return
            if key is not None:
                root, mode, accidentals = key
                self.key_acc = accidentals
                self.keys.append((self.time, root, "minor" if mode in _MINOR_LIKE else "major"))
                if mode not in ("maj", "ion", "min", "aeo", "m"):
                    self.diagnostics["modal_key"] += 1
            elif value.strip().lower().startswith("none"):
                self.key_acc = {}
        elif name == "V":
            raise UnsupportedFeatureError(
                f"tune X:{self.ref}: multi-voice (V:) tunes are not supported")
        elif name in "wW":
            self.diagnostics["lyrics_skipped"] += 1

    def default_unit(self):
        if self.meter is None:
            return Fraction(1, 8)
        numerator, denominator = self.meter
        return Fraction(1, 8) if numerator / denominator >= 0.75 else Fraction(1, 16)

    def tempo(self, value):
        if self.pending_q is None and self.unit is None:
            # Q: before L:/K: in the header, resolved once the unit is known
            self.pending_q = value
            return
        body = re.sub(r'"[^"]*"', " ", value).strip()
        try:
            if "=" in body:
                left, right = body.split("=", 1)
                rate = float(right.split()[0])
                beats = Fraction(0)
                for token in left.split():
                    if token.upper().startswith("C"):
                        beats += self.unit * (int(token[1:]) if token[1:] else 1)
                    else:
                        beats += Fraction(token)
            else:
                rate = float(body)
                beats = self.unit
        except (ValueError, IndexError, ZeroDivisionError):
            self.diagnostics["unrecognized_tempo"] += 1
            return
        qpm = rate * float(beats) * 4
        if qpm > 0:
            self.tempos.append((self.time, qpm))
        else:
            self.diagnostics["unrecognized_tempo"] += 1

    # -- music ----------------------------------------------------------
    def emit(self, records_spec, multiplier, offset, is_rest=False):
        """Place one note, chord or rest at the current time."""
        factor = multiplier * self.unit * self.broken_next
        self.broken_next = Fraction(1)
        if self.tuplet_left:
            factor *= self.tuplet_factor
            self.tuplet_left -= 1
        start = self.time
        records = []
        used_ties = set()
        advance = None
        for pitch, inner in records_spec:
            length = factor * inner
            if advance is None:
                advance = length
            pending = self.pending_ties.get(pitch)
            if pending is not None and pending.end == start:
                pending.length += length
                records.append(pending)
                used_ties.add(pitch)
                continue
            record = _NoteRecord(start, length, pitch)
            self.notes.append(record)
            records.append(record)
        if advance is None:
            advance = factor
        if is_rest:
            self.rest_total += advance
        self.pending_ties = {}
        self.time = start + advance
        self.last_group = (start, records, advance, is_rest)

    def adjust_last(self, ratio):
        start, records, advance, is_rest = self.last_group
        new_advance = advance * ratio
        for record in records:
            record.length += new_advance - advance
        if is_rest:
            self.rest_total += new_advance - advance
        self.time = start + new_advance
        self.last_group = (start, records, new_advance, is_rest)

    def pitch(self, accidental, letter, marks, offset):
        natural = _NOTE_BASE[letter.upper()] + (12 if letter.islower() else 0)
        natural += 12 * marks.count("'") - 12 * marks.count(",")
        slot = (letter.upper(), natural)
        if accidental:
            alter = {"^": 1, "^^": 2, "_": -1, "__": -2, "=": 0}.get(accidental)
            if alter is None:
                raise self.error(f"bad accidental {accidental!r}", offset)
            self.bar_acc[slot] = alter
        else:
            alter = self.bar_acc.get(slot, self.key_acc.get(letter.upper(), 0))
        value = natural + alter
        if not 0 <= value <= 127:
            raise self.error(f"pitch {value} outside MIDI range", offset)
        return value

    def read_note(self, line, i, offset):
        """Parse accidental+letter+octave at ``line[i]``; returns (pitch, length, i)."""
        match = _NOTE.match(line, i)
        if not match:
            raise self.error(f"expected a note, found {line[i:i + 1]!r}", offset + i)
        pitch = self.pitch(match.group(1), match.group(2), match.group(3), offset + i)
        i = match.end()
        length_match = _LENGTH.match(line, i)
        length_text = length_match.group(0)
        try:
            length = parse_length(length_text) if length_text else Fraction(1)
        except ValueError:
            raise self.error(f"bad note length {length_text!r}", offset + i) from None
        return pitch, length, length_match.end()

    def music_line(self, line, offset):
        i, n = 0, len(line)
        while i < n:
            c = line[i]
            if c in " \t`\r\\y":
                i += 1
            elif c == "%":
                break
            elif c == '"':
                close = line.find('"', i + 1)
                if close < 0:
                    raise self.error("unterminated annotation", offset + i)
                self.diagnostics["annotation_skipped"] += 1
                i = close + 1
            elif c in "!+":
                close = line.find(c, i + 1)
                if close < 0:
                    i += 1
                else:
                    i = close + 1
                self.diagnostics["decoration_skipped"] += 1
            elif c == "{":
                close = line.find("}", i + 1)
                if close < 0:
                    raise self.error("unterminated grace notes", offset + i)
                self.diagnostics["grace_note_skipped"] += 1
                i = close + 1
            elif c in _DECORATIONS:
                self.diagnostics["decoration_skipped"] += 1
                i += 1
            elif c == "(":
                match = _TUPLET.match(line, i)
                if match:
                    self.start_tuplet(*match.groups())
                    i = match.end()
                else:
                    i += 1
            elif c == ")":
                i += 1
            elif c == "[":
                i = self.bracket(line, i, offset)
            elif c in "|:":
                match = _BAR.match(line, i)
                self.bar_acc = {}
                i = match.end()
            elif c == "]":
                i += 1
            elif c in "<>":
                count = len(_BROKEN.match(line, i).group(0))
                if self.last_group is None:
                    raise self.error("broken rhythm without a preceding note", offset + i)
                dotted = 2 - Fraction(1, 2 ** count)
                short = Fraction(1, 2 ** count)
                if c == ">":
                    self.adjust_last(dotted)
                    self.broken_next = short
                else:
                    self.adjust_last(short)
                    self.broken_next = dotted
                i += count
            elif c == "-":
                if self.last_group is None or self.last_group[3]:
                    self.diagnostics["dangling_tie"] += 1
                else:
                    for record in self.last_group[1]:
                        self.pending_ties[record.pitch] = record
                i += 1
            elif c == "&":
                raise UnsupportedFeatureError(
                    f"tune X:{self.ref}: voice overlay (&) is not supported")
            elif c in "zx":
                length_match = _LENGTH.match(line, i + 1)
                try:
                    length = parse_length(length_match.group(0)) \
                        if length_match.group(0) else Fraction(1)
                except ValueError:
                    raise self.error("bad rest length", offset + i) from None
                self.emit([], length, offset + i, is_rest=True)
                i = length_match.end()
            elif c in "ZX":
                match = _DIGITS.match(line, i + 1)
                bars = int(match.group(0)) if match.group(0) else 1
                numerator, denominator = self.meter or (4, 4)
                self.emit([], Fraction(bars * numerator, denominator) / self.unit,
                          offset + i, is_rest=True)
                i = match.end()
            elif c in "^_=" or c.upper() in _NOTE_BASE:
                pitch, length, i = self.read_note(line, i, offset)
                self.emit([(pitch, Fraction(1))], length, offset + i)
            else:
                raise self.error(f"unexpected character {c!r}", offset + i)

    def start_tuplet(self, p, q, r):
        p = int(p)
        if p < 2:
            return
        if q:
            q = int(q)
        elif p in (3, 6):
            q = 2
        elif p in (2, 4, 8):
            q = 3
        else:
            compound = self.meter is not None and self.meter[0] % 3 == 0 and self.meter[0] > 3
            q = 3 if compound else 2
        self.tuplet_factor = Fraction(q, p)
        self.tuplet_left = int(r) if r else p

    def bracket(self, line, i, offset):
        field = _INLINE_FIELD.match(line, i)
        if field:
            self.field(field.group(1), field.group(2), offset + i, in_body=True)
            return field.end()
        ending = _ENDING.match(line, i)
        if ending:
            return ending.end()
        if line.startswith("[|", i):
            self.bar_acc = {}
            return i + 2
        close = line.find("]", i + 1)
        if close < 0:
            raise self.error("unterminated chord", offset + i)
        inner = line[i + 1:close]
        specs = []
        j = 0
        while j < len(inner):
            if inner[j] in " \t":
                j += 1
                continue
            if inner[j] in _DECORATIONS or inner[j] == "-":
                j += 1
                continue
            pitch, length, j = self.read_note(inner, j, offset + i + 1)
            specs.append((pitch, length))
        if not specs:
            raise self.error("empty chord", offset + i)
        length_match = _LENGTH.match(line, close + 1)
        try:
            outer = parse_length(length_match.group(0)) if length_match.group(0) else Fraction(1)
        except ValueError:
            raise self.error("bad chord length", offset + close + 1) from None
        self.emit(specs, outer, offset + i)
        return length_match.end()

    # -- driver ---------------------------------------------------------
    def parse(self) -> Music:
        lines = self.text.splitlines(keepends=True)
        offset = 0
        in_body = False
        for raw in lines:
            line = raw.rstrip("\r\n")
            line_offset = offset
            offset += len(raw)
            if line.startswith("%"):
                continue
            if in_body and not line.strip():
                break  # blank line ends the tune
            field = _FIELD.match(line)
            if field:
                name, value = field.groups()
                if not in_body and name == "X":
                    continue
                self.field(name, value, line_offset, in_body)
                if name == "K" and not in_body:
                    in_body = True
                    if self.pending_q is not None:
                        value, self.pending_q = self.pending_q, None
                        self.tempo(value)
                continue
            if not in_body:
                if not line.strip():
                    continue
                raise SchemaError(f"tune X:{self.ref}: music before K: field", "K")
            self.music_line(line, line_offset)
        if not in_body:
            raise SchemaError(f"tune X:{self.ref}: missing K: field", "K")
        if self.pending_ties:
            self.diagnostics["unterminated_tie"] += len(self.pending_ties)
        return self.build()

    def build(self) -> Music:
        def ticks(whole):
            exact = whole * TICKS_PER_WHOLE
            if exact.denominator != 1:
                self.diagnostics["inexact_duration"] += 1
            return int((2 * exact.numerator + exact.denominator) // (2 * exact.denominator))

        notes = []
        for record in self.notes:
            onset = ticks(record.start)
            notes.append(Note(onset, record.pitch, ticks(record.end) - onset,
                              DEFAULT_VELOCITY))
        music = Music(metadata=self.metadata, resolution=RESOLUTION,
                      tracks=[Track(notes=notes)])
        music.tempos = [Tempo(ticks(t), qpm) for t, qpm in self.tempos]
        music.key_signatures = [KeySignature(ticks(t), root, mode)
                                for t, root, mode in self.keys]
        music.time_signatures = [TimeSignature(ticks(t), num, den)
                                 for t, num, den in self.time_signatures]
        self.diagnostics["elapsed_ticks"] = ticks(self.time)
        self.diagnostics["rest_ticks"] = ticks(self.rest_total)
        result = sort(check_valid(music))
        result.diagnostics = self.diagnostics
        return result


def read_abc(text) -> List[Music]:
    """Parse every tune in an ABC document, one Music per ``X:`` field.

    Raises
    ------
    SchemaError
        A tune lacks its K: field.
    ParseError
        Unparseable token; the message names the tune and the character
        offset into ``text``.
    UnsupportedFeatureError
        Multi-voice tunes.
    """
    text = _decode(text)
    tunes = []
    for ref, (start, end) in scan_tunes(text):
        tunes.append(_TuneParser(text[start:end], start, ref).parse())
    return tunes


def read_abc_file(path) -> List[Music]:
    tunes = read_abc(Path(path).read_bytes())
    for tune in tunes:
        tune.metadata.source_filename = Path(path).name
    return tunes
