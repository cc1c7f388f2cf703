"""Standard MIDI File (format 0/1) reader and writer."""
from __future__ import annotations

import struct
from collections import Counter, defaultdict, deque
from pathlib import Path
from typing import Tuple

from .core import (
    KeySignature, Lyric, Metadata, Music, Note, Tempo, TimeSignature, Track,
    check_valid, sort,
)
from .errors import (
    ChannelExhaustionError, FormatError, MalformedVLQError, TruncationError,
    UnsupportedFeatureError,
)

DRUM_CHANNEL = 9
MELODIC_CHANNELS = [c for c in range(16) if c != DRUM_CHANNEL]
MAX_VLQ = (1 << 28) - 1

# data bytes following a channel status, by high nibble
_DATA_LENGTH = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def read_vlq(data: bytes, offset: int = 0) -> Tuple[int, int]:
    """Decode a variable-length quantity starting at ``offset``.

    Returns the value and the number of bytes consumed.
    """
    value = 0
    for i in range(4):
        pos = offset + i
        if pos >= len(data):
            raise TruncationError(f"variable-length quantity truncated at byte {pos}")
        byte = data[pos]
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, i + 1
    raise MalformedVLQError(f"variable-length quantity at byte {offset} exceeds 4 bytes")


def write_vlq(value: int) -> bytes:
    """Encode a non-negative integer below 2**28 as a variable-length quantity."""
    if not 0 <= value <= MAX_VLQ:
        raise ValueError(f"value out of VLQ range: {value}")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def key_from_sharps(sharps: int, minor: bool) -> int:
    """Tonic pitch class of a key with ``sharps`` (negative for flats)."""
    return (sharps * 7 + (9 if minor else 0)) % 12


def sharps_from_key(root: int, minor: bool) -> int:
    """Smallest-magnitude accidental count whose key has tonic ``root``."""
    candidates = [s for s in range(-6, 7) if key_from_sharps(s, minor) == root]
    return min(candidates, key=lambda s: (abs(s), s))


def _chunks(data: bytes):
    pos = 0
    while pos < len(data):
        if pos + 8 > len(data):
            raise TruncationError(f"chunk header truncated at byte {pos}")
        kind = data[pos:pos + 4]
        (length,) = struct.unpack(">I", data[pos + 4:pos + 8])
        start = pos + 8
        if start + length > len(data):
            raise TruncationError(
                f"chunk {kind!r} at byte {pos} declares {length} bytes, "
                f"only {len(data) - start} available")
        yield kind, data[start:start + length], pos
        pos = start + length


class _TrackReader:
    """Walks one MTrk chunk and collects notes, metas and diagnostics."""

    def __init__(self, data: bytes, base: int, diagnostics: Counter):
        self.data = data
        self.base = base
        self.diagnostics = diagnostics
        self.notes = defaultdict(list)  # channel -> [Note]
        self.programs = {}
        self.open = defaultdict(deque)  # (channel, pitch) -> deque[(time, velocity)]
        self.first_note_program = {}
        self.tempos, self.keys, self.time_signatures = [], [], []
        self.name = None
        self.copyright = None
        self.lyrics = []
        self.time = 0

    def _need(self, pos, count):
        if pos + count > len(self.data):
            raise TruncationError(
                f"event truncated at byte {self.base + pos}")

    def run(self):
        data, pos, status = self.data, 0, None
        while pos < len(data):
            delta, used = read_vlq(data, pos)
            pos += used
            self.time += delta
            self._need(pos, 1)
            byte = data[pos]
            if byte == 0xFF:
                self._need(pos, 2)
                meta_type = data[pos + 1]
                length, used = read_vlq(data, pos + 2)
                start = pos + 2 + used
                self._need(start, length)
                payload = data[start:start + length]
                pos = start + length
                if meta_type == 0x2F:
                    break
                self._meta(meta_type, payload)
                continue
            if byte in (0xF0, 0xF7):
                length, used = read_vlq(data, pos + 1)
                self._need(pos + 1 + used, length)
                pos += 1 + used + length
                self.diagnostics["sysex_skipped"] += 1
                continue
            if byte & 0x80:
                if byte >= 0xF0:
                    raise FormatError(
                        f"unexpected system message 0x{byte:02X} at byte {self.base + pos}")
                status = byte
                pos += 1
            elif status is None:
                raise FormatError(
                    f"data byte without running status at byte {self.base + pos}")
            count = _DATA_LENGTH[status & 0xF0]
            self._need(pos, count)
            payload = data[pos:pos + count]
            pos += count
            if any(b & 0x80 for b in payload):
                raise FormatError(f"invalid data byte at byte {self.base + pos - count}")
            self._channel(status, payload)
        self._close_open()

    def _channel(self, status, payload):
        kind, channel = status & 0xF0, status & 0x0F
        if kind == 0x90 and payload[1] > 0:
            self.open[(channel, payload[0])].append((self.time, payload[1]))
            self.first_note_program.setdefault(channel, self.programs.get(channel, 0))
        elif kind == 0x80 or kind == 0x90:
            queue = self.open.get((channel, payload[0]))
            if not queue:
                self.diagnostics["unmatched_note_off"] += 1
                return
            onset, velocity = queue.popleft()
            self.notes[channel].append(
                Note(onset, payload[0], self.time - onset, velocity))
        elif kind == 0xC0:
            self.programs[channel] = payload[0]

    def _meta(self, meta_type, payload):
        if meta_type == 0x51:
            if len(payload) != 3:
                self.diagnostics["bad_tempo_event"] += 1
                return
            micros = int.from_bytes(payload, "big")
            if micros == 0:
                self.diagnostics["bad_tempo_event"] += 1
                return
            self.tempos.append(Tempo(self.time, 60e6 / micros))
        elif meta_type == 0x59:
            if len(payload) != 2 or payload[1] > 1:
                self.diagnostics["bad_key_event"] += 1
                return
            sharps = payload[0] - 256 if payload[0] > 127 else payload[0]
            minor = payload[1] == 1
            self.keys.append(KeySignature(
                self.time, key_from_sharps(sharps, minor), "minor" if minor else "major"))
            self.diagnostics["key_signature_events"] += 1
        elif meta_type == 0x58:
            if len(payload) < 2 or payload[0] == 0 or payload[1] > 6:
                self.diagnostics["bad_time_signature_event"] += 1
                return
            self.time_signatures.append(
                TimeSignature(self.time, payload[0], 2 ** payload[1]))
        elif meta_type == 0x03:
            if self.name is None:
                self.name = payload.decode("latin-1")
        elif meta_type == 0x02:
            self.copyright = payload.decode("latin-1")
        elif meta_type == 0x05:
            self.lyrics.append((self.time, payload.decode("latin-1")))

    def _close_open(self):
        for (channel, pitch), queue in self.open.items():
            while queue:
                onset, velocity = queue.popleft()
                self.notes[channel].append(Note(onset, pitch, self.time - onset, velocity))
                self.diagnostics["unterminated_note"] += 1


def read_midi(data: bytes) -> Music:
    """Parse a Standard MIDI File into a :class:`Music`.

    Note-on with zero velocity is a note-off. Note-offs close the earliest
    open note of the same pitch and channel; notes still open at the end of
    their track are closed there. One track is created per (file track,
    channel) pair that carries notes, and channel 10 (index 9) is drums.

    Raises
    ------
    FormatError
        Bad magic or malformed event stream.
    TruncationError
        A chunk or event runs past the end of the data.
    UnsupportedFeatureError
        SMPTE time division or format 2.
    """
    data = bytes(data)
    if data[:4] != b"MThd":
        raise FormatError("missing 'MThd' header chunk")
    chunks = _chunks(data)
    _, header, _ = next(chunks)
    if len(header) < 6:
        raise FormatError(f"header chunk too short: {len(header)} bytes")
    fmt, _, division = struct.unpack(">HHH", header[:6])
    if fmt == 2:
        raise UnsupportedFeatureError("SMF format 2 is not supported")
    if fmt > 2:
        raise FormatError(f"unknown SMF format {fmt}")
    if division & 0x8000:
        raise UnsupportedFeatureError("SMPTE time division is not supported")
    if division == 0:
        raise FormatError("time division of zero ticks per quarter")

    diagnostics = Counter()
    music = Music(metadata=Metadata(source_format="midi"), resolution=division)
    for kind, body, offset in chunks:
        if kind != b"MTrk":
            diagnostics["unknown_chunk"] += 1
            continue
        reader = _TrackReader(body, offset + 8, diagnostics)
        reader.run()
        music.tempos += reader.tempos
        music.key_signatures += reader.keys
        music.time_signatures += reader.time_signatures
        if reader.copyright is not None and music.metadata.copyright is None:
            music.metadata.copyright = reader.copyright
        first = None
        for channel in sorted(reader.notes):
            track = Track(
                program=reader.first_note_program[channel],
                is_drum=channel == DRUM_CHANNEL, name=reader.name,
                notes=reader.notes[channel])
            music.tracks.append(track)
            first = first or track
        if first is not None:
            first.lyrics = [Lyric(t, text) for t, text in reader.lyrics]
        elif reader.name is not None and music.metadata.title is None:
            # a note-less track name (usually the conductor track) titles the song
            music.metadata.title = reader.name
    result = sort(music)
    result.diagnostics = diagnostics
    return result


def _event_bytes(events):
    out = bytearray()
    last = 0
    for tick, _, raw in events:
        out += write_vlq(tick - last) + raw
        last = tick
    out += write_vlq(0) + b"\xff\x2f\x00"
    return b"MTrk" + struct.pack(">I", len(out)) + bytes(out)


def _meta(meta_type: int, payload: bytes) -> bytes:
    return bytes([0xFF, meta_type]) + write_vlq(len(payload)) + payload


def _text(text: str) -> bytes:
    return text.encode("latin-1", errors="replace")


def write_midi(music: Music) -> bytes:
    """Serialize ``music`` as a format-1 Standard MIDI File.

    The first track holds tempo, key and time signature meta events; each
    Track becomes its own SMF track with a program change. Drum tracks use
    channel 10, others take the remaining 15 channels in order.

    Raises
    ------
    ValidationError
        If ``music`` is invalid.
    ChannelExhaustionError
        More than 15 non-drum tracks.
    """
    music = sort(check_valid(music))
    if music.resolution > 0x7FFF:
        raise UnsupportedFeatureError(
            f"resolution {music.resolution} does not fit a metrical SMF division")
    melodic = [t for t in music.tracks if not t.is_drum]
    if len(melodic) > len(MELODIC_CHANNELS):
        raise ChannelExhaustionError(
            f"{len(melodic)} non-drum tracks but only {len(MELODIC_CHANNELS)} channels")

    meta = []
    if music.metadata.title is not None:
        meta.append((0, -1, _meta(0x03, _text(music.metadata.title))))
    if music.metadata.copyright is not None:
        meta.append((0, -1, _meta(0x02, _text(music.metadata.copyright))))
    for ts in music.time_signatures:
        exponent = ts.denominator.bit_length() - 1
        meta.append((ts.time, 0, _meta(0x58, bytes([ts.numerator, exponent, 24, 8]))))
    for key in music.key_signatures:
        minor = key.mode == "minor"
        sharps = sharps_from_key(key.root, minor)
        meta.append((key.time, 1, _meta(0x59, bytes([sharps & 0xFF, int(minor)]))))
    for tempo in music.tempos:
        micros = min(max(round(60e6 / tempo.qpm), 1), 0xFFFFFF)
        meta.append((tempo.time, 2, _meta(0x51, micros.to_bytes(3, "big"))))
    meta.sort(key=lambda e: (e[0], e[1]))
    chunks = [_event_bytes(meta)]

    channels = iter(MELODIC_CHANNELS)
    for track in music.tracks:
        channel = DRUM_CHANNEL if track.is_drum else next(channels)
        events = []
        if track.name is not None:
            events.append((0, (-2, 0, 0), _meta(0x03, _text(track.name))))
        events.append((0, (-1, 0, 0), bytes([0xC0 | channel, track.program])))
        for lyric in track.lyrics:
            events.append((lyric.time, (-1, 1, 0), _meta(0x05, _text(lyric.text))))
        # at equal ticks: offs of sounding notes, then ons, then offs of
        # zero-length notes, so FIFO matching on read pairs them back
        order = sorted(track.notes, key=lambda n: (n.time, n.end, n.pitch, n.velocity))
        for i, note in enumerate(order):
            # a zero velocity note-on would read back as a note-off
            velocity = max(note.velocity, 1)
            events.append((note.time, (1, i, 0),
                           bytes([0x90 | channel, note.pitch, velocity])))
            kind = 2 if note.duration == 0 else 0
            events.append((note.end, (kind, note.time, i),
                           bytes([0x80 | channel, note.pitch, 0x40])))
        events.sort(key=lambda e: (e[0], e[1]))
        chunks.append(_event_bytes(events))

    header = b"MThd" + struct.pack(">IHHH", 6, 1, len(chunks), music.resolution)
    return header + b"".join(chunks)


def read_midi_file(path) -> Music:
    music = read_midi(Path(path).read_bytes())
    music.metadata.source_filename = Path(path).name
    return music


def write_midi_file(music: Music, path) -> None:
    Path(path).write_bytes(write_midi(music))
