"""Format dispatch by file extension."""
from __future__ import annotations

import io as _io
import zipfile
from pathlib import Path
from typing import List

from .abc import read_abc
from .core import Music
from .midi import read_midi, write_midi
from .musicxml import read_musicxml, read_mxl, write_musicxml
from .serialization import load, save

FORMATS = ("midi", "musicxml", "mxl", "abc", "muspy")
EXTENSIONS = {
    ".mid": "midi", ".midi": "midi", ".smf": "midi",
    ".xml": "musicxml", ".musicxml": "musicxml", ".mxl": "mxl",
    ".abc": "abc",
    ".muspy.json": "muspy", ".json": "muspy",
}
WRITABLE = ("midi", "musicxml", "mxl", "muspy")


def infer_format(path) -> str:
    """Format name for ``path`` from its extension, or raise ValueError."""
    name = Path(path).name.lower()
    for extension in sorted(EXTENSIONS, key=len, reverse=True):
        if name.endswith(extension):
            return EXTENSIONS[extension]
    raise ValueError(f"cannot infer music format from file name {Path(path).name!r}")


def read_bytes(data: bytes, fmt: str) -> List[Music]:
    """Parse raw file content; ABC files may hold several tunes."""
    if fmt == "midi":
        return [read_midi(data)]
    if fmt == "musicxml":
        return [read_musicxml(data)]
    if fmt == "mxl":
        return [read_mxl(data)]
    if fmt == "abc":
        return read_abc(data)
    if fmt == "muspy":
        return [load(data)]
    raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")


def read(path, fmt: str = None) -> List[Music]:
    """Read every Music stored in ``path``."""
    path = Path(path)
    fmt = fmt or infer_format(path)
    songs = read_bytes(path.read_bytes(), fmt)
    for song in songs:
        if song.metadata.source_filename is None:
            song.metadata.source_filename = path.name
    return songs


def write_bytes(music: Music, fmt: str) -> bytes:
    if fmt == "midi":
        return write_midi(music)
    if fmt == "musicxml":
        return write_musicxml(music).encode("utf-8")
    if fmt == "mxl":
        buffer = _io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.writestr("META-INF/container.xml", (
                '<?xml version="1.0" encoding="UTF-8"?>\n<container><rootfiles>'
                '<rootfile full-path="score.xml" '
                'media-type="application/vnd.recordare.musicxml+xml"/>'
                '</rootfiles></container>\n'))
            archive.writestr("score.xml", write_musicxml(music))
        return buffer.getvalue()
    if fmt == "muspy":
        return save(music).encode("utf-8")
    raise ValueError(f"cannot write format {fmt!r}, expected one of {WRITABLE}")


def write(music: Music, path, fmt: str = None) -> None:
    path = Path(path)
    Path(path).write_bytes(write_bytes(music, fmt or infer_format(path)))
