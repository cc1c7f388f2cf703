"""Declarative corpus descriptions shipped as JSON data files."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..errors import SchemaError

ARCHIVE_KINDS = ("zip", "tar.gz", "none")
SOURCE_FORMATS = ("midi", "musicxml", "mxl", "abc", "muspy", "auto")
SUPPORT_LEVELS = ("yes", "partial", "no")
PREPROCESSING_FLAGS = ("melody_only", "discard_repeats")


@dataclass(frozen=True)
class Source:
    """One downloadable file.

    ``sha256`` may be ``None`` when no trusted checksum is known; such
    sources are fetched but only checked for local consistency.
    """

    url: str
    sha256: Optional[str] = None
    archive: str = "none"
    filename: Optional[str] = None

    @property
    def local_name(self) -> str:
        return self.filename or self.url.rstrip("/").rsplit("/", 1)[-1] or "download"


@dataclass(frozen=True)
class DatasetManifest:
    """Where a corpus lives and how to read it.

    Parameters
    ----------
    name : str
        Collection name, copied into ``metadata.collection`` of every song.
    sources : tuple of Source
    file_glob : str
        Pattern, relative to ``<root>/raw``, selecting music files.
    source_format : str
        Reader to use; ``"auto"`` picks one per file from its extension.
    license_note : str
    verified : bool
        False when the URLs or checksums have not been confirmed to work.
    support : dict
        Informational ``melody``/``chords``/``multitrack`` levels.
    preprocessing : tuple of str
        Flags applied by the experiment pipeline (see ``PREPROCESSING_FLAGS``).
    """

    name: str
    sources: Tuple[Source, ...]
    file_glob: str
    source_format: str
    license_note: str = ""
    verified: bool = False
    support: Dict[str, str] = field(default_factory=dict)
    preprocessing: Tuple[str, ...] = ()
    reported_hours: Optional[float] = None
    reported_songs: Optional[int] = None

    def __post_init__(self):
        if not self.sources:
            raise SchemaError("manifest needs at least one source", "sources")
        for i, source in enumerate(self.sources):
            if source.archive not in ARCHIVE_KINDS:
                raise SchemaError(f"archive kind must be one of {ARCHIVE_KINDS}",
                                  f"sources[{i}].archive")
        if self.source_format not in SOURCE_FORMATS:
            raise SchemaError(f"source_format must be one of {SOURCE_FORMATS}",
                              "source_format")
        for flag in self.preprocessing:
            if flag not in PREPROCESSING_FLAGS:
                raise SchemaError(f"unknown preprocessing flag {flag!r}", "preprocessing")
        for key, level in self.support.items():
            if level not in SUPPORT_LEVELS:
                raise SchemaError(f"support level must be one of {SUPPORT_LEVELS}",
                                  f"support.{key}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sources"] = [asdict(s) for s in self.sources]
        out["preprocessing"] = list(self.preprocessing)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        known = {"name", "sources", "file_glob", "source_format", "license_note",
                 "verified", "support", "preprocessing", "reported_hours", "reported_songs"}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown manifest keys {sorted(unknown)}", sorted(unknown)[0])
        for key in ("name", "sources", "file_glob", "source_format"):
            if key not in data:
                raise SchemaError(f"missing manifest key {key!r}", key)
        sources = []
        for i, src in enumerate(data["sources"]):
            try:
                sources.append(Source(**src))
            except TypeError as exc:
                raise SchemaError(str(exc), f"sources[{i}]") from None
        kwargs = dict(data, sources=tuple(sources),
                      preprocessing=tuple(data.get("preprocessing", ())))
        return cls(**kwargs)


def load_manifest(path_or_name) -> DatasetManifest:
    """Load a manifest from a JSON file, or a bundled one by its file stem."""
    path = Path(path_or_name)
    if path.suffix != ".json" and not path.exists():
        if str(path_or_name) not in bundled_names():
            raise SchemaError(f"no bundled manifest named {path_or_name!r}", "name")
        text = (resources.files(__package__) / "manifests" / f"{path_or_name}.json").read_text(
            encoding="utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc.msg}", "") from None
    return DatasetManifest.from_dict(data)


def save_manifest(manifest: DatasetManifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")


def bundled_names() -> List[str]:
    """Stems of the manifests that ship with the package."""
    folder = resources.files(__package__) / "manifests"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))
