"""Download, convert, iterate, split and sample corpora.

A corpus root has this layout::

    <root>/downloads/         fetched files, as served
    <root>/raw/               extracted music files
    <root>/converted/         canonical documents (preconverted mode)
    <root>/.download.json     hashes of fetched files
    <root>/converted/.converted.json   per-file source hashes and outputs

Corpus identity is the lexicographic order of the raw file paths relative
to ``<root>/raw``, written with forward slashes.
"""
from __future__ import annotations

import hashlib
import json
import logging
import tarfile
import urllib.error
import urllib.request
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .. import io as music_io
from ..core import Music
from ..errors import (ArchiveError, ConfigurationError, EmptyCorpusError, IntegrityError,
                      FormatError, NotekitError, SizeError, TransferError)
from ..serialization import load, save
from .manifest import DatasetManifest, load_manifest

log = logging.getLogger(__name__)

MODES = ("on_the_fly", "preconverted")
MARKER = ".converted.json"
DOWNLOAD_RECORD = ".download.json"
_CHUNK = 1 << 16


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(_CHUNK), b""):
            digest.update(block)
    return digest.hexdigest()


# --------------------------------------------------------------------- download

@dataclass
class DownloadReport:
    fetched: List[str] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    extracted: int = 0
    bytes_transferred: int = 0

    def to_dict(self) -> dict:
        return {"fetched": self.fetched, "skipped": self.skipped,
                "extracted": self.extracted, "bytes_transferred": self.bytes_transferred}


def _fetch(url: str, target: Path, timeout: float) -> int:
    tmp = target.with_name(target.name + ".part")
    try:
        with urllib.request.urlopen(url, timeout=timeout) as response, open(tmp, "wb") as out:
            size = 0
            for block in iter(lambda: response.read(_CHUNK), b""):
                out.write(block)
                size += len(block)
    except (urllib.error.URLError, OSError, ValueError) as exc:
        tmp.unlink(missing_ok=True)
        raise TransferError(f"failed to fetch {url}: {exc}", url=url) from None
    tmp.replace(target)
    return size


def _extract(archive: Path, kind: str, dest: Path) -> int:
    """Unpack ``archive`` into ``dest``, refusing members that escape it."""
    dest_resolved = dest.resolve()
    try:
        if kind == "zip":
            with zipfile.ZipFile(archive) as z:
                members = [m for m in z.infolist() if not m.is_dir()]
                for member in members:
                    target = (dest / member.filename).resolve()
                    if not target.is_relative_to(dest_resolved):
                        raise ArchiveError(f"{archive.name}: member {member.filename!r} "
                                           "escapes the extraction directory")
                z.extractall(dest)
                return len(members)
        with tarfile.open(archive, "r:gz") as t:
            members = [m for m in t.getmembers() if m.isfile()]
            t.extractall(dest, filter="data")
            return len(members)
    except (zipfile.BadZipFile, tarfile.TarError, EOFError) as exc:
        raise ArchiveError(f"{archive.name}: cannot extract {kind} archive: {exc}") from None


def download(manifest: DatasetManifest, root, timeout: float = 60.0) -> DownloadReport:
    """Fetch, verify and unpack every source of ``manifest`` under ``root``.

    Files already present with the expected (or previously recorded) hash are
    not fetched again, so a second run transfers zero bytes.

    Raises
    ------
    TransferError
        A URL could not be fetched; the message names the URL.
    IntegrityError
        A fetched file does not match the manifest checksum.
    """
    root = Path(root)
    downloads, raw = root / "downloads", root / "raw"
    downloads.mkdir(parents=True, exist_ok=True)
    raw.mkdir(parents=True, exist_ok=True)
    record_path = root / DOWNLOAD_RECORD
    record = json.loads(record_path.read_text()) if record_path.exists() else {}
    report = DownloadReport()
    for source in manifest.sources:
        name = source.local_name
        target = downloads / name if source.archive != "none" else raw / name
        entry = record.get(name, {})
        expected = source.sha256 or entry.get("sha256")
        if (target.exists() and expected and entry.get("extracted", source.archive == "none")
                and sha256_file(target) == expected):
            report.skipped.append(name)
            continue
        report.bytes_transferred += _fetch(source.url, target, timeout)
        report.fetched.append(name)
        digest = sha256_file(target)
        if source.sha256 and digest != source.sha256.lower():
            target.unlink()
            raise IntegrityError(f"checksum mismatch for {name}: expected {source.sha256}, "
                                 f"got {digest}", filename=name)
        entry = {"url": source.url, "sha256": digest, "extracted": False}
        if source.archive != "none":
            report.extracted += _extract(target, source.archive, raw)
        entry["extracted"] = True
        record[name] = entry
        record_path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return report


# --------------------------------------------------------------------- handles

@dataclass(frozen=True)
class CorpusError:
    """Stream item standing in for a file that could not be read."""

    path: str
    error: str
    message: str


Item = Union[Music, CorpusError]


@dataclass(frozen=True)
class CorpusHandle:
    """A corpus on disk plus the mode used to read it.

    ``preconverted`` mode requires a completed conversion marker.
    """

    root: Path
    manifest: DatasetManifest
    mode: str = "on_the_fly"

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "preconverted" and not self.marker_path.exists():
            raise ConfigurationError(
                f"{self.root}: preconverted mode needs {MARKER}; run convert first")

    @classmethod
    def open(cls, root, manifest, mode="on_the_fly") -> "CorpusHandle":
        if not isinstance(manifest, DatasetManifest):
            manifest = load_manifest(manifest)
        return cls(Path(root), manifest, mode)

    @property
    def raw_dir(self) -> Path:
        return self.root / "raw"

    @property
    def converted_dir(self) -> Path:
        return self.root / "converted"

    @property
    def marker_path(self) -> Path:
        return self.converted_dir / MARKER

    def with_mode(self, mode: str) -> "CorpusHandle":
        return CorpusHandle(self.root, self.manifest, mode)

    def read_marker(self) -> dict:
        return json.loads(self.marker_path.read_text(encoding="utf-8"))

    def files(self) -> List[str]:
        """Relative source paths in corpus order."""
        if self.mode == "preconverted":
            marker = self.read_marker()
            return sorted(set(marker["files"]) | set(marker["failed"]))
        return _scan(self.raw_dir, self.manifest)

    def __len__(self) -> int:
        return len(self.files())

    def read_file(self, rel: str) -> List[Item]:
        """Every song stored in one source file, or a single error item."""
        if self.mode == "preconverted":
            return _load_converted(self, rel, self.read_marker())
        return _parse_source(self, rel)

    def iterate(self, files: Optional[Sequence[str]] = None) -> Iterator[Item]:
        """Yield songs in corpus order; unreadable files become CorpusError items."""
        marker = self.read_marker() if self.mode == "preconverted" else None
        for rel in self.files() if files is None else sorted(files):
            if marker is not None:
                yield from _load_converted(self, rel, marker)
            else:
                yield from _parse_source(self, rel)

    __iter__ = iterate


def _scan(raw: Path, manifest: DatasetManifest) -> List[str]:
    if not raw.is_dir():
        return []
    out = set()
    for path in raw.glob(manifest.file_glob):
        if not path.is_file():
            continue
        if manifest.source_format == "auto":
            try:
                music_io.infer_format(path)
            except ValueError:
                continue
        out.add(PurePosixPath(path.relative_to(raw).as_posix()).as_posix())
    return sorted(out)


def _format_for(manifest: DatasetManifest, rel: str) -> str:
    if manifest.source_format == "auto":
        return music_io.infer_format(rel)
    return manifest.source_format


def _parse_bytes(manifest: DatasetManifest, rel: str, data: bytes) -> List[Music]:
    fmt = _format_for(manifest, rel)
    songs = music_io.read_bytes(data, fmt)
    if not songs:
        raise FormatError(f"{rel}: no songs found when read as {fmt}")
    for song in songs:
        song.metadata.collection = manifest.name
        song.metadata.source_filename = rel
    return songs


def _error(rel: str, exc: Exception) -> CorpusError:
    return CorpusError(rel, type(exc).__name__, str(exc))


def _parse_source(handle: CorpusHandle, rel: str) -> List[Item]:
    try:
        return _parse_bytes(handle.manifest, rel, (handle.raw_dir / rel).read_bytes())
    except (NotekitError, ValueError, OSError) as exc:
        return [_error(rel, exc)]


def _load_converted(handle: CorpusHandle, rel: str, marker: dict) -> List[Item]:
    if rel in marker["failed"]:
        info = marker["failed"][rel]
        return [CorpusError(rel, info["error"], info["message"])]
    try:
        return [load((handle.converted_dir / out).read_text(encoding="utf-8"))
                for out in marker["files"][rel]["outputs"]]
    except (NotekitError, ValueError, OSError, KeyError) as exc:
        return [_error(rel, exc)]


# --------------------------------------------------------------------- convert

@dataclass
class ConvertReport:
    converted: List[str] = field(default_factory=list)
    unchanged: List[str] = field(default_factory=list)
    failed: Dict[str, str] = field(default_factory=dict)
    removed: List[str] = field(default_factory=list)
    songs: int = 0

    def to_dict(self) -> dict:
        return {"converted": len(self.converted), "unchanged": len(self.unchanged),
                "skipped": len(self.failed), "removed": len(self.removed),
                "songs": self.songs, "failures": self.failed}


def _output_names(rel: str, count: int) -> List[str]:
    if count == 1:
        return [f"{rel}.muspy.json"]
    return [f"{rel}.{i}.muspy.json" for i in range(count)]


def _convert_one(handle: CorpusHandle, rel: str) -> Tuple[str, str, object]:
    digest = None
    try:
        data = (handle.raw_dir / rel).read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        songs = _parse_bytes(handle.manifest, rel, data)
        docs = [save(song) for song in songs]
    except (NotekitError, ValueError, OSError) as exc:
        return rel, digest, exc
    return rel, digest, docs


def convert(handle: CorpusHandle, workers: int = 4) -> ConvertReport:
    """Write every matched source file as canonical documents under ``converted/``.

    Files whose source hash matches the marker are left alone; files that
    fail to parse are logged and recorded in the marker with their error.

    Raises
    ------
    EmptyCorpusError
        No file could be converted.
    """
    on_the_fly = handle.with_mode("on_the_fly")
    out_dir = handle.converted_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    marker_path = handle.marker_path
    old = (json.loads(marker_path.read_text(encoding="utf-8")) if marker_path.exists()
           else {"files": {}, "failed": {}})
    files = on_the_fly.files()
    report = ConvertReport()
    marker = {"manifest": handle.manifest.name,
              "source_format": handle.manifest.source_format, "files": {}, "failed": {}}
    todo = []
    for rel in files:
        previous = old["files"].get(rel)
        if (previous is not None
                and all((out_dir / o).exists() for o in previous["outputs"])
                and sha256_file(handle.raw_dir / rel) == previous["sha256"]):
            marker["files"][rel] = previous
            report.unchanged.append(rel)
            report.songs += len(previous["outputs"])
        else:
            todo.append(rel)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda r: _convert_one(on_the_fly, r), todo))
    for rel, digest, result in results:
        stale = old["files"].get(rel, {}).get("outputs", [])
        for name in stale:
            (out_dir / name).unlink(missing_ok=True)
        if isinstance(result, Exception):
            log.warning("skipping %s: %s", rel, result)
            report.failed[rel] = str(result)
            marker["failed"][rel] = {"sha256": digest, "error": type(result).__name__,
                                     "message": str(result)}
            continue
        outputs = _output_names(rel, len(result))
        for name, doc in zip(outputs, result):
            target = out_dir / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(doc, encoding="utf-8")
        marker["files"][rel] = {"sha256": digest, "outputs": outputs}
        report.converted.append(rel)
        report.songs += len(outputs)
    for rel in sorted(set(old["files"]) - set(files)):
        for name in old["files"][rel]["outputs"]:
            (out_dir / name).unlink(missing_ok=True)
        report.removed.append(rel)
    if not marker["files"]:
        marker_path.unlink(missing_ok=True)
        raise EmptyCorpusError(
            f"{handle.manifest.name}: none of {len(files)} matched files could be converted "
            f"as {handle.manifest.source_format}")
    marker_path.write_text(json.dumps(marker, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    return report


# --------------------------------------------------------------------- split and sample

@dataclass(frozen=True)
class DatasetSplit:
    seed: int
    ratios: Tuple[float, float, float]
    train: Tuple[str, ...]
    valid: Tuple[str, ...]
    test: Tuple[str, ...]

    PARTS = ("train", "valid", "test")

    def part(self, name: str) -> Tuple[str, ...]:
        if name not in self.PARTS:
            raise ValueError(f"split part must be one of {self.PARTS}, got {name!r}")
        return getattr(self, name)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.valid), len(self.test)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "ratios": list(self.ratios), "train": list(self.train),
                "valid": list(self.valid), "test": list(self.test)}


def largest_remainder(n: int, ratios: Sequence[float]) -> List[int]:
    """Integer part sizes summing to ``n``, as close to proportional as possible.

    Leftover units go to the parts with the largest fractional remainders,
    earlier parts winning ties.
    """
    total = float(sum(ratios))
    exact = [n * r / total for r in ratios]
    sizes = [int(x) for x in exact]
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split(handle: CorpusHandle, ratios=(8, 1, 1), seed: int = 0) -> DatasetSplit:
    """Shuffle the corpus files with a seeded generator and cut them by ``ratios``.

    Raises
    ------
    SizeError
        Fewer files than parts.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(not r > 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios}")
    files = handle.files()
    if len(files) < len(ratios):
        raise SizeError(f"cannot split {len(files)} files into {len(ratios)} parts")
    order = np.random.default_rng(seed).permutation(len(files))
    shuffled = [files[i] for i in order]
    sizes = largest_remainder(len(files), ratios)
    bounds = np.cumsum([0] + sizes)
    parts = [tuple(shuffled[bounds[i]:bounds[i + 1]]) for i in range(3)]
    return DatasetSplit(seed, ratios, *parts)


def stratified_draws(sizes: Sequence[int], count: int, rng) -> List[Tuple[int, int]]:
    """``count`` (corpus, index) pairs: a corpus uniformly, then an item uniformly."""
    if any(s <= 0 for s in sizes):
        raise ConfigurationError("stratified sampling needs every corpus to be non-empty")
    corpora = rng.integers(len(sizes), size=count)
    return [(int(c), int(rng.integers(sizes[c]))) for c in corpora]


def stratified_sample(handles: Sequence[CorpusHandle], seed: int = 0,
                      count: int = 1000) -> Iterator[Item]:
    """Yield ``count`` songs, each from a uniformly chosen corpus and file.

    A file holding several songs contributes one of them, chosen uniformly.
    """
    if not handles:
        raise ConfigurationError("stratified sampling needs at least one corpus")
    files = [h.files() for h in handles]
    for handle, names in zip(handles, files):
        if not names:
            raise ConfigurationError(f"corpus {handle.manifest.name!r} at {handle.root} is empty")
    rng = np.random.default_rng(seed)
    for corpus, index in stratified_draws([len(f) for f in files], count, rng):
        items = handles[corpus].read_file(files[corpus][index])
        if not items:
            continue
        yield items[int(rng.integers(len(items)))] if len(items) > 1 else items[0]

