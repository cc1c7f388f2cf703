"""Small on-disk corpora for dataset, harness and CLI tests."""
from pathlib import Path

from notekit import io as music_io
from notekit.core import KeySignature, Music, Note, Tempo, Track
from notekit.datasets import DatasetManifest, Source


def tune(pitches, step=24, resolution=24, qpm=None, key=None, title=None):
    music = Music(resolution=resolution,
                  tracks=[Track(notes=[Note(i * step, p, step, 80) for i, p in enumerate(pitches)])])
    if qpm is not None:
        music.tempos = [Tempo(0, qpm)]
    if key is not None:
        music.key_signatures = [KeySignature(0, *key)]
    if title:
        music.metadata.title = title
    return music


def manifest(name="fixture", fmt="midi", glob="**/*.mid", sources=None, **kw):
    sources = sources or (Source("file:///nonexistent/fixture.zip", archive="zip"),)
    return DatasetManifest(name=name, sources=tuple(sources), file_glob=glob,
                           source_format=fmt, **kw)


def write_raw(root, files):
    """Write ``{relative path: Music or bytes}`` under ``root/raw``."""
    raw = Path(root) / "raw"
    for rel, content in files.items():
        path = raw / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            music_io.write(content, path)
    return Path(root)


def melody_corpus(root, count, low=60, length=16, seed=0):
    """``count`` MIDI melodies drawn from pitches ``low`` .. ``low + 11``."""
    import numpy as np

    rng = np.random.default_rng(seed)
    files = {f"song{i:03d}.mid": tune([int(p) for p in low + rng.integers(0, 12, size=length)],
                                      step=12)
             for i in range(count)}
    return write_raw(root, files)
