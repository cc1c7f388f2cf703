"""Command-line interface.

Exit codes: 0 on success, 1 when an operation fails (a JSON diagnostic is
written to standard error), 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import struct
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as music_io
from .core import adjust_resolution
from .datasets import CorpusHandle, convert, download, load_manifest, split
from .errors import NotekitError
from .harness import ExperimentConfig, run_experiment
from .metrics import evaluate
from .representations import (DEFAULT_CONFIG, EXPERIMENT_CONFIG, encode_event,
                              encode_notes, encode_pianoroll, encode_pitch)
from .stats import REPORTS, collect

log = logging.getLogger("notekit")


class UsageError(Exception):
    """Bad arguments detected after parsing; exits with status 2."""


def _emit(text: str, out=None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _format(path, forced):
    if forced:
        return forced
    try:
        return music_io.infer_format(path)
    except ValueError as exc:
        raise UsageError(f"{exc}; pass --from/--to to choose a format") from None


def _read_one(path, fmt=None, index=0):
    songs = music_io.read(path, _format(path, fmt))
    if not songs:
        raise NotekitError(f"{path}: no songs found")
    if index >= len(songs):
        raise UsageError(f"{path}: song index {index} out of range ({len(songs)} songs)")
    if len(songs) > 1:
        log.info("%s holds %d songs; using song %d", path, len(songs), index)
    return songs[index]


def _music_files(directory: Path):
    out = []
    for path in sorted(p for p in directory.rglob("*") if p.is_file()):
        try:
            music_io.infer_format(path)
        except ValueError:
            continue
        out.append(path)
    return out


# ------------------------------------------------------------------ commands

def cmd_convert(args) -> int:
    src_fmt = _format(args.input, args.from_format)
    dst_fmt = _format(args.output, args.to_format)
    if dst_fmt not in music_io.WRITABLE:
        raise UsageError(f"cannot write {dst_fmt}; choose one of {music_io.WRITABLE}")
    music = _read_one(args.input, src_fmt, args.index)
    if args.resolution:
        music = adjust_resolution(music, args.resolution)
    music_io.write(music, args.output, dst_fmt)
    return 0


def _load_songs(path: Path, workers: int):
    """(name, Music or exception) pairs for a file or every music file of a directory."""
    if path.is_dir():
        files = _music_files(path)
        names = [f.relative_to(path).as_posix() for f in files]
    else:
        files, names = [path], [path.name]

    def read(f):
        try:
            return music_io.read(f)
        except (NotekitError, ValueError, OSError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(read, files))
    out = []
    for name, result in zip(names, results):
        if isinstance(result, Exception):
            out.append((name, result))
        elif len(result) == 1:
            out.append((name, result[0]))
        else:
            out.extend((f"{name}#{i}", song) for i, song in enumerate(result))
    return out


def cmd_stats(args) -> int:
    songs = _load_songs(Path(args.corpus), args.workers)
    failures = {name: str(s) for name, s in songs if isinstance(s, Exception)}
    music = [(name, s) for name, s in songs if not isinstance(s, Exception)]
    if not music:
        raise NotekitError(f"{args.corpus}: no readable songs")
    for name, song in music:
        song.metadata.source_filename = name
    report = collect((s for _, s in music), length_width=args.length_bin,
                     tempo_width=args.tempo_bin)
    summary = report.summary()
    summary["failures"] = failures
    reports = REPORTS if args.report == "all" else (args.report,)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "songs.csv").write_text(report.songs_csv(), encoding="utf-8")
        if "lengths" in reports:
            (out / "lengths.csv").write_text(report.lengths().to_csv(), encoding="utf-8")
        if "tempos" in reports:
            (out / "tempos.csv").write_text(report.tempos().to_csv(), encoding="utf-8")
        if "keys" in reports:
            (out / "keys.csv").write_text(report.keys_csv(), encoding="utf-8")
        (out / "summary.json").write_text(_dump(summary), encoding="utf-8")
    else:
        for name in reports:
            table = report.keys_csv() if name == "keys" else getattr(report, name)().to_csv()
            sys.stdout.write(f"# {name}\n{table}")
    return 0


def cmd_metrics(args) -> int:
    path = Path(args.path)
    options = dict(root=args.root, mode=args.mode, threshold=args.threshold,
                   meter=args.meter, measure_len=args.measure_len, empty_beat=args.empty_beat)
    songs = _load_songs(path, args.workers)
    if not path.is_dir() and isinstance(songs[0][1], Exception):
        raise songs[0][1]
    results = {}
    for name, song in songs:
        if isinstance(song, Exception):
            results[name] = {"error": type(song).__name__, "message": str(song)}
        else:
            results[name] = evaluate(song, **options).to_dict()
    if not path.is_dir():
        results = next(iter(results.values()))
    _emit(_dump(results), args.out)
    return 0


def _write_tokens(tokens, out, binary: bool) -> None:
    tokens = np.asarray(tokens, dtype=np.int64)
    if binary:
        data = struct.pack("<I", len(tokens)) + tokens.astype("<i4").tobytes()
        if out:
            Path(out).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
    else:
        _emit("".join(f"{int(t)}\n" for t in tokens), out)


def _write_table(matrix, out, header=None) -> None:
    lines = [",".join(header)] if header else []
    lines += [",".join(str(int(v)) for v in row) for row in np.asarray(matrix)]
    _emit("".join(line + "\n" for line in lines), out)


def cmd_encode(args) -> int:
    music = _read_one(args.path, index=args.index)
    if args.resolution:
        music = adjust_resolution(music, args.resolution)
    if args.repr == "event":
        config = EXPERIMENT_CONFIG if args.config == "experiment" else DEFAULT_CONFIG
        _write_tokens(encode_event(music, config).tokens, args.out, args.format == "binary")
    elif args.repr == "pitch":
        _write_tokens(encode_pitch(music, args.policy).tokens, args.out, args.format == "binary")
    elif args.repr == "pianoroll":
        mode = "velocity" if args.velocity else "binary"
        _write_table(encode_pianoroll(music, mode).matrix.astype(np.int64), args.out)
    else:
        _write_table(encode_notes(music), args.out, ["time", "pitch", "duration", "velocity"])
    return 0


def cmd_dataset(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.action == "download":
        result = download(manifest, args.root).to_dict()
    elif args.action == "convert":
        handle = CorpusHandle(Path(args.root), manifest)
        result = convert(handle, workers=args.workers).to_dict()
    else:
        handle = CorpusHandle(Path(args.root), manifest)
        result = split(handle, args.ratios, args.seed).to_dict()
    _emit(_dump(result), args.out)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.sample_count is not None:
        config.sample_count = args.sample_count
    matrix = run_experiment(config)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "matrix.csv").write_text(matrix.to_csv(), encoding="utf-8")
        (out / "report.json").write_text(_dump(matrix.to_dict()), encoding="utf-8")
    else:
        sys.stdout.write(matrix.to_csv())
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="notekit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between music formats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--from", dest="from_format", choices=music_io.FORMATS)
    p.add_argument("--to", dest="to_format", choices=music_io.WRITABLE)
    p.add_argument("--resolution", type=int, help="rescale to this many ticks per quarter")
    p.add_argument("--index", type=int, default=0, help="song index in multi-tune files")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="length, tempo and key statistics of a corpus")
    p.add_argument("corpus", help="directory of music files")
    p.add_argument("--report", choices=REPORTS + ("all",), default="all")
    p.add_argument("--out", help="directory for CSV histograms and summary.json")
    p.add_argument("--length-bin", type=float, default=30.0, help="seconds per length bin")
    p.add_argument("--tempo-bin", type=float, default=10.0, help="qpm per tempo bin")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("metrics", help="objective metrics of a song or directory")
    p.add_argument("path")
    p.add_argument("--out")
    p.add_argument("--root", type=int, choices=range(12), metavar="0-11")
    p.add_argument("--mode", choices=("major", "minor"))
    p.add_argument("--threshold", type=int, default=2)
    p.add_argument("--meter", choices=("duple", "triple"), default="duple")
    p.add_argument("--measure-len", type=int)
    p.add_argument("--empty-beat", choices=("onset", "sounding"), default="onset")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("encode", help="encode a song into a representation")
    p.add_argument("path")
    p.add_argument("--repr", choices=("event", "pitch", "pianoroll", "note"), default="event")
    p.add_argument("--config", choices=("default", "experiment"), default="default")
    p.add_argument("--format", choices=("text", "binary"), default="text",
                   help="token output: one integer per line, or uint32 length + int32 tokens")
    p.add_argument("--policy", choices=("error", "keep-highest", "skip-new"), default="error")
    p.add_argument("--velocity", action="store_true", help="velocity piano roll")
    p.add_argument("--resolution", type=int)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("dataset", help="download, convert or split a corpus")
    p.add_argument("action", choices=("download", "convert", "split"))
    p.add_argument("manifest", help="manifest JSON file or bundled manifest name")
    p.add_argument("root", help="corpus root directory")
    p.add_argument("--ratios", type=float, nargs=3, default=(8, 1, 1))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("experiment", help="cross-corpus perplexity matrix")
    p.add_argument("config", help="experiment JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--sample-count", type=int)
    p.add_argument("--out", help="directory for matrix.csv and report.json")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (NotekitError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
