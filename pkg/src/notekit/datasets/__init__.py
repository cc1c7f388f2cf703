"""Manifest-driven corpus management."""
from .manager import (MARKER, MODES, ConvertReport, CorpusError, CorpusHandle, DatasetSplit,
                      DownloadReport, convert, download, largest_remainder, sha256_file, split,
                      stratified_draws, stratified_sample)
from .manifest import (DatasetManifest, Source, bundled_names, load_manifest, save_manifest)

__all__ = [
    "MARKER", "MODES", "ConvertReport", "CorpusError", "CorpusHandle", "DatasetManifest",
    "DatasetSplit", "DownloadReport", "Source", "bundled_names", "convert", "download",
    "largest_remainder", "load_manifest", "save_manifest", "sha256_file", "split",
    "stratified_draws", "stratified_sample",
]
