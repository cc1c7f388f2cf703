"""Perplexity experiments over prepared event-token corpora.

Songs are downsampled to 4 ticks per quarter, encoded with
:data:`~notekit.representations.EXPERIMENT_CONFIG` (357 tokens) and cut into
non-overlapping windows of 64 tokens. Any object with ``vocab_size``,
``order`` and ``predict_proba`` can be scored; :class:`NGramModel` is the
bundled baseline.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone

from .core import Music, adjust_resolution
from .datasets import CorpusError, CorpusHandle, DatasetSplit, split as split_corpus
from .datasets import stratified_draws
from .errors import ConfigurationError, ModelContractError, SizeError
from .representations import EXPERIMENT_CONFIG, encode_event
from .utils.validation import check_tokens

WINDOW = 64
STEPS_PER_QUARTER = 4
VOCAB_SIZE = EXPERIMENT_CONFIG.vocab_size


@dataclass
class PreparedCorpus:
    """Token windows of one corpus part, shape (n_windows, 64)."""

    windows: np.ndarray
    name: str = ""
    part: Optional[str] = None
    vocab_size: int = VOCAB_SIZE
    counts: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        windows = np.asarray(self.windows, dtype=np.int64).reshape(-1, WINDOW)
        self.windows = check_tokens(windows, self.vocab_size, ndim=2)

    def __len__(self) -> int:
        return len(self.windows)


def melody_only(music: Music) -> Music:
    """Keep only the first non-drum track."""
    return Music(metadata=music.metadata, resolution=music.resolution, tempos=music.tempos,
                 key_signatures=music.key_signatures, time_signatures=music.time_signatures,
                 tracks=[t for t in music.tracks if not t.is_drum][:1])


def preprocess(music: Music, flags: Iterable[str]) -> Music:
    """Apply manifest preprocessing flags.

    ``discard_repeats`` needs no work: the readers never unfold repeats.
    """
    if "melody_only" in flags:
        music = melody_only(music)
    return music


def song_windows(music: Music) -> np.ndarray:
    """Non-overlapping 64-token windows of one song; the short tail is dropped."""
    tokens = encode_event(adjust_resolution(music, STEPS_PER_QUARTER), EXPERIMENT_CONFIG).tokens
    n = len(tokens) // WINDOW
    return tokens[:n * WINDOW].reshape(n, WINDOW)


def prepare_music(songs: Iterable, name: str = "", part: Optional[str] = None,
                  flags: Iterable[str] = ()) -> PreparedCorpus:
    """Window a stream of songs; ``CorpusError`` items are counted and skipped."""
    counts = Counter(songs=0, windows=0, short_songs=0, errors=0)
    chunks = []
    for song in songs:
        if isinstance(song, CorpusError):
            counts["errors"] += 1
            continue
        windows = song_windows(preprocess(song, flags))
        counts["songs"] += 1
        counts["windows"] += len(windows)
        counts["short_songs"] += not len(windows)
        chunks.append(windows)
    windows = np.concatenate(chunks) if chunks else np.zeros((0, WINDOW), dtype=np.int64)
    return PreparedCorpus(windows, name, part, VOCAB_SIZE, dict(counts))


def prepare(handle: CorpusHandle, part: Optional[str] = None,
            split: Optional[DatasetSplit] = None) -> PreparedCorpus:
    """Window every song of a corpus, or of one part of ``split``."""
    files = None
    if part is not None:
        if split is None:
            raise ConfigurationError(f"part {part!r} requested without a split")
        files = split.part(part)
    return prepare_music(handle.iterate(files), handle.manifest.name, part,
                         handle.manifest.preprocessing)


def _windows(X) -> np.ndarray:
    if isinstance(X, PreparedCorpus):
        return X.windows
    array = np.asarray(X, dtype=np.int64)
    if array.ndim == 1:
        array = array.reshape(1, -1) if array.size else array.reshape(0, WINDOW)
    return array


class SequenceModel:
    """Next-token distribution over ``vocab_size`` tokens.

    Subclasses implement :meth:`predict_proba` for a single context (the
    tokens preceding the prediction, oldest first). ``order`` is the number
    of tokens the model looks at, counting the predicted one.
    """

    vocab_size: int = VOCAB_SIZE
    order: int = 1

    def predict_proba(self, context: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def window_log_probs(self, window: np.ndarray) -> np.ndarray:
        """Natural-log probability of each token of ``window`` given its prefix."""
        keep = max(self.order - 1, 0)
        out = np.empty(len(window))
        for i, token in enumerate(window):
            probs = self.predict_proba(window[max(0, i - keep):i] if keep else window[:0])
            out[i] = math.log(probs[token]) if probs[token] > 0 else -math.inf
        return out


class UniformModel(SequenceModel):
    """Every token equally likely."""

    def __init__(self, vocab_size: int = VOCAB_SIZE):
        self.vocab_size = vocab_size

    def predict_proba(self, context):
        return np.full(self.vocab_size, 1.0 / self.vocab_size)

    def window_log_probs(self, window):
        return np.full(len(window), -math.log(self.vocab_size))


class NGramModel(SequenceModel, BaseEstimator):
    """Additively smoothed n-gram model.

    ``P(token | context) = (count + alpha) / (context_count + alpha * V)``
    where the context is the previous ``order - 1`` tokens. Positions near
    the start of a window use a padding symbol ``V`` that never appears as a
    prediction target.

    Parameters
    ----------
    order : int
        1 for unigrams, 2 for bigrams, and so on.
    alpha : float
        Smoothing constant, must be positive.
    vocab_size : int
    """

    def __init__(self, order: int = 3, alpha: float = 0.1, vocab_size: int = VOCAB_SIZE):
        self.order = order
        self.alpha = alpha
        self.vocab_size = vocab_size

    def _contexts(self, window):
        k = self.order - 1
        padded = [self.vocab_size] * k + [int(t) for t in window]
        return [(tuple(padded[i:i + k]), padded[i + k]) for i in range(len(window))]

    def fit(self, X, y=None):
        """Count every (context, token) pair in the windows of ``X``."""
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        windows = _windows(X)
        if not len(windows):
            raise SizeError("cannot fit an n-gram model on an empty corpus")
        check_tokens(windows, self.vocab_size, ndim=2)
        counts = defaultdict(Counter)
        for window in windows.tolist():
            for context, token in self._contexts(window):
                counts[context][token] += 1
        self.counts_ = {c: dict(v) for c, v in counts.items()}
        self.context_totals_ = {c: sum(v.values()) for c, v in self.counts_.items()}
        self.n_windows_ = len(windows)
        return self

    def _check_fitted(self):
        if not hasattr(self, "counts_"):
            raise ConfigurationError("NGramModel is not fitted yet; call fit first")

    def predict_proba(self, context):
        self._check_fitted()
        k = self.order - 1
        context = [int(t) for t in context][-k:] if k else []
        context = tuple([self.vocab_size] * (k - len(context)) + context)
        probs = np.full(self.vocab_size, float(self.alpha))
        for token, count in self.counts_.get(context, {}).items():
            probs[token] += count
        return probs / (self.context_totals_.get(context, 0) + self.alpha * self.vocab_size)

    def window_log_probs(self, window):
        self._check_fitted()
        denom_alpha = self.alpha * self.vocab_size
        out = np.empty(len(window))
        for i, (context, token) in enumerate(self._contexts(window)):
            seen = self.counts_.get(context, {})
            out[i] = math.log((seen.get(token, 0) + self.alpha)
                              / (self.context_totals_.get(context, 0) + denom_alpha))
        return out

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per token (higher is better)."""
        windows = _windows(X)
        return float(np.mean([self.window_log_probs(w).mean() for w in windows]))


@dataclass
class PerplexityResult:
    perplexity: float
    log_perplexity: float
    sample_count: int
    total_tokens: int
    with_replacement: bool
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def perplexity(model: SequenceModel, corpus, sample_count: int = 1000,
               seed: int = 0) -> PerplexityResult:
    """Perplexity ``exp(-mean ln P)`` over ``sample_count`` seeded window draws.

    Windows are drawn without replacement when the corpus is large enough,
    otherwise with replacement (flagged in the result).

    Raises
    ------
    SizeError
        The corpus has no windows, or ``sample_count < 1``.
    ModelContractError
        The model gave zero probability to an observed token.
    """
    windows = _windows(corpus)
    if sample_count < 1:
        raise SizeError(f"sample_count must be >= 1, got {sample_count}")
    if not len(windows):
        raise SizeError("cannot evaluate perplexity on a corpus without windows")
    rng = np.random.default_rng(seed)
    with_replacement = sample_count > len(windows)
    picks = rng.choice(len(windows), size=sample_count, replace=with_replacement)
    total, tokens = 0.0, 0
    for index in picks:
        log_probs = model.window_log_probs(windows[index])
        if not np.all(np.isfinite(log_probs)):
            raise ModelContractError(
                f"model assigned zero probability to a token in window {int(index)}")
        total += float(log_probs.sum())
        tokens += len(log_probs)
    log_ppl = -total / tokens
    return PerplexityResult(math.exp(log_ppl), log_ppl, sample_count, tokens,
                            with_replacement, seed)


@dataclass
class CorpusPair:
    """Training and evaluation windows of one named corpus."""

    name: str
    train: PreparedCorpus
    test: PreparedCorpus


@dataclass
class CrossMatrix:
    """Log-perplexity of each row's model on each column's test set."""

    rows: List[str]
    columns: List[str]
    values: np.ndarray
    parameters: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["train\\test"] + self.columns)
        for name, row in zip(self.rows, self.values):
            writer.writerow([name] + [repr(float(v)) for v in row])
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return {"rows": self.rows, "columns": self.columns,
                "log_perplexity": self.values.tolist(), "parameters": self.parameters}


def _fit_copy(template, corpus):
    return clone(template).fit(corpus)


def cross_matrix(pairs: Sequence[CorpusPair], model=None, sample_count: int = 1000,
                 seed: int = 0, workers: int = 1,
                 extra_rows: Sequence[CorpusPair] = ()) -> CrossMatrix:
    """Train one model per corpus and score it on every corpus's test windows.

    Rows and columns are ordered by ascending diagonal value, so the
    diagonal stays the in-domain score. ``extra_rows`` (for instance a
    unified corpus) are trained and scored too and appended after the
    sorted rows; their ``test`` part is ignored.

    Raises
    ------
    SizeError
        Fewer than two corpora.
    """
    if len(pairs) < 2:
        raise SizeError(f"a cross matrix needs at least two corpora, got {len(pairs)}")
    model = NGramModel() if model is None else model
    trainers = list(pairs) + list(extra_rows)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        models = list(pool.map(lambda p: _fit_copy(model, p.train), trainers))
        cells = [(r, c) for r in range(len(trainers)) for c in range(len(pairs))]
        scores = list(pool.map(
            lambda rc: perplexity(models[rc[0]], pairs[rc[1]].test, sample_count, seed)
            .log_perplexity, cells))
    values = np.array(scores).reshape(len(trainers), len(pairs))
    order = sorted(range(len(pairs)), key=lambda i: (values[i, i], i))
    row_order = order + list(range(len(pairs), len(trainers)))
    values = values[np.ix_(row_order, order)]
    params = {"model": model.get_params() if hasattr(model, "get_params") else repr(model),
              "sample_count": sample_count, "seed": seed}
    return CrossMatrix([trainers[i].name for i in row_order], [pairs[i].name for i in order],
                       values, params)


UNIFIED_MODES = ("concatenated", "stratified")


def unified_corpus(corpora: Sequence[PreparedCorpus], mode: str = "concatenated",
                   seed: int = 0, size: Optional[int] = None,
                   name: str = "unified") -> PreparedCorpus:
    """Combine corpora for training.

    ``concatenated`` pools every window. ``stratified`` draws ``size``
    windows (default: the pooled total), each from a uniformly chosen corpus.
    Evaluation sets should always be pooled; use ``mode="concatenated"``.
    """
    if mode not in UNIFIED_MODES:
        raise ValueError(f"mode must be one of {UNIFIED_MODES}, got {mode!r}")
    if not corpora:
        raise ConfigurationError("unified corpus needs at least one corpus")
    for corpus in corpora:
        if not len(corpus):
            raise ConfigurationError(f"corpus {corpus.name!r} has no windows")
    part = corpora[0].part
    if mode == "concatenated":
        windows = np.concatenate([c.windows for c in corpora])
    else:
        size = sum(len(c) for c in corpora) if size is None else size
        draws = stratified_draws([len(c) for c in corpora], size, np.random.default_rng(seed))
        windows = np.array([corpora[c].windows[i] for c, i in draws],
                           dtype=np.int64).reshape(-1, WINDOW)
    return PreparedCorpus(windows, name, part, VOCAB_SIZE,
                          {"windows": len(windows), "sources": len(corpora)})


@dataclass
class CorpusSpec:
    name: str
    root: str
    manifest: str
    mode: str = "on_the_fly"


@dataclass
class ExperimentConfig:
    """Cross-corpus experiment description, loadable from JSON.

    ``corpora`` entries give a name, a corpus root and a manifest (path or
    bundled name). Each corpus is split with ``ratios``/``seed``; models are
    trained on ``train_part`` and scored on ``test_part``.
    """

    corpora: List[CorpusSpec]
    model: Dict[str, object] = field(default_factory=lambda: {"order": 3, "alpha": 0.1})
    sample_count: int = 1000
    seed: int = 0
    ratios: tuple = (8, 1, 1)
    train_part: str = "train"
    test_part: str = "test"
    unified: Optional[str] = None

    def __post_init__(self):
        self.corpora = [c if isinstance(c, CorpusSpec) else CorpusSpec(**c) for c in self.corpora]
        self.ratios = tuple(self.ratios)
        if self.sample_count < 1:
            raise ConfigurationError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.unified is not None and self.unified not in UNIFIED_MODES:
            raise ConfigurationError(f"unified must be one of {UNIFIED_MODES} or null")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        try:
            config = cls(**data)
        except TypeError as exc:
            raise ConfigurationError(f"{path.name}: {exc}") from None
        for spec in config.corpora:
            spec.root = str((path.parent / spec.root).resolve())
            manifest = path.parent / spec.manifest
            if manifest.exists():
                spec.manifest = str(manifest.resolve())
        return config

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ratios"] = list(self.ratios)
        return out


def run_experiment(config: ExperimentConfig) -> CrossMatrix:
    """Prepare every corpus, then build the cross matrix."""
    pairs = []
    for spec in config.corpora:
        handle = CorpusHandle.open(spec.root, spec.manifest, spec.mode)
        parts = split_corpus(handle, config.ratios, config.seed)
        train = prepare(handle, config.train_part, parts)
        test = prepare(handle, config.test_part, parts)
        pairs.append(CorpusPair(spec.name, train, test))
    extra = []
    if config.unified:
        train = unified_corpus([p.train for p in pairs], config.unified, config.seed)
        extra.append(CorpusPair(f"unified-{config.unified}", train, train))
    matrix = cross_matrix(pairs, NGramModel(**config.model), config.sample_count,
                          config.seed, extra_rows=extra)
    matrix.parameters["config"] = config.to_dict()
    return matrix
