"""scikit-learn compatible wrappers around the four representations.

The encoders are stateless, so ``fit`` only validates the input and freezes
the configuration. They plug into ``sklearn.pipeline.Pipeline`` like any
other transformer::

    pipe = Pipeline([("events", EventRepresentation(resolution=4))])
    sequences = pipe.fit_transform(songs)
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..core import adjust_resolution
from ..utils.validation import check_music_collection
from .event import EncodedSequence, EventConfig, decode_event, encode_event
from .note import decode_notes, encode_notes
from .pianoroll import PianoRoll, decode_pianoroll, encode_pianoroll
from .pitch import PITCH_CONFIG, decode_pitch, encode_pitch


class _MusicTransformer(TransformerMixin, BaseEstimator):
    def _prepare(self, X):
        songs = check_music_collection(X)
        if getattr(self, "resolution", None) is not None:
            songs = [adjust_resolution(m, self.resolution) for m in songs]
        return songs

    def fit(self, X, y=None):
        check_music_collection(X)
        self._fit_config()
        return self

    def _fit_config(self):
        pass


class EventRepresentation(_MusicTransformer):
    """Encode songs as event-token arrays.

    Parameters
    ----------
    use_velocity, velocity_bins, max_time_shift, use_end_of_sequence
        See :class:`~notekit.representations.EventConfig`.
    resolution : int, optional
        Rescale every song to this many ticks per quarter before encoding.
    """

    def __init__(self, use_velocity=True, velocity_bins=32, max_time_shift=100,
                 use_end_of_sequence=False, resolution=None):
        self.use_velocity = use_velocity
        self.velocity_bins = velocity_bins
        self.max_time_shift = max_time_shift
        self.use_end_of_sequence = use_end_of_sequence
        self.resolution = resolution

    def _fit_config(self):
        self.config_ = EventConfig(self.use_velocity, self.velocity_bins,
                                   self.max_time_shift, self.use_end_of_sequence)
        self.vocab_size_ = self.config_.vocab_size

    def transform(self, X):
        check_is_fitted(self, "config_")
        return [encode_event(m, self.config_).tokens for m in self._prepare(X)]

    def inverse_transform(self, X, resolution=24):
        check_is_fitted(self, "config_")
        return [decode_event(EncodedSequence(t, self.config_, self.resolution or resolution))
                for t in X]


class PitchRepresentation(_MusicTransformer):
    """Encode monophonic songs as pitch/hold/rest arrays."""

    def __init__(self, policy="error", resolution=None):
        self.policy = policy
        self.resolution = resolution

    def _fit_config(self):
        self.vocab_size_ = PITCH_CONFIG.vocab_size

    def transform(self, X):
        check_is_fitted(self, "vocab_size_")
        return [encode_pitch(m, self.policy).tokens for m in self._prepare(X)]

    def inverse_transform(self, X, resolution=24):
        check_is_fitted(self, "vocab_size_")
        return [decode_pitch(EncodedSequence(t, PITCH_CONFIG, self.resolution or resolution))
                for t in X]


class PianoRollRepresentation(_MusicTransformer):
    """Encode songs as T x 128 piano-roll matrices."""

    def __init__(self, mode="binary", resolution=None):
        self.mode = mode
        self.resolution = resolution

    def _fit_config(self):
        self.n_pitches_ = 128

    def transform(self, X):
        check_is_fitted(self, "n_pitches_")
        return [encode_pianoroll(m, self.mode).matrix for m in self._prepare(X)]

    def inverse_transform(self, X, resolution=24):
        check_is_fitted(self, "n_pitches_")
        return [decode_pianoroll(PianoRoll(r, self.mode == "binary",
                                           self.resolution or resolution)) for r in X]


class NoteRepresentation(_MusicTransformer):
    """Encode songs as N x 4 (time, pitch, duration, velocity) tables."""

    def __init__(self, resolution=None):
        self.resolution = resolution

    def _fit_config(self):
        self.n_columns_ = 4

    def transform(self, X):
        check_is_fitted(self, "n_columns_")
        return [encode_notes(m) for m in self._prepare(X)]

    def inverse_transform(self, X, resolution=24):
        check_is_fitted(self, "n_columns_")
        return [decode_notes(t, self.resolution or resolution) for t in X]
