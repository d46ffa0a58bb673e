"""Tempo estimation with resonating comb filters.

Each integer lag in the BPM-derived range gets a feed-backward comb
filter ``y(t) = x(t) + alpha * y(t - lag)``; the histogram stores the
resonance energy ``sum(x * y)`` per lag. Histograms are indexed by lag
(in frames) rather than BPM to avoid rounding ambiguity; the BPM of a
lag is ``60 * fps / lag``.
"""

import math

import numpy as np

from .. import backend
from ..errors import EmptyHistogram, InvalidParameter, TypeMismatch
from ..pipeline import Pipeline, Processor, SequentialProcessor, register
from .activations import Activation, NormalizeProcessor
from .onsets import SpectralFluxProcessor, spectrogram_front_end


class TempoHistogram:
    """Resonance strength per integer beat interval (lag, in frames)."""

    def __init__(self, strengths, lags, fps):
        strengths = np.asarray(strengths, dtype=np.float64)
        lags = np.asarray(lags, dtype=np.int64)
        if strengths.shape != lags.shape or strengths.ndim != 1:
            raise InvalidParameter("strengths and lags must be matching 1-D")
        if strengths.size and strengths.min() < 0:
            raise InvalidParameter("strengths must be nonnegative")
        if not fps > 0:
            raise InvalidParameter("fps must be positive")
        self.strengths = strengths
        self.lags = lags
        self.fps = float(fps)

    def __len__(self):
        return len(self.lags)

    def bpm(self, lag):
        """Tempo of a lag in beats per minute."""
        return 60.0 * self.fps / lag


def comb_filter_tempo(activation, min_bpm=40.0, max_bpm=250.0, alpha=0.79):
    """Resonating comb filter bank over a beat activation curve.

    Parameters
    ----------
    activation : Activation
        Single-column activation.
    min_bpm, max_bpm : float
        Tempo range; converted to the integer lag range
        ``[round(60 * fps / max_bpm), round(60 * fps / min_bpm)]``.
    alpha : float
        Feedback gain in [0, 1).

    Returns
    -------
    TempoHistogram
    """
    if not isinstance(activation, Activation):
        raise TypeMismatch("comb_filter_tempo expects an Activation")
    if not 0 < min_bpm < max_bpm:
        raise InvalidParameter("need 0 < min_bpm < max_bpm")
    if not 0 <= alpha < 1:
        raise InvalidParameter("alpha must be in [0, 1)")
    fps = activation.fps
    min_lag = int(math.floor(60.0 * fps / max_bpm + 0.5))
    max_lag = int(math.floor(60.0 * fps / min_bpm + 0.5))
    if min_lag < 1:
        raise InvalidParameter("max_bpm %.1f too fast for %.1f fps"
                               % (max_bpm, fps))
    x = np.ascontiguousarray(activation.column(), dtype=np.float64)
    strengths = backend.comb_filter_bank(x, min_lag, max_lag, float(alpha))
    return TempoHistogram(strengths, np.arange(min_lag, max_lag + 1), fps)


def detect_tempo(histogram, max_tempi=3):
    """Strongest tempi of a histogram.

    Local maxima are ranked by strength (ties broken toward the slower
    tempo, i.e. the larger lag) and the strengths of the reported tempi
    are normalized to sum to one.

    Returns
    -------
    list of (bpm, relative_strength)
        Strongest first.
    """
    if not isinstance(histogram, TempoHistogram):
        raise TypeMismatch("detect_tempo expects a TempoHistogram")
    if len(histogram) == 0:
        raise EmptyHistogram("empty tempo histogram")
    if max_tempi < 1:
        raise InvalidParameter("max_tempi must be >= 1")
    s = histogram.strengths
    left = np.concatenate(([-np.inf], s[:-1]))
    right = np.concatenate((s[1:], [-np.inf]))
    peaks = np.flatnonzero((s > left) & (s >= right))
    if peaks.size == 0:  # plateaus only; fall back to the global maximum
        peaks = np.array([int(np.argmax(s))])
    order = np.lexsort((-histogram.lags[peaks], -s[peaks]))
    top = peaks[order][:max_tempi]
    total = s[top].sum()
    if total <= 0:
        weights = np.full(len(top), 1.0 / len(top))
    else:
        weights = s[top] / total
    return [(histogram.bpm(lag), float(w))
            for lag, w in zip(histogram.lags[top], weights)]


@register
class CombFilterProcessor(Processor):
    """Activation -> TempoHistogram."""

    kind = "tempo_histogram"

    def __init__(self, min_bpm=40.0, max_bpm=250.0, alpha=0.79):
        if not 0 < min_bpm < max_bpm:
            raise InvalidParameter("need 0 < min_bpm < max_bpm")
        if not 0 <= alpha < 1:
            raise InvalidParameter("alpha must be in [0, 1)")
        self._min_bpm = float(min_bpm)
        self._max_bpm = float(max_bpm)
        self._alpha = float(alpha)

    def params(self):
        return {"min_bpm": self._min_bpm, "max_bpm": self._max_bpm,
                "alpha": self._alpha}

    def process(self, data):
        return comb_filter_tempo(data, min_bpm=self._min_bpm,
                                 max_bpm=self._max_bpm, alpha=self._alpha)


@register
class TempoDetectProcessor(Processor):
    """TempoHistogram -> list of (bpm, relative strength)."""

    kind = "detect_tempo"

    def __init__(self, max_tempi=3):
        if max_tempi < 1:
            raise InvalidParameter("max_tempi must be >= 1")
        self._max_tempi = int(max_tempi)

    def params(self):
        return {"max_tempi": self._max_tempi}

    def process(self, data):
        return detect_tempo(data, max_tempi=self._max_tempi)


def tempo_pipeline(fps=100.0, frame_size=2048, window="hann", num_bands=40,
                   fmin=20.0, fmax=17000.0, mul=1.0, add=1.0,
                   max_filter_radius=0, min_bpm=40.0, max_bpm=250.0,
                   alpha=0.79, max_tempi=3, model_path=None, sample_rate=None,
                   decoder_cmd=None):
    """Pipeline from an audio path to a list of (bpm, strength)."""
    steps = spectrogram_front_end(fps=fps, frame_size=frame_size,
                                  window=window, num_bands=num_bands,
                                  fmin=fmin, fmax=fmax, mul=mul, add=add,
                                  sample_rate=sample_rate,
                                  decoder_cmd=decoder_cmd)
    if model_path is not None:
        from ..ml.nn import NeuralNetworkProcessor
        steps.append(NeuralNetworkProcessor(model_path))
    else:
        steps.append(SpectralFluxProcessor(max_filter_radius=max_filter_radius))
    steps.append(NormalizeProcessor())
    steps.append(CombFilterProcessor(min_bpm=min_bpm, max_bpm=max_bpm,
                                     alpha=alpha))
    steps.append(TempoDetectProcessor(max_tempi=max_tempi))
    return Pipeline(SequentialProcessor(steps))


def estimate_tempo(path, **kwargs):
    """Run the default tempo chain on an audio file."""
    return tempo_pipeline(**kwargs).process(path)
