"""Onset detection: spectral flux, peak picking, and the standard chain.

The default chain needs no trained model: it reduces the signal to a
log mel spectrogram, takes the positive spectral difference, normalizes
it, and picks peaks. A network model producing the activation can be
swapped in instead.
"""

import numpy as np
from scipy.ndimage import maximum_filter1d

from ..audio import FramerProcessor, SignalLoaderProcessor
from ..errors import InvalidParameter, TypeMismatch
from ..ml.nn import NeuralNetworkProcessor
from ..pipeline import Pipeline, Processor, SequentialProcessor, register
from ..spectral import (FilterbankProcessor, LogCompressProcessor,
                        MagnitudeProcessor, Spectrogram, STFTProcessor)
from .activations import Activation, NormalizeProcessor


def spectral_flux(spectrogram, max_filter_radius=0):
    """Half-wave rectified spectral difference summed over bands.

    ``SF(t) = sum_b max(0, S(t, b) - S~(t-1, b))`` where ``S~`` is the
    previous frame, maximum-filtered over ``+-max_filter_radius``
    neighboring bands (radius 0 compares bands directly). Frame 0 is 0.

    Returns
    -------
    Activation
    """
    if not isinstance(spectrogram, Spectrogram):
        raise TypeMismatch("spectral_flux expects a Spectrogram")
    if max_filter_radius < 0:
        raise InvalidParameter("max_filter_radius must be >= 0")
    mags = spectrogram.values
    if mags.shape[0] == 0:
        return Activation(np.zeros(0), spectrogram.frame_rate)
    if max_filter_radius:
        reference = maximum_filter1d(mags, size=2 * max_filter_radius + 1,
                                     axis=1, mode="nearest")
    else:
        reference = mags
    diff = np.maximum(mags[1:] - reference[:-1], 0.0).sum(axis=1)
    return Activation(np.concatenate(([0.0], diff)), spectrogram.frame_rate)


def pick_peaks(activation, threshold, pre_max=0.03, post_max=0.03,
               combine=0.03, smooth=0.0):
    """Turn an activation curve into onset times.

    A frame is reported when it (1) reaches ``threshold``, (2) is the
    maximum within ``[t - pre_max, t + post_max]`` seconds, and (3) lies
    more than ``combine`` seconds after the previously reported onset
    (at exactly ``combine`` apart, the earlier one wins). An optional
    moving average of ``smooth`` seconds is applied first.

    Returns
    -------
    ndarray
        Onset times in seconds, strictly increasing.
    """
    if not isinstance(activation, Activation):
        raise TypeMismatch("pick_peaks expects an Activation")
    if pre_max < 0 or post_max < 0 or combine < 0 or smooth < 0:
        raise InvalidParameter("window parameters must be >= 0")
    x = activation.column()
    fps = activation.fps
    num_frames = len(x)
    if num_frames == 0:
        return np.zeros(0)

    width = int(round(smooth * fps))
    if width >= 2:
        x = np.convolve(x, np.ones(width) / width, mode="same")

    pre = int(round(pre_max * fps))
    post = int(round(post_max * fps))
    # the minimum gap is compared in frames: frame counts are exact, so
    # a peak exactly `combine` seconds after the previous one reliably
    # loses the tie
    min_gap = combine * fps
    onsets = []
    last = None
    for t in np.flatnonzero(x >= threshold):
        window = x[max(0, t - pre):min(num_frames, t + post + 1)]
        if x[t] < window.max():
            continue
        if last is not None and t - last <= min_gap:
            continue
        onsets.append(t / fps)
        last = t
    return np.asarray(onsets)


@register
class SpectralFluxProcessor(Processor):
    """Spectrogram -> spectral flux Activation."""

    kind = "spectral_flux"

    def __init__(self, max_filter_radius=0):
        if max_filter_radius < 0:
            raise InvalidParameter("max_filter_radius must be >= 0")
        self._max_filter_radius = int(max_filter_radius)

    def params(self):
        return {"max_filter_radius": self._max_filter_radius}

    def process(self, data):
        return spectral_flux(data, max_filter_radius=self._max_filter_radius)


@register
class PeakPickingProcessor(Processor):
    """Activation -> onset times in seconds."""

    kind = "pick_peaks"

    def __init__(self, threshold=0.3, pre_max=0.03, post_max=0.03,
                 combine=0.03, smooth=0.0):
        if pre_max < 0 or post_max < 0 or combine < 0 or smooth < 0:
            raise InvalidParameter("window parameters must be >= 0")
        self._threshold = float(threshold)
        self._pre_max = float(pre_max)
        self._post_max = float(post_max)
        self._combine = float(combine)
        self._smooth = float(smooth)

    def params(self):
        return {"threshold": self._threshold, "pre_max": self._pre_max,
                "post_max": self._post_max, "combine": self._combine,
                "smooth": self._smooth}

    def process(self, data):
        return pick_peaks(data, self._threshold, pre_max=self._pre_max,
                          post_max=self._post_max, combine=self._combine,
                          smooth=self._smooth)


def spectrogram_front_end(fps=100.0, frame_size=2048, window="hann",
                          num_bands=40, fmin=20.0, fmax=17000.0, mul=1.0,
                          add=1.0, sample_rate=None, decoder_cmd=None):
    """Processors from an audio path to a log mel spectrogram."""
    return [
        SignalLoaderProcessor(sample_rate=sample_rate, num_channels=1,
                              decoder_cmd=decoder_cmd),
        FramerProcessor(frame_size=frame_size, fps=fps),
        STFTProcessor(window=window),
        MagnitudeProcessor(),
        FilterbankProcessor(filterbank_kind="mel", num_bands=num_bands,
                            fmin=fmin, fmax=fmax),
        LogCompressProcessor(mul=mul, add=add),
    ]


def onset_pipeline(fps=100.0, frame_size=2048, window="hann", num_bands=40,
                   fmin=20.0, fmax=17000.0, mul=1.0, add=1.0,
                   max_filter_radius=0, threshold=0.3, pre_max=0.03,
                   post_max=0.03, combine=0.03, smooth=0.0, model_path=None,
                   sample_rate=None, decoder_cmd=None):
    """Pipeline from an audio path to onset times in seconds.

    With ``model_path`` the activation comes from a network model run on
    the log mel spectrogram instead of the spectral flux.
    """
    steps = spectrogram_front_end(fps=fps, frame_size=frame_size,
                                  window=window, num_bands=num_bands,
                                  fmin=fmin, fmax=fmax, mul=mul, add=add,
                                  sample_rate=sample_rate,
                                  decoder_cmd=decoder_cmd)
    if model_path is not None:
        steps.append(NeuralNetworkProcessor(model_path))
    else:
        steps.append(SpectralFluxProcessor(max_filter_radius=max_filter_radius))
        steps.append(NormalizeProcessor())
    steps.append(PeakPickingProcessor(threshold=threshold, pre_max=pre_max,
                                      post_max=post_max, combine=combine,
                                      smooth=smooth))
    return Pipeline(SequentialProcessor(steps))


def detect_onsets(path, **kwargs):
    """Run the default onset chain on an audio file."""
    return onset_pipeline(**kwargs).process(path)
