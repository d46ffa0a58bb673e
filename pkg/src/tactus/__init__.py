"""tactus: audio and music signal analysis.

Low-level audio handling (loading, framing, spectrograms, filterbanks,
MFCC, chroma), machine-learning inference (neural networks, GMMs, HMMs),
high-level extractors (onsets, beats, tempo) with evaluation metrics,
and a serializable processing-pipeline framework tying it all together.
"""

from . import evaluation, features, ml  # noqa: F401 - populate the registry
from .audio import FramedSignal, Signal, frame_signal, load_signal, remix
from .backend import BACKEND
from .features import (Activation, BeatStateSpace, TempoHistogram,
                       build_beat_state_space, comb_filter_tempo,
                       dbn_beat_track, detect_beats, detect_onsets,
                       detect_tempo, estimate_tempo, pick_peaks,
                       spectral_flux)
from .pipeline import (ParallelProcessor, Pipeline, Processor,
                       SequentialProcessor, compose_parallel,
                       compose_sequential, load_pipeline, registered_kinds,
                       save_pipeline)
from .spectral import (STFT, Filterbank, Spectrogram, apply_filterbank,
                       bark_filterbank, build_filterbank, chroma,
                       log_compress, log_filterbank, magnitude,
                       mel_filterbank, mfcc, stft)

__version__ = "0.1.0"

__all__ = [
    "Activation", "BACKEND", "BeatStateSpace", "Filterbank", "FramedSignal",
    "ParallelProcessor", "Pipeline", "Processor", "STFT",
    "SequentialProcessor", "Signal", "Spectrogram", "TempoHistogram",
    "apply_filterbank", "bark_filterbank", "build_beat_state_space",
    "build_filterbank", "chroma", "comb_filter_tempo", "compose_parallel",
    "compose_sequential", "dbn_beat_track", "detect_beats", "detect_onsets",
    "detect_tempo", "estimate_tempo", "evaluation", "features",
    "frame_signal", "load_pipeline", "load_signal", "log_compress",
    "log_filterbank", "magnitude", "mel_filterbank", "mfcc", "ml",
    "pick_peaks", "registered_kinds", "remix", "save_pipeline",
    "spectral_flux", "stft",
]
