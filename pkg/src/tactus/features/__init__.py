"""High-level extractors: onset detection, beat tracking, and tempo
estimation, built on the spectral and ml modules."""

from .activations import Activation, NormalizeProcessor
from .beats import (BeatStateSpace, BeatTrackerProcessor, beat_pipeline,
                    build_beat_state_space, dbn_beat_track, detect_beats)
from .onsets import (PeakPickingProcessor, SpectralFluxProcessor,
                     detect_onsets, onset_pipeline, pick_peaks, spectral_flux)
from .tempo import (CombFilterProcessor, TempoDetectProcessor, TempoHistogram,
                    comb_filter_tempo, detect_tempo, estimate_tempo,
                    tempo_pipeline)

__all__ = [
    "Activation", "BeatStateSpace", "BeatTrackerProcessor",
    "CombFilterProcessor", "NormalizeProcessor", "PeakPickingProcessor",
    "SpectralFluxProcessor", "TempoDetectProcessor", "TempoHistogram",
    "beat_pipeline", "build_beat_state_space", "comb_filter_tempo",
    "dbn_beat_track", "detect_beats", "detect_onsets", "detect_tempo",
    "estimate_tempo", "onset_pipeline", "pick_peaks", "spectral_flux",
    "tempo_pipeline",
]
