"""Beat tracking: a phase/interval state space decoded over a beat
activation curve.

The state space jointly encodes the beat interval (tempo) and the phase
within the current beat. Phase advances deterministically by one frame;
at each phase wrap (a beat boundary) the interval may change, with
probability falling off exponentially in the relative interval change.
States early in the beat period form the "beat window" and emit the
activation value; all other states emit its complement, scaled so every
frame's likelihoods stay positive. The best state path is decoded with
the HMM Viterbi operation and beats are reported wherever the decoded
phase is zero.
"""

import math

import numpy as np

from ..errors import DimensionMismatch, InvalidParameter, TypeMismatch
from ..ml.hmm import ActivationColumnObservationModel, HmmModel
from ..pipeline import Pipeline, Processor, SequentialProcessor, register
from .activations import Activation, NormalizeProcessor
from .onsets import SpectralFluxProcessor, spectrogram_front_end

# keeps likelihoods positive when the activation hits exactly 0 or 1
_LIKELIHOOD_FLOOR = 1e-30


class BeatStateSpace:
    """States (interval tau, phase phi) for all integer beat intervals in
    ``[min_interval, max_interval]`` frames.

    States are enumerated interval-major, phase-minor: interval tau
    contributes tau states with phases ``0 .. tau - 1``, so the total
    state count is the sum of the intervals.
    """

    def __init__(self, min_interval, max_interval):
        if min_interval < 2:
            raise InvalidParameter("min_interval must be >= 2")
        if max_interval < min_interval:
            raise InvalidParameter("max_interval must be >= min_interval")
        self.intervals = np.arange(int(min_interval), int(max_interval) + 1)
        self.num_states = int(self.intervals.sum())
        self.first_states = np.concatenate(
            ([0], np.cumsum(self.intervals)[:-1]))
        self.state_intervals = np.repeat(self.intervals, self.intervals)
        self.state_phases = np.concatenate(
            [np.arange(tau) for tau in self.intervals])

    @classmethod
    def from_bpm(cls, min_bpm, max_bpm, fps):
        """Build the space for a tempo range in beats per minute."""
        if not 0 < min_bpm < max_bpm:
            raise InvalidParameter("need 0 < min_bpm < max_bpm")
        if fps <= 0:
            raise InvalidParameter("fps must be positive")
        min_interval = int(math.floor(60.0 * fps / max_bpm + 0.5))
        max_interval = int(math.floor(60.0 * fps / min_bpm + 0.5))
        if min_interval < 2:
            raise InvalidParameter(
                "max_bpm %.1f needs beat intervals shorter than 2 frames "
                "at %.1f fps" % (max_bpm, fps))
        return cls(min_interval, max_interval)

    @property
    def min_interval(self):
        return int(self.intervals[0])

    @property
    def max_interval(self):
        return int(self.intervals[-1])

    def state(self, interval, phase):
        """State index of (interval, phase)."""
        if not self.min_interval <= interval <= self.max_interval:
            raise InvalidParameter("interval %d outside [%d, %d]"
                                   % (interval, self.min_interval,
                                      self.max_interval))
        if not 0 <= phase < interval:
            raise InvalidParameter("phase %d outside [0, %d)" % (phase, interval))
        return int(self.first_states[interval - self.min_interval] + phase)


def build_beat_state_space(min_bpm, max_bpm, fps):
    """State space covering the integer beat intervals of a BPM range."""
    return BeatStateSpace.from_bpm(min_bpm, max_bpm, fps)


def _beat_transitions(space, transition_lambda):
    """Sparse transitions: deterministic phase advance, exponential
    interval-change distribution at beat boundaries."""
    froms, tos, probs = [], [], []
    # within a beat the phase advances by one, interval unchanged
    for tau, first in zip(space.intervals, space.first_states):
        states = np.arange(first, first + tau - 1)
        froms.append(states)
        tos.append(states + 1)
        probs.append(np.ones(tau - 1))
    # at the wrap the interval may change
    intervals = space.intervals.astype(np.float64)
    wrap_states = space.first_states + space.intervals - 1
    for tau, wrap in zip(space.intervals, wrap_states):
        change = np.exp(-transition_lambda * np.abs(intervals / tau - 1.0))
        change /= change.sum()
        froms.append(np.full(len(intervals), wrap))
        tos.append(space.first_states)
        probs.append(change)
    return (np.concatenate(froms), np.concatenate(tos), np.concatenate(probs))


def _beat_observation_columns(space, observation_lambda):
    """Column indices: 0 for beat-window states, 1 for the rest.

    A state is in the beat window when its phase is below
    ``interval / observation_lambda``.
    """
    border = space.state_intervals / observation_lambda
    return np.where(space.state_phases < border, 0, 1)


def beat_hmm(space, transition_lambda=100.0, observation_lambda=16.0):
    """HMM over a beat state space with a uniform initial distribution."""
    if transition_lambda <= 0:
        raise InvalidParameter("transition_lambda must be positive")
    if observation_lambda <= 1:
        raise InvalidParameter("observation_lambda must be > 1")
    froms, tos, probs = _beat_transitions(space, transition_lambda)
    columns = _beat_observation_columns(space, observation_lambda)
    initial = np.full(space.num_states, 1.0 / space.num_states)
    return HmmModel(space.num_states, zip(froms, tos, probs), initial,
                    ActivationColumnObservationModel(columns))


def beat_observation_likelihoods(activation_values, observation_lambda=16.0):
    """Per-frame likelihood columns [beat, non-beat] for the beat HMM.

    Beat-window states emit the activation itself; the remaining states
    emit ``(1 - activation) / (observation_lambda - 1)``. Values are
    floored at a tiny positive constant so every frame stays decodable.
    """
    v = np.clip(np.asarray(activation_values, dtype=np.float64), 0.0, 1.0)
    beat = np.maximum(v, _LIKELIHOOD_FLOOR)
    rest = np.maximum((1.0 - v) / (observation_lambda - 1.0), _LIKELIHOOD_FLOOR)
    return np.stack((beat, rest), axis=1)


def dbn_beat_track(activation, space, transition_lambda=100.0,
                   observation_lambda=16.0):
    """Decode beat times from a beat activation curve.

    Parameters
    ----------
    activation : Activation
        Single-column curve with values in [0, 1] (clipped otherwise).
    space : BeatStateSpace
    transition_lambda : float
        Steepness of the interval-change penalty at beat boundaries.
    observation_lambda : float
        Fraction of the beat interval treated as the beat window.

    Returns
    -------
    ndarray
        Beat times in seconds: the times of frames whose decoded phase
        is zero.
    """
    if not isinstance(activation, Activation):
        raise TypeMismatch("dbn_beat_track expects an Activation")
    values = activation.column()
    if len(values) == 0:
        return np.zeros(0)
    model = beat_hmm(space, transition_lambda=transition_lambda,
                     observation_lambda=observation_lambda)
    likelihoods = beat_observation_likelihoods(
        values, observation_lambda=observation_lambda)
    path, _ = model.viterbi(likelihoods)
    beat_frames = np.flatnonzero(space.state_phases[path] == 0)
    return beat_frames / activation.fps


@register
class BeatTrackerProcessor(Processor):
    """Activation -> beat times in seconds."""

    kind = "beat_tracker"

    def __init__(self, min_bpm=55.0, max_bpm=215.0, transition_lambda=100.0,
                 observation_lambda=16.0):
        if not 0 < min_bpm < max_bpm:
            raise InvalidParameter("need 0 < min_bpm < max_bpm")
        if transition_lambda <= 0:
            raise InvalidParameter("transition_lambda must be positive")
        if observation_lambda <= 1:
            raise InvalidParameter("observation_lambda must be > 1")
        self._min_bpm = float(min_bpm)
        self._max_bpm = float(max_bpm)
        self._transition_lambda = float(transition_lambda)
        self._observation_lambda = float(observation_lambda)

    def params(self):
        return {"min_bpm": self._min_bpm, "max_bpm": self._max_bpm,
                "transition_lambda": self._transition_lambda,
                "observation_lambda": self._observation_lambda}

    def process(self, data):
        if not isinstance(data, Activation):
            raise TypeMismatch("beat_tracker expects an Activation")
        if data.num_frames == 0:
            return np.zeros(0)
        space = BeatStateSpace.from_bpm(self._min_bpm, self._max_bpm, data.fps)
        return dbn_beat_track(data, space,
                              transition_lambda=self._transition_lambda,
                              observation_lambda=self._observation_lambda)


def beat_pipeline(fps=100.0, frame_size=2048, window="hann", num_bands=40,
                  fmin=20.0, fmax=17000.0, mul=1.0, add=1.0,
                  max_filter_radius=0, min_bpm=55.0, max_bpm=215.0,
                  transition_lambda=100.0, observation_lambda=16.0,
                  model_path=None, sample_rate=None, decoder_cmd=None):
    """Pipeline from an audio path to beat times in seconds."""
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
    steps.append(BeatTrackerProcessor(
        min_bpm=min_bpm, max_bpm=max_bpm, transition_lambda=transition_lambda,
        observation_lambda=observation_lambda))
    return Pipeline(SequentialProcessor(steps))


def detect_beats(path, **kwargs):
    """Run the default beat chain on an audio file."""
    return beat_pipeline(**kwargs).process(path)
