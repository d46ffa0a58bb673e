"""Hidden Markov models over sparse transition lists.

Transitions are a list of ``(from_state, to_state, probability)``
triples; probability-zero transitions are simply absent. Decoding runs
in the log domain throughout and is backed by the compiled kernels
(with a NumPy fallback) selected in :mod:`tactus.backend`.

Observation models are pluggable: anything with a
``log_likelihoods(observations) -> (num_frames, num_states)`` method
works. Three ready-made ones cover the common cases: a discrete symbol
table, one GMM per state, and per-state columns of an activation
matrix.
"""

import numpy as np

from .. import backend
from ..errors import (DimensionMismatch, InvalidParameter, NoValidPath,
                      TypeMismatch)
from .gmm import GmmModel


class DiscreteObservationModel:
    """Log-likelihoods looked up in a (num_states, num_symbols) table."""

    def __init__(self, table):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim != 2:
            raise DimensionMismatch("observation table must be 2-D")
        if np.any(table < 0):
            raise InvalidParameter("observation probabilities must be >= 0")
        self.table = table

    @property
    def num_states(self):
        return self.table.shape[0]

    def log_likelihoods(self, observations):
        obs = np.asarray(observations)
        if obs.ndim != 1:
            raise DimensionMismatch("discrete observations must be 1-D symbols")
        if obs.dtype.kind not in "iu":
            obs = obs.astype(np.int64)
        if np.any(obs < 0) or np.any(obs >= self.table.shape[1]):
            raise InvalidParameter("observation symbol outside the table")
        with np.errstate(divide="ignore"):
            return np.log(self.table[:, obs].T)


class GmmObservationModel:
    """One Gaussian mixture per state, evaluated on feature frames."""

    def __init__(self, state_gmms):
        state_gmms = list(state_gmms)
        if not state_gmms:
            raise InvalidParameter("need at least one state GMM")
        for gmm in state_gmms:
            if not isinstance(gmm, GmmModel):
                raise TypeMismatch("state observation models must be GmmModel")
        self.state_gmms = state_gmms

    @property
    def num_states(self):
        return len(self.state_gmms)

    def log_likelihoods(self, observations):
        obs = np.atleast_2d(np.asarray(observations, dtype=np.float64))
        out = np.empty((obs.shape[0], len(self.state_gmms)))
        for state, gmm in enumerate(self.state_gmms):
            out[:, state] = gmm.log_likelihood(obs)
        return out


class ActivationColumnObservationModel:
    """Each state reads one column of a per-frame likelihood matrix."""

    def __init__(self, columns):
        columns = np.asarray(columns, dtype=np.int64)
        if columns.ndim != 1:
            raise DimensionMismatch("columns must be a 1-D index list")
        if np.any(columns < 0):
            raise InvalidParameter("column indices must be >= 0")
        self.columns = columns

    @property
    def num_states(self):
        return len(self.columns)

    def log_likelihoods(self, observations):
        obs = np.atleast_2d(np.asarray(observations, dtype=np.float64))
        if obs.shape[1] <= self.columns.max():
            raise DimensionMismatch("activation matrix has %d columns, "
                                    "states read up to %d"
                                    % (obs.shape[1], self.columns.max()))
        with np.errstate(divide="ignore"):
            return np.log(obs[:, self.columns])


class HmmModel:
    """Sparse-transition hidden Markov model.

    Parameters
    ----------
    num_states : int
    transitions : iterable of (from_state, to_state, probability)
        Outgoing probabilities must sum to one for every state.
    initial_distribution : array, shape (num_states,)
        Must sum to one.
    observation_model : object
        Provides ``log_likelihoods(observations)``.
    """

    def __init__(self, num_states, transitions, initial_distribution,
                 observation_model):
        if num_states < 1:
            raise InvalidParameter("num_states must be >= 1")
        transitions = list(transitions)
        if not transitions:
            raise InvalidParameter("need at least one transition")
        from_state = np.array([t[0] for t in transitions], dtype=np.int64)
        to_state = np.array([t[1] for t in transitions], dtype=np.int64)
        prob = np.array([t[2] for t in transitions], dtype=np.float64)
        if np.any(from_state < 0) or np.any(from_state >= num_states) \
                or np.any(to_state < 0) or np.any(to_state >= num_states):
            raise InvalidParameter("transition endpoint outside [0, %d)"
                                   % num_states)
        if np.any(prob <= 0) or np.any(prob > 1):
            raise InvalidParameter("transition probabilities must be in (0, 1]")
        outgoing = np.zeros(num_states)
        np.add.at(outgoing, from_state, prob)
        if np.any(np.abs(outgoing - 1.0) > 1e-9):
            raise InvalidParameter(
                "outgoing probabilities must sum to 1 for every state")

        initial = np.asarray(initial_distribution, dtype=np.float64)
        if initial.shape != (num_states,):
            raise DimensionMismatch("initial distribution must be (num_states,)")
        if np.any(initial < 0) or abs(initial.sum() - 1.0) > 1e-9:
            raise InvalidParameter("initial distribution must sum to 1")

        # a fixed edge order (by target, then source) keeps decoding
        # deterministic and lets both kernel backends agree exactly
        order = np.lexsort((from_state, to_state))
        self.num_states = int(num_states)
        self.from_state = np.ascontiguousarray(from_state[order], dtype=np.int32)
        self.to_state = np.ascontiguousarray(to_state[order], dtype=np.int32)
        self.prob = np.ascontiguousarray(prob[order])
        self.initial_distribution = initial
        self.observation_model = observation_model
        with np.errstate(divide="ignore"):
            self._log_prob = np.log(self.prob)
            self._log_initial = np.log(initial)

    @property
    def transitions(self):
        """Transition triples in the model's canonical order."""
        return list(zip(self.from_state.tolist(), self.to_state.tolist(),
                        self.prob.tolist()))

    def _log_likelihoods(self, observations):
        log_lik = np.ascontiguousarray(
            self.observation_model.log_likelihoods(observations),
            dtype=np.float64)
        if log_lik.ndim != 2 or log_lik.shape[1] != self.num_states:
            raise DimensionMismatch("observation model must yield "
                                    "(num_frames, num_states) log-likelihoods")
        if log_lik.shape[0] < 1:
            raise InvalidParameter("need at least one observation frame")
        return log_lik

    def viterbi(self, observations):
        """Most probable state path.

        Returns
        -------
        path : int32 ndarray, shape (num_frames,)
        log_probability : float

        Raises
        ------
        NoValidPath
            If every state sequence has probability zero.
        """
        log_lik = self._log_likelihoods(observations)
        path, log_p = backend.viterbi_sparse(
            log_lik, self.from_state, self.to_state, self._log_prob,
            np.ascontiguousarray(self._log_initial))
        if log_p == -np.inf:
            raise NoValidPath("all state paths have probability zero")
        return path, float(log_p)

    def forward(self, observations):
        """Scaled forward variables, normalized per frame (rows sum to 1)."""
        log_lik = self._log_likelihoods(observations)
        posteriors, bad_frame = backend.forward_sparse(
            log_lik, self.from_state, self.to_state,
            np.ascontiguousarray(self.prob),
            np.ascontiguousarray(self.initial_distribution))
        if bad_frame >= 0:
            raise NoValidPath("zero total likelihood at frame %d" % bad_frame)
        return posteriors


def hmm_viterbi(model, observations):
    """Best state path and its log-probability under the model."""
    return model.viterbi(observations)


def hmm_forward(model, observations):
    """Per-frame state posteriors under the model."""
    return model.forward(observations)
