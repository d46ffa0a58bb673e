"""Pure NumPy fallbacks for the compiled kernels in ``tactus._dsp``.

Signatures and semantics mirror the compiled module. Decoded paths are
identical (both backends resolve ties by the same first-maximum rule);
floating point results agree to rounding, since the accumulation order
only differs in the final reductions.
"""

import numpy as np


def viterbi_sparse(log_lik, from_state, to_state, log_prob, log_initial):
    """Best state path through a sparse-transition model, log domain.

    Parameters
    ----------
    log_lik : ndarray, shape (num_frames, num_states)
        Per-frame observation log-likelihoods.
    from_state, to_state : int32 ndarray, shape (num_edges,)
        Transition endpoints, sorted by ``to_state``.
    log_prob : ndarray, shape (num_edges,)
        Log transition probabilities.
    log_initial : ndarray, shape (num_states,)
        Log initial state distribution.

    Returns
    -------
    path : int32 ndarray, shape (num_frames,)
    log_p : float
        ``-inf`` when no valid path exists (the path is then meaningless).
    """
    num_frames, num_states = log_lik.shape
    num_edges = len(log_prob)
    # group edges by target state once; edges arrive sorted by to_state
    group_starts = np.flatnonzero(np.r_[True, np.diff(to_state) != 0])
    group_targets = to_state[group_starts]
    edge_index = np.arange(num_edges)

    pointers = np.full((num_frames, num_states), -1, dtype=np.int32)
    delta = log_initial + log_lik[0]
    for t in range(1, num_frames):
        cand = delta[from_state] + log_prob
        new = np.full(num_states, -np.inf)
        new[group_targets] = np.maximum.reduceat(cand, group_starts)
        # the first edge attaining the maximum wins, like the compiled loop
        att = cand == new[to_state]
        first = np.full(num_states, num_edges)
        np.minimum.at(first, to_state[att], edge_index[att])
        hit = first < num_edges
        pointers[t, hit] = from_state[first[hit]]
        delta = new + log_lik[t]

    best = int(np.argmax(delta))
    log_p = float(delta[best])
    path = np.zeros(num_frames, dtype=np.int32)
    if log_p == -np.inf:
        return path, -np.inf
    path[-1] = best
    for t in range(num_frames - 1, 0, -1):
        path[t - 1] = pointers[t, path[t]]
    return path, log_p


def forward_sparse(log_lik, from_state, to_state, prob, initial):
    """Per-frame normalized forward variables.

    Returns ``(posteriors, bad_frame)`` where ``bad_frame`` is the index
    of the first frame whose total likelihood vanished, or -1 on success.
    """
    num_frames, num_states = log_lik.shape
    out = np.zeros((num_frames, num_states))
    alpha = initial.astype(np.float64).copy()
    for t in range(num_frames):
        if t:
            contrib = alpha[from_state] * prob
            alpha = np.zeros(num_states)
            np.add.at(alpha, to_state, contrib)
        shift = log_lik[t].max()
        if shift == -np.inf:
            return out, t
        alpha *= np.exp(log_lik[t] - shift)
        total = alpha.sum()
        if total <= 0.0:
            return out, t
        alpha /= total
        out[t] = alpha
    return out, -1


def comb_filter_bank(x, min_lag, max_lag, alpha):
    """Feed-backward comb filter energies for integer lags.

    For each lag ``tau`` in ``[min_lag, max_lag]`` runs
    ``y[t] = x[t] + alpha * y[t - tau]`` and returns the resonance
    energies ``sum(x * y)``, one per lag.
    """
    n = len(x)
    strengths = np.empty(max_lag - min_lag + 1)
    for i, lag in enumerate(range(min_lag, max_lag + 1)):
        y = x.astype(np.float64).copy()
        # elements a full lag apart are independent, so whole blocks can
        # be updated at once without breaking the recurrence
        for start in range(lag, n, lag):
            stop = min(start + lag, n)
            y[start:stop] += alpha * y[start - lag:stop - lag]
        strengths[i] = np.dot(x, y)
    return strengths
