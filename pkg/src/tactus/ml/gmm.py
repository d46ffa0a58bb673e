"""Gaussian mixture models with diagonal covariances (inference only)."""

import numpy as np
from scipy.special import logsumexp

from ..errors import DimensionMismatch, InvalidParameter

_LOG_2PI = np.log(2.0 * np.pi)


class GmmModel:
    """Mixture of diagonal-covariance Gaussians.

    Parameters
    ----------
    weights : array, shape (num_components,)
        Mixture weights; must sum to one.
    means : array, shape (num_components, dim)
    covariances : array, shape (num_components, dim)
        Per-dimension variances; strictly positive.
    """

    def __init__(self, weights, means, covariances):
        weights = np.asarray(weights, dtype=np.float64)
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        covariances = np.atleast_2d(np.asarray(covariances, dtype=np.float64))
        if weights.ndim != 1 or len(weights) != means.shape[0]:
            raise DimensionMismatch("one weight per component required")
        if covariances.shape != means.shape:
            raise DimensionMismatch("covariances must match the means' shape")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidParameter("component weights must sum to 1")
        if np.any(weights < 0):
            raise InvalidParameter("component weights must be nonnegative")
        if np.any(covariances <= 0):
            raise InvalidParameter("covariances must be strictly positive")
        self.weights = weights
        self.means = means
        self.covariances = covariances

    @property
    def num_components(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def log_likelihood(self, x):
        """Log density of one point (dim,) or many points (n, dim)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch("expected %d-dimensional input, got %d"
                                    % (self.dim, x.shape[-1]))
        diff = x[..., np.newaxis, :] - self.means
        quad = (diff * diff / self.covariances).sum(axis=-1)
        log_det = np.log(self.covariances).sum(axis=-1)
        with np.errstate(divide="ignore"):  # zero weights are legal
            component = (np.log(self.weights)
                         - 0.5 * (self.dim * _LOG_2PI + log_det + quad))
        return logsumexp(component, axis=-1)


def gmm_log_likelihood(model, x):
    """Log mixture density of ``x`` under the model."""
    return model.log_likelihood(x)
