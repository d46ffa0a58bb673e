"""Machine learning inference: neural networks, GMMs, and HMMs, plus the
portable model file format. No training code."""

from .gmm import GmmModel, gmm_log_likelihood
from .hmm import (ActivationColumnObservationModel, DiscreteObservationModel,
                  GmmObservationModel, HmmModel, hmm_forward, hmm_viterbi)
from .models import load_model, save_model
from .nn import (ActivationLayer, BidirectionalLayer, Conv2DLayer, DenseLayer,
                 LSTMGate, LSTMLayer, MaxPoolLayer, NetworkModel,
                 NeuralNetworkProcessor, RecurrentLayer, apply_activation,
                 nn_predict)

__all__ = [
    "ActivationColumnObservationModel", "ActivationLayer",
    "BidirectionalLayer", "Conv2DLayer", "DenseLayer",
    "DiscreteObservationModel", "GmmModel", "GmmObservationModel", "HmmModel",
    "LSTMGate", "LSTMLayer", "MaxPoolLayer", "NetworkModel",
    "NeuralNetworkProcessor", "RecurrentLayer", "apply_activation",
    "gmm_log_likelihood", "hmm_forward", "hmm_viterbi", "load_model",
    "nn_predict", "save_model",
]
