"""Neural network inference: dense, recurrent, LSTM, bidirectional,
convolutional and pooling layers.

Inference only; there is no training code. Weights are typically stored
as 32-bit floats in model files but all computation here runs in 64-bit,
so accumulation error is decoupled from storage precision.
"""

import numpy as np

from ..errors import (DimensionMismatch, IncompatibleLayerOrder,
                      InvalidParameter, KernelTooLarge, TypeMismatch,
                      UnknownActivation)
from ..pipeline import Processor, register

ACTIVATIONS = ("linear", "sigmoid", "tanh", "relu", "softmax")


def apply_activation(kind, x):
    """Apply an activation function elementwise.

    softmax is computed with max subtraction and normalizes along the
    last axis, so huge inputs cannot overflow.
    """
    x = np.asarray(x, dtype=np.float64)
    if kind == "linear":
        return x
    if kind == "sigmoid":
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-x))
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "softmax":
        z = np.exp(x - np.max(x, axis=-1, keepdims=True))
        return z / z.sum(axis=-1, keepdims=True)
    raise UnknownActivation("unknown activation %r" % (kind,))


def _check_activation(kind):
    if kind not in ACTIVATIONS:
        raise UnknownActivation("unknown activation %r" % (kind,))
    return kind


def _sigmoid(x):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _as_sequence(data):
    seq = np.asarray(data, dtype=np.float64)
    if seq.ndim == 1:
        seq = seq[np.newaxis, :]
    if seq.ndim != 2:
        raise DimensionMismatch("expected a (frames, features) sequence")
    return seq


class DenseLayer:
    """Fully connected layer: ``activation(x @ weights + biases)``.

    ``weights`` is (input_size, output_size); applied per frame.
    """

    kind = "dense"

    def __init__(self, weights, biases, activation="linear"):
        weights = np.asarray(weights, dtype=np.float64)
        biases = np.asarray(biases, dtype=np.float64)
        if weights.ndim != 2:
            raise DimensionMismatch("dense weights must be 2-D")
        if biases.shape != (weights.shape[1],):
            raise DimensionMismatch("biases must match the output size")
        self.weights = weights
        self.biases = biases
        self.activation = _check_activation(activation)

    @property
    def input_size(self):
        return self.weights.shape[0]

    @property
    def output_size(self):
        return self.weights.shape[1]

    def forward(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.shape[-1] != self.input_size:
            raise DimensionMismatch("expected %d input features, got %d"
                                    % (self.input_size, data.shape[-1]))
        return apply_activation(self.activation,
                                data @ self.weights + self.biases)


class RecurrentLayer:
    """Simple recurrent layer.

    ``h_t = activation(x_t @ weights + h_{t-1} @ recurrent_weights +
    biases)`` with ``h_{-1} = 0``.
    """

    kind = "recurrent"

    def __init__(self, weights, recurrent_weights, biases, activation="tanh"):
        weights = np.asarray(weights, dtype=np.float64)
        recurrent_weights = np.asarray(recurrent_weights, dtype=np.float64)
        biases = np.asarray(biases, dtype=np.float64)
        out = weights.shape[1] if weights.ndim == 2 else -1
        if weights.ndim != 2:
            raise DimensionMismatch("recurrent weights must be 2-D")
        if recurrent_weights.shape != (out, out):
            raise DimensionMismatch("recurrent_weights must be (out, out)")
        if biases.shape != (out,):
            raise DimensionMismatch("biases must match the output size")
        self.weights = weights
        self.recurrent_weights = recurrent_weights
        self.biases = biases
        self.activation = _check_activation(activation)

    @property
    def input_size(self):
        return self.weights.shape[0]

    @property
    def output_size(self):
        return self.weights.shape[1]

    def forward(self, sequence):
        seq = _as_sequence(sequence)
        if seq.shape[1] != self.input_size:
            raise DimensionMismatch("expected %d input features, got %d"
                                    % (self.input_size, seq.shape[1]))
        num_frames = seq.shape[0]
        out = np.empty((num_frames, self.output_size))
        h = np.zeros(self.output_size)
        for t in range(num_frames):
            h = apply_activation(
                self.activation,
                seq[t] @ self.weights + h @ self.recurrent_weights + self.biases)
            out[t] = h
        return out


class LSTMGate:
    """Parameters of one LSTM gate; the peephole vector is optional."""

    def __init__(self, weights, recurrent_weights, biases, peephole=None):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.recurrent_weights = np.asarray(recurrent_weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)
        self.peephole = (None if peephole is None
                         else np.asarray(peephole, dtype=np.float64))
        out = self.biases.shape[0] if self.biases.ndim == 1 else -1
        if self.weights.ndim != 2 or self.weights.shape[1] != out:
            raise DimensionMismatch("gate weights must be (input, out)")
        if self.recurrent_weights.shape != (out, out):
            raise DimensionMismatch("gate recurrent_weights must be (out, out)")
        if self.peephole is not None and self.peephole.shape != (out,):
            raise DimensionMismatch("gate peephole must be (out,)")


class LSTMLayer:
    """Long short-term memory layer with optional peephole connections.

    Per frame, with ``h_{-1} = c_{-1} = 0``::

        i_t = sigmoid(x W_i + h R_i + p_i * c_{t-1} + b_i)
        f_t = sigmoid(x W_f + h R_f + p_f * c_{t-1} + b_f)
        c~_t = tanh(x W_c + h R_c + b_c)
        c_t = f_t * c_{t-1} + i_t * c~_t
        o_t = sigmoid(x W_o + h R_o + p_o * c_t + b_o)
        h_t = o_t * tanh(c_t)
    """

    kind = "lstm"

    def __init__(self, input_gate, forget_gate, cell_gate, output_gate):
        gates = (input_gate, forget_gate, cell_gate, output_gate)
        for gate in gates:
            if not isinstance(gate, LSTMGate):
                raise TypeMismatch("LSTM gates must be LSTMGate instances")
        if cell_gate.peephole is not None:
            raise InvalidParameter("the cell gate takes no peephole")
        sizes = {gate.biases.shape[0] for gate in gates}
        inputs = {gate.weights.shape[0] for gate in gates}
        if len(sizes) != 1 or len(inputs) != 1:
            raise DimensionMismatch("all gates must share their sizes")
        self.input_gate = input_gate
        self.forget_gate = forget_gate
        self.cell_gate = cell_gate
        self.output_gate = output_gate

    @property
    def input_size(self):
        return self.input_gate.weights.shape[0]

    @property
    def output_size(self):
        return self.input_gate.biases.shape[0]

    def forward(self, sequence):
        seq = _as_sequence(sequence)
        if seq.shape[1] != self.input_size:
            raise DimensionMismatch("expected %d input features, got %d"
                                    % (self.input_size, seq.shape[1]))
        ig, fg, cg, og = (self.input_gate, self.forget_gate, self.cell_gate,
                          self.output_gate)
        size = self.output_size
        p_i = ig.peephole if ig.peephole is not None else np.zeros(size)
        p_f = fg.peephole if fg.peephole is not None else np.zeros(size)
        p_o = og.peephole if og.peephole is not None else np.zeros(size)

        num_frames = seq.shape[0]
        out = np.empty((num_frames, size))
        h = np.zeros(size)
        c = np.zeros(size)
        for t in range(num_frames):
            x = seq[t]
            i = _sigmoid(x @ ig.weights + h @ ig.recurrent_weights
                         + p_i * c + ig.biases)
            f = _sigmoid(x @ fg.weights + h @ fg.recurrent_weights
                         + p_f * c + fg.biases)
            candidate = np.tanh(x @ cg.weights + h @ cg.recurrent_weights
                                + cg.biases)
            c = f * c + i * candidate
            o = _sigmoid(x @ og.weights + h @ og.recurrent_weights
                         + p_o * c + og.biases)
            h = o * np.tanh(c)
            out[t] = h
        return out


class BidirectionalLayer:
    """Runs one layer forward and another backward over the sequence and
    concatenates the outputs per frame."""

    kind = "bidirectional"

    def __init__(self, forward_layer, backward_layer):
        if forward_layer.input_size != backward_layer.input_size:
            raise DimensionMismatch("both directions must share the input size")
        self.forward_layer = forward_layer
        self.backward_layer = backward_layer

    @property
    def input_size(self):
        return self.forward_layer.input_size

    @property
    def output_size(self):
        return self.forward_layer.output_size + self.backward_layer.output_size

    @property
    def activation(self):
        return getattr(self.forward_layer, "activation", "linear")

    def forward(self, sequence):
        seq = _as_sequence(sequence)
        fwd = self.forward_layer.forward(seq)
        bwd = self.backward_layer.forward(seq[::-1])[::-1]
        return np.concatenate((fwd, bwd), axis=1)


def _as_tensor(data):
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 2:
        x = x[np.newaxis]
    if x.ndim != 3:
        raise DimensionMismatch("expected a (channels, height, width) tensor")
    return x


class Conv2DLayer:
    """Valid 2-D cross-correlation over (channels, height, width) input.

    ``kernels`` is (out_channels, in_channels, kernel_h, kernel_w); the
    bias and activation are applied per output channel.
    """

    kind = "conv2d"

    def __init__(self, kernels, biases, activation="linear"):
        kernels = np.asarray(kernels, dtype=np.float64)
        biases = np.asarray(biases, dtype=np.float64)
        if kernels.ndim != 4:
            raise DimensionMismatch("kernels must be 4-D")
        if biases.shape != (kernels.shape[0],):
            raise DimensionMismatch("biases must match the output channels")
        self.kernels = kernels
        self.biases = biases
        self.activation = _check_activation(activation)

    def forward(self, data):
        x = _as_tensor(data)
        out_ch, in_ch, kernel_h, kernel_w = self.kernels.shape
        if x.shape[0] != in_ch:
            raise DimensionMismatch("expected %d input channels, got %d"
                                    % (in_ch, x.shape[0]))
        if kernel_h > x.shape[1] or kernel_w > x.shape[2]:
            raise KernelTooLarge("kernel %dx%d does not fit input %dx%d"
                                 % (kernel_h, kernel_w, x.shape[1], x.shape[2]))
        windows = np.lib.stride_tricks.sliding_window_view(
            x, (kernel_h, kernel_w), axis=(1, 2))
        out = np.einsum("chwkl,ockl->ohw", windows, self.kernels)
        out += self.biases[:, np.newaxis, np.newaxis]
        return apply_activation(self.activation, out)


class MaxPoolLayer:
    """Non-overlapping window maximum; incomplete edge windows are dropped."""

    kind = "maxpool"

    def __init__(self, pool_size):
        pool_h, pool_w = (int(pool_size[0]), int(pool_size[1]))
        if pool_h < 1 or pool_w < 1:
            raise InvalidParameter("pool_size entries must be >= 1")
        self.pool_size = (pool_h, pool_w)

    def forward(self, data):
        x = _as_tensor(data)
        pool_h, pool_w = self.pool_size
        channels, height, width = x.shape
        out_h, out_w = height // pool_h, width // pool_w
        if out_h < 1 or out_w < 1:
            raise KernelTooLarge("pool %dx%d does not fit input %dx%d"
                                 % (pool_h, pool_w, height, width))
        x = x[:, :out_h * pool_h, :out_w * pool_w]
        return x.reshape(channels, out_h, pool_h, out_w, pool_w).max(axis=(2, 4))


class ActivationLayer:
    """Applies an activation function and nothing else."""

    kind = "activation"

    def __init__(self, activation):
        self.activation = _check_activation(activation)

    def forward(self, data):
        return apply_activation(self.activation, np.asarray(data, np.float64))


_SEQUENCE_KINDS = ("dense", "recurrent", "lstm", "bidirectional", "activation")
_TENSOR_KINDS = ("conv2d", "maxpool")


class NetworkModel:
    """An ordered stack of layers applied to a (frames, features) sequence.

    Dense layers apply per frame; recurrent kinds consume the whole
    sequence. Convolutional kinds operate on tensors and can only be
    mixed with sequence layers where the shapes allow it. softmax may
    only appear as the final activation of the stack.
    """

    def __init__(self, layers, input_size=None, output_size=None,
                 name="", version=""):
        layers = list(layers)
        self.layers = layers
        self.name = str(name)
        self.version = str(version)

        for layer in layers[:-1]:
            if getattr(layer, "activation", None) == "softmax":
                raise IncompatibleLayerOrder(
                    "softmax may only be the final activation")

        size = input_size
        for layer in layers:
            if layer.kind in _TENSOR_KINDS:
                size = None  # vector bookkeeping stops at conv kinds
                continue
            if layer.kind == "activation":
                continue
            if size is not None and layer.input_size != size:
                raise DimensionMismatch(
                    "layer expects %d features, previous stage yields %d"
                    % (layer.input_size, size))
            size = layer.output_size
        if output_size is not None and size is not None and size != output_size:
            raise DimensionMismatch("declared output_size %d, layers yield %d"
                                    % (output_size, size))
        self.input_size = input_size
        self.output_size = output_size if output_size is not None else size

    def predict(self, sequence):
        """Run the stack over a (frames, features) sequence."""
        data = _as_sequence(sequence)
        if self.input_size is not None and data.shape[1] != self.input_size:
            raise DimensionMismatch("model expects %d features, got %d"
                                    % (self.input_size, data.shape[1]))
        for layer in self.layers:
            if layer.kind in _TENSOR_KINDS:
                data = layer.forward(data)
            elif isinstance(data, np.ndarray) and data.ndim == 3:
                raise IncompatibleLayerOrder(
                    "layer %r cannot consume a convolutional tensor"
                    % layer.kind)
            else:
                data = layer.forward(data)
        return data


def nn_predict(model, sequence):
    """Apply a :class:`NetworkModel` to a sequence."""
    return model.predict(sequence)


@register
class NeuralNetworkProcessor(Processor):
    """Runs a network model file over spectrogram frames.

    The output becomes an activation curve at the input's frame rate;
    negative values (possible with linear output layers) are clipped
    to zero.
    """

    kind = "neural_network"

    def __init__(self, model_path):
        from .models import load_model
        self._model_path = str(model_path)
        self._model = load_model(self._model_path)
        if not isinstance(self._model, NetworkModel):
            raise TypeMismatch("%s does not contain a network model"
                               % self._model_path)

    def params(self):
        return {"model_path": self._model_path}

    def process(self, data):
        from ..features.activations import Activation
        from ..spectral import Spectrogram
        if isinstance(data, Spectrogram):
            values, fps = data.values, data.frame_rate
        elif isinstance(data, Activation):
            values, fps = data.values, data.fps
        else:
            raise TypeMismatch(
                "neural_network expects a Spectrogram or Activation")
        out = self._model.predict(values)
        return Activation(np.maximum(out, 0.0), fps)
