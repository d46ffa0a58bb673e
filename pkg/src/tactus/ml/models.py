"""Portable model files: a JSON manifest with base64 tensor payloads.

Document layout (format_version 1)::

    {
      "format_version": 1,
      "model_kind": "network" | "hmm" | "gmm",
      "metadata": {"name": ..., "version": ...},
      "checksum": "<sha256 hex>",            # optional
      "layers": [...]      # network
      "states": {...}      # hmm
      "components": [...]  # gmm
    }

Every tensor is stored as ``{"shape": [...], "dtype": "f32le",
"data": "<base64>"}`` with a row-major, little-endian 32-bit float
payload; the byte length must equal the product of the shape times
four. Probabilities that carry sum-to-one invariants (transition,
initial and mixture weights) are stored as plain JSON numbers so they
round-trip at full precision. The optional checksum is the SHA-256 of
all tensor payloads concatenated in document order.

Models are validated at load: shapes must chain, distributions must
sum to one, and unknown layer kinds or format versions are rejected.
"""

import base64
import binascii
import hashlib
import json
import os

import numpy as np

from ..errors import (ChecksumMismatch, DimensionMismatch, InvalidParameter,
                      ParseError, ShapeMismatch, TypeMismatch,
                      UnknownActivation, UnknownFormatVersion,
                      UnknownLayerKind, UnserializableParameter)
from .gmm import GmmModel
from .hmm import (ActivationColumnObservationModel, DiscreteObservationModel,
                  GmmObservationModel, HmmModel)
from .nn import (ActivationLayer, BidirectionalLayer, Conv2DLayer, DenseLayer,
                 LSTMGate, LSTMLayer, MaxPoolLayer, NetworkModel,
                 RecurrentLayer)

FORMAT_VERSION = 1
_TENSOR_DTYPE = "f32le"


class _TensorCodec:
    """Encodes/decodes tensors while recording payload bytes in document
    order for the checksum."""

    def __init__(self):
        self.payloads = []

    def digest(self):
        return hashlib.sha256(b"".join(self.payloads)).hexdigest()

    def encode(self, array):
        array = np.asarray(array, dtype=np.float64)
        payload = array.astype("<f4").tobytes()
        self.payloads.append(payload)
        return {"shape": list(array.shape), "dtype": _TENSOR_DTYPE,
                "data": base64.b64encode(payload).decode("ascii")}

    def decode(self, obj, context, rank=None):
        if not isinstance(obj, dict) or not {"shape", "dtype", "data"} <= set(obj):
            raise ParseError("%s: tensor needs shape/dtype/data" % context)
        if obj["dtype"] != _TENSOR_DTYPE:
            raise ParseError("%s: unsupported tensor dtype %r"
                             % (context, obj["dtype"]))
        shape = obj["shape"]
        if (not isinstance(shape, list) or
                not all(isinstance(n, int) and n >= 0 for n in shape)):
            raise ParseError("%s: bad tensor shape" % context)
        if rank is not None and len(shape) != rank:
            raise ShapeMismatch("%s: expected a rank-%d tensor, got rank %d"
                                % (context, rank, len(shape)))
        try:
            payload = base64.b64decode(obj["data"], validate=True)
        except (binascii.Error, TypeError) as exc:
            raise ParseError("%s: bad base64 payload" % context) from exc
        expected = int(np.prod(shape, dtype=np.int64)) * 4
        if len(payload) != expected:
            raise ShapeMismatch(
                "%s: payload holds %d bytes but shape %r needs %d"
                % (context, len(payload), shape, expected))
        self.payloads.append(payload)
        return np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(shape)


def _require(doc, key, context):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError("%s: missing key %r" % (context, key))
    return doc[key]


def _float_list(values, context):
    if not isinstance(values, list):
        raise ParseError("%s: expected a list of numbers" % context)
    try:
        return np.array([float(v) for v in values], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError("%s: expected a list of numbers" % context) from exc


# ---------------------------------------------------------------------------
# network layers

def _gate_from_doc(doc, codec, context):
    weights = codec.decode(_require(doc, "weights", context), context, rank=2)
    recurrent = codec.decode(_require(doc, "recurrent_weights", context),
                             context, rank=2)
    biases = codec.decode(_require(doc, "biases", context), context, rank=1)
    peephole = None
    if doc.get("peephole") is not None:
        peephole = codec.decode(doc["peephole"], context, rank=1)
    return LSTMGate(weights, recurrent, biases, peephole=peephole)


def _layer_from_doc(doc, codec, context):
    kind = _require(doc, "kind", context)
    try:
        if kind == "dense":
            return DenseLayer(
                codec.decode(_require(doc, "weights", context), context, rank=2),
                codec.decode(_require(doc, "biases", context), context, rank=1),
                activation=doc.get("activation", "linear"))
        if kind == "recurrent":
            return RecurrentLayer(
                codec.decode(_require(doc, "weights", context), context, rank=2),
                codec.decode(_require(doc, "recurrent_weights", context),
                             context, rank=2),
                codec.decode(_require(doc, "biases", context), context, rank=1),
                activation=doc.get("activation", "tanh"))
        if kind == "lstm":
            gates = _require(doc, "gates", context)
            return LSTMLayer(
                _gate_from_doc(_require(gates, "input", context), codec,
                               context + "/input"),
                _gate_from_doc(_require(gates, "forget", context), codec,
                               context + "/forget"),
                _gate_from_doc(_require(gates, "cell", context), codec,
                               context + "/cell"),
                _gate_from_doc(_require(gates, "output", context), codec,
                               context + "/output"))
        if kind == "bidirectional":
            return BidirectionalLayer(
                _layer_from_doc(_require(doc, "forward", context), codec,
                                context + "/forward"),
                _layer_from_doc(_require(doc, "backward", context), codec,
                                context + "/backward"))
        if kind == "conv2d":
            return Conv2DLayer(
                codec.decode(_require(doc, "kernels", context), context, rank=4),
                codec.decode(_require(doc, "biases", context), context, rank=1),
                activation=doc.get("activation", "linear"))
        if kind == "maxpool":
            pool = _require(doc, "pool_size", context)
            if not isinstance(pool, list) or len(pool) != 2:
                raise ParseError("%s: pool_size must be [height, width]" % context)
            return MaxPoolLayer(pool)
        if kind == "activation":
            return ActivationLayer(_require(doc, "activation", context))
    except (DimensionMismatch, InvalidParameter) as exc:
        raise ShapeMismatch("%s: %s" % (context, exc)) from exc
    except UnknownActivation as exc:
        raise ParseError("%s: %s" % (context, exc)) from exc
    raise UnknownLayerKind("%s: unknown layer kind %r" % (context, kind))


def _gate_to_doc(gate, codec):
    doc = {"weights": codec.encode(gate.weights),
           "recurrent_weights": codec.encode(gate.recurrent_weights),
           "biases": codec.encode(gate.biases)}
    if gate.peephole is not None:
        doc["peephole"] = codec.encode(gate.peephole)
    return doc


def _layer_to_doc(layer, codec):
    if isinstance(layer, DenseLayer):
        return {"kind": "dense", "activation": layer.activation,
                "weights": codec.encode(layer.weights),
                "biases": codec.encode(layer.biases)}
    if isinstance(layer, RecurrentLayer):
        return {"kind": "recurrent", "activation": layer.activation,
                "weights": codec.encode(layer.weights),
                "recurrent_weights": codec.encode(layer.recurrent_weights),
                "biases": codec.encode(layer.biases)}
    if isinstance(layer, LSTMLayer):
        return {"kind": "lstm", "gates": {
            "input": _gate_to_doc(layer.input_gate, codec),
            "forget": _gate_to_doc(layer.forget_gate, codec),
            "cell": _gate_to_doc(layer.cell_gate, codec),
            "output": _gate_to_doc(layer.output_gate, codec)}}
    if isinstance(layer, BidirectionalLayer):
        return {"kind": "bidirectional",
                "forward": _layer_to_doc(layer.forward_layer, codec),
                "backward": _layer_to_doc(layer.backward_layer, codec)}
    if isinstance(layer, Conv2DLayer):
        return {"kind": "conv2d", "activation": layer.activation,
                "kernels": codec.encode(layer.kernels),
                "biases": codec.encode(layer.biases)}
    if isinstance(layer, MaxPoolLayer):
        return {"kind": "maxpool", "pool_size": list(layer.pool_size)}
    if isinstance(layer, ActivationLayer):
        return {"kind": "activation", "activation": layer.activation}
    raise UnserializableParameter("cannot serialize layer type %s"
                                  % type(layer).__name__)


def _network_from_doc(doc, codec, metadata):
    layers_doc = _require(doc, "layers", "network")
    if not isinstance(layers_doc, list):
        raise ParseError("network: 'layers' must be a list")
    layers = [_layer_from_doc(layer, codec, "layer %d" % i)
              for i, layer in enumerate(layers_doc)]
    input_size = doc.get("input_size")
    output_size = doc.get("output_size")
    try:
        return NetworkModel(layers, input_size=input_size,
                            output_size=output_size,
                            name=metadata.get("name", ""),
                            version=metadata.get("version", ""))
    except DimensionMismatch as exc:
        raise ShapeMismatch("network: %s" % exc) from exc


def _network_to_doc(model, codec):
    return {"input_size": model.input_size, "output_size": model.output_size,
            "layers": [_layer_to_doc(layer, codec) for layer in model.layers]}


# ---------------------------------------------------------------------------
# hmm / gmm

def _gmm_components_from_doc(components, codec, context):
    if not isinstance(components, list) or not components:
        raise ParseError("%s: 'components' must be a non-empty list" % context)
    weights, means, covariances = [], [], []
    for i, comp in enumerate(components):
        where = "%s component %d" % (context, i)
        weights.append(float(_require(comp, "weight", where)))
        means.append(codec.decode(_require(comp, "mean", where), where, rank=1))
        covariances.append(codec.decode(_require(comp, "covariance", where),
                                        where, rank=1))
    try:
        return GmmModel(np.array(weights), np.array(means),
                        np.array(covariances))
    except (DimensionMismatch, InvalidParameter) as exc:
        raise ParseError("%s: %s" % (context, exc)) from exc


def _gmm_components_to_doc(model, codec):
    return [{"weight": float(w), "mean": codec.encode(m),
             "covariance": codec.encode(c)}
            for w, m, c in zip(model.weights, model.means, model.covariances)]


def _observations_from_doc(doc, codec):
    kind = _require(doc, "kind", "observations")
    if kind == "discrete":
        table = codec.decode(_require(doc, "table", "observations"),
                             "observations", rank=2)
        return DiscreteObservationModel(table)
    if kind == "gmm":
        states = _require(doc, "states", "observations")
        if not isinstance(states, list):
            raise ParseError("observations: 'states' must be a list")
        return GmmObservationModel(
            [_gmm_components_from_doc(components, codec, "state %d" % i)
             for i, components in enumerate(states)])
    if kind == "activation_column":
        columns = _require(doc, "columns", "observations")
        if not isinstance(columns, list) \
                or not all(isinstance(c, int) for c in columns):
            raise ParseError("observations: 'columns' must be integers")
        return ActivationColumnObservationModel(columns)
    raise ParseError("observations: unknown kind %r" % (kind,))


def _observations_to_doc(model, codec):
    if isinstance(model, DiscreteObservationModel):
        return {"kind": "discrete", "table": codec.encode(model.table)}
    if isinstance(model, GmmObservationModel):
        return {"kind": "gmm",
                "states": [_gmm_components_to_doc(gmm, codec)
                           for gmm in model.state_gmms]}
    if isinstance(model, ActivationColumnObservationModel):
        return {"kind": "activation_column",
                "columns": model.columns.tolist()}
    raise UnserializableParameter("cannot serialize observation model type %s"
                                  % type(model).__name__)


def _hmm_from_doc(doc, codec):
    states = _require(doc, "states", "hmm")
    num_states = _require(states, "num_states", "hmm")
    initial = _float_list(_require(states, "initial", "hmm"), "hmm initial")
    transitions_doc = _require(states, "transitions", "hmm")
    if not isinstance(transitions_doc, list):
        raise ParseError("hmm: 'transitions' must be a list")
    transitions = []
    for i, item in enumerate(transitions_doc):
        if not isinstance(item, list) or len(item) != 3:
            raise ParseError("hmm: transition %d must be [from, to, p]" % i)
        transitions.append((int(item[0]), int(item[1]), float(item[2])))
    observations = _observations_from_doc(
        _require(states, "observations", "hmm"), codec)
    try:
        return HmmModel(int(num_states), transitions, initial, observations)
    except (DimensionMismatch, InvalidParameter) as exc:
        raise ParseError("hmm: %s" % exc) from exc


def _hmm_to_doc(model, codec):
    return {"states": {
        "num_states": model.num_states,
        "initial": model.initial_distribution.tolist(),
        "transitions": [[int(f), int(t), float(p)]
                        for f, t, p in model.transitions],
        "observations": _observations_to_doc(model.observation_model, codec)}}


# ---------------------------------------------------------------------------
# top level

def _read_text(source):
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    with open(source, "rb") as fh:
        return fh.read().decode("utf-8")


def load_model(source):
    """Load a network, HMM, or GMM from a model document.

    Raises
    ------
    ParseError, UnknownFormatVersion, UnknownLayerKind, ShapeMismatch,
    ChecksumMismatch
    """
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("invalid model document: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ParseError("model document must be a mapping")
    version = _require(doc, "format_version", "model")
    if version != FORMAT_VERSION:
        raise UnknownFormatVersion("unsupported model format version %r"
                                   % (version,))
    kind = _require(doc, "model_kind", "model")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError("model: 'metadata' must be a mapping")

    codec = _TensorCodec()
    if kind == "network":
        model = _network_from_doc(doc, codec, metadata)
    elif kind == "hmm":
        model = _hmm_from_doc(doc, codec)
    elif kind == "gmm":
        model = _gmm_components_from_doc(
            _require(doc, "components", "gmm"), codec, "gmm")
    else:
        raise ParseError("unknown model_kind %r (expected network|hmm|gmm)"
                         % (kind,))

    declared = doc.get("checksum")
    if declared is not None and declared != codec.digest():
        raise ChecksumMismatch("model checksum %s does not match payloads %s"
                               % (declared, codec.digest()))
    return model


def save_model(model, destination, name="", version=""):
    """Write a model document; returns the number of bytes written.

    Weights are stored as 32-bit floats, so saving a model built from
    64-bit arrays quantizes them once; loading and re-saving is then
    bit-exact.
    """
    codec = _TensorCodec()
    if isinstance(model, NetworkModel):
        doc = _network_to_doc(model, codec)
        kind = "network"
        name = name or model.name
        version = version or model.version
    elif isinstance(model, HmmModel):
        doc = _hmm_to_doc(model, codec)
        kind = "hmm"
    elif isinstance(model, GmmModel):
        doc = {"components": _gmm_components_to_doc(model, codec)}
        kind = "gmm"
    else:
        raise TypeMismatch("cannot serialize model type %s"
                           % type(model).__name__)
    doc["format_version"] = FORMAT_VERSION
    doc["model_kind"] = kind
    doc["metadata"] = {"name": name, "version": version}
    doc["checksum"] = codec.digest()

    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    data = text.encode("utf-8")
    if hasattr(destination, "write"):
        try:
            destination.write(data)
        except TypeError:
            destination.write(text)
        return len(data)
    with open(os.fspath(destination), "wb") as fh:
        fh.write(data)
    return len(data)
