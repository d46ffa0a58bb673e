"""Processor abstraction, composition, and pipeline (de)serialization.

A processor is an immutable callable with a single ``process(data)``
method; its configuration is fixed at construction and ``process`` is
pure, so processors can be shared freely across threads. Processors
compose into chains with :class:`SequentialProcessor` and
:class:`ParallelProcessor`, and any chain can be written to a
versioned, human-readable document and rebuilt later, which makes a
whole experiment reproducible from a single file.

Pipeline document (format_version 1)::

    {
      "format_version": 1,
      "root": {
        "kind": "<registered name>",
        "params": {...},
        "children": [...]        # composite kinds only
      }
    }

Canonical form: keys sorted lexicographically, two-space indent,
children kept in construction order, trailing newline.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import (EmptyChain, InvalidParameter, ParseError, TypeMismatch,
                     UnknownFormatVersion, UnregisteredProcessor,
                     UnserializableParameter)

FORMAT_VERSION = 1

_REGISTRY = {}


def register(cls):
    """Class decorator adding a processor class to the registry."""
    if not getattr(cls, "kind", None):
        raise ValueError("processor class needs a non-empty 'kind'")
    if cls.kind in _REGISTRY:
        raise ValueError("duplicate processor kind %r" % cls.kind)
    _REGISTRY[cls.kind] = cls
    return cls


def registered_kinds():
    """Sorted names of all registered processor kinds."""
    return sorted(_REGISTRY)


def _check_param_value(kind, name, value):
    if value is None or isinstance(value, (bool, int, float, str)):
        return
    if isinstance(value, (list, tuple)):
        for item in value:
            _check_param_value(kind, name, item)
        return
    raise UnserializableParameter(
        "processor %r: parameter %r of type %s cannot be serialized"
        % (kind, name, type(value).__name__))


class Processor:
    """Base class for all processors.

    Subclasses set ``kind``, implement :meth:`process` and report their
    complete effective configuration from :meth:`params` (no hidden
    defaults, so a saved document always replays identically).
    """

    kind = None
    composite = False

    def process(self, data):
        raise NotImplementedError

    def __call__(self, data):
        return self.process(data)

    def params(self):
        """Complete parameter map; every value is JSON-representable."""
        return {}

    def members(self):
        """Child processors; ``None`` for leaf kinds."""
        return None

    def spec(self):
        """Serializable node describing this processor."""
        if self.kind not in _REGISTRY:
            raise UnregisteredProcessor(
                "processor kind %r is not registered" % self.kind)
        params = self.params()
        for name, value in params.items():
            _check_param_value(self.kind, name, value)
        node = {"kind": self.kind, "params": params}
        members = self.members()
        if members is not None:
            node["children"] = [member.spec() for member in members]
        return node

    @classmethod
    def from_spec(cls, params, children=None):
        """Rebuild an instance from its document node."""
        if children:
            raise ParseError("processor %r takes no children" % cls.kind)
        try:
            return cls(**params)
        except TypeError as exc:
            raise InvalidParameter("processor %r: %s" % (cls.kind, exc)) from exc


class _Composite(Processor):

    composite = True

    def __init__(self, processors):
        processors = list(processors)
        if not processors:
            raise EmptyChain("%r needs at least one member processor" % self.kind)
        for member in processors:
            if not isinstance(member, Processor):
                raise TypeMismatch("members must be Processor instances, got %s"
                                   % type(member).__name__)
        self._members = tuple(processors)

    def members(self):
        return list(self._members)

    def __len__(self):
        return len(self._members)

    @classmethod
    def from_spec(cls, params, children=None):
        if not children:
            raise EmptyChain("%r needs at least one child node" % cls.kind)
        try:
            return cls(children, **params)
        except TypeError as exc:
            raise InvalidParameter("processor %r: %s" % (cls.kind, exc)) from exc


@register
class SequentialProcessor(_Composite):
    """Applies members left to right, feeding each output to the next."""

    kind = "sequential"

    def process(self, data):
        for member in self._members:
            data = member.process(data)
        return data


@register
class ParallelProcessor(_Composite):
    """Applies every member to the same input.

    The result is the list of member outputs in construction order;
    ``workers`` only controls execution concurrency, never the result.
    """

    kind = "parallel"

    def __init__(self, processors, workers=1):
        super().__init__(processors)
        if not isinstance(workers, int) or workers < 1:
            raise InvalidParameter("workers must be a positive integer")
        self._workers = workers

    def params(self):
        return {"workers": self._workers}

    def process(self, data):
        if self._workers == 1 or len(self._members) == 1:
            return [member.process(data) for member in self._members]
        with ThreadPoolExecutor(max_workers=min(self._workers,
                                                len(self._members))) as pool:
            # Executor.map preserves submission order
            return list(pool.map(lambda member: member.process(data),
                                 self._members))


def compose_sequential(processors):
    """Chain processors; output of each feeds the next."""
    return SequentialProcessor(processors)


def compose_parallel(processors, workers=1):
    """Fan the same input out to every processor; outputs keep order."""
    return ParallelProcessor(processors, workers=workers)


@register
class IdentityProcessor(Processor):
    """Returns its input unchanged."""

    kind = "identity"

    def process(self, data):
        return data


@register
class ScaleProcessor(Processor):
    """Multiplies numeric data by a constant factor."""

    kind = "scale"

    def __init__(self, factor=1.0):
        self._factor = float(factor)

    def params(self):
        return {"factor": self._factor}

    def process(self, data):
        return np.multiply(data, self._factor)


@register
class OffsetProcessor(Processor):
    """Adds a constant to numeric data."""

    kind = "offset"

    def __init__(self, amount=0.0):
        self._amount = float(amount)

    def params(self):
        return {"amount": self._amount}

    def process(self, data):
        return np.add(data, self._amount)


@register
class StackProcessor(Processor):
    """Stacks a list of arrays (e.g. a parallel result) along an axis."""

    kind = "stack"

    def __init__(self, axis=-1):
        self._axis = int(axis)

    def params(self):
        return {"axis": self._axis}

    def process(self, data):
        if not isinstance(data, (list, tuple)) or not data:
            raise TypeMismatch("stack expects a non-empty list of arrays")
        parts = [np.atleast_1d(np.asarray(part)) for part in data]
        return np.concatenate(parts, axis=self._axis)


@register
class WriteTextProcessor(Processor):
    """Writes its input to a text file and passes the data through.

    Output-producing steps are ordinary processors parameterized by a
    sink path, so they serialize like everything else.
    """

    kind = "write_text"

    def __init__(self, path, fmt="%.6f"):
        self._path = str(path)
        self._fmt = str(fmt)

    def params(self):
        return {"path": self._path, "fmt": self._fmt}

    def process(self, data):
        arr = np.atleast_1d(np.asarray(data, dtype=float))
        np.savetxt(self._path, arr, fmt=self._fmt)
        return data


class Pipeline:
    """A runnable, serializable processor tree."""

    def __init__(self, root, format_version=FORMAT_VERSION):
        if not isinstance(root, Processor):
            raise TypeMismatch("pipeline root must be a Processor")
        if format_version != FORMAT_VERSION:
            raise UnknownFormatVersion(
                "unsupported pipeline format version %r" % (format_version,))
        self.root = root
        self.format_version = FORMAT_VERSION

    def process(self, data):
        return self.root.process(data)

    __call__ = process

    def spec(self):
        return {"format_version": self.format_version, "root": self.root.spec()}

    def save(self, destination):
        return save_pipeline(self, destination)

    @classmethod
    def load(cls, source):
        return load_pipeline(source)


def canonical_document(doc):
    """Canonical text of a document: sorted keys, stable layout."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_bytes(data, destination):
    if hasattr(destination, "write"):
        written = destination.write(data)
        # text sinks take str and report characters, which equals bytes
        # here because the document is ASCII
        if isinstance(written, int):
            return written
        return len(data)
    with open(destination, "wb") as fh:
        fh.write(data if isinstance(data, bytes) else data.encode("utf-8"))
    return len(data)


def _read_text(source):
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    with open(source, "rb") as fh:
        return fh.read().decode("utf-8")


def save_pipeline(pipeline, destination):
    """Write the pipeline document; returns the number of bytes written."""
    text = canonical_document(pipeline.spec())
    data = text.encode("utf-8")
    if hasattr(destination, "write"):
        try:
            destination.write(data)
        except TypeError:
            destination.write(text)
        return len(data)
    return _write_bytes(data, os.fspath(destination))


def build_processor(node):
    """Instantiate a processor from a document node."""
    if not isinstance(node, dict):
        raise ParseError("processor node must be a mapping")
    kind = node.get("kind")
    if not isinstance(kind, str):
        raise ParseError("processor node needs a string 'kind'")
    if kind not in _REGISTRY:
        raise UnregisteredProcessor("unknown processor kind %r" % kind)
    cls = _REGISTRY[kind]
    params = node.get("params", {})
    if not isinstance(params, dict):
        raise ParseError("processor %r: 'params' must be a mapping" % kind)
    children = node.get("children", [])
    if not isinstance(children, list):
        raise ParseError("processor %r: 'children' must be a list" % kind)
    if children and not cls.composite:
        raise ParseError("leaf processor %r cannot have children" % kind)
    built = [build_processor(child) for child in children] if cls.composite else None
    return cls.from_spec(params, built)


def load_pipeline(source):
    """Read a pipeline document and rebuild the processor tree."""
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("invalid pipeline document: %s" % exc) from exc
    return pipeline_from_document(doc)


def pipeline_from_document(doc):
    """Build a :class:`Pipeline` from an already-parsed document."""
    if not isinstance(doc, dict):
        raise ParseError("pipeline document must be a mapping")
    if "format_version" not in doc:
        raise ParseError("pipeline document lacks 'format_version'")
    version = doc["format_version"]
    if version != FORMAT_VERSION:
        raise UnknownFormatVersion(
            "unsupported pipeline format version %r" % (version,))
    if "root" not in doc:
        raise ParseError("pipeline document lacks 'root'")
    return Pipeline(build_processor(doc["root"]))
