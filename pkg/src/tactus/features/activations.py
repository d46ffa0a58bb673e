"""Activation curves: per-frame detector outputs with their frame rate.

Binary container layout (little-endian): fps as a 64-bit float, frame
count and column count as 32-bit unsigned integers, then the values as
row-major 32-bit floats.
"""

import os
import struct

import numpy as np

from ..errors import InvalidParameter, ParseError, TypeMismatch
from ..pipeline import Processor, register

_HEADER = struct.Struct("<dII")


class Activation:
    """Nonnegative per-frame values (one or more columns) at a frame rate."""

    def __init__(self, values, fps):
        values = np.asarray(values, dtype=np.float64).copy()
        if values.ndim not in (1, 2):
            raise InvalidParameter("activation values must be 1-D or 2-D")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("activation values must be finite")
        if values.size and values.min() < 0:
            raise InvalidParameter("activation values must be nonnegative")
        if not fps > 0:
            raise InvalidParameter("fps must be positive")
        values.flags.writeable = False
        self.values = values
        self.fps = float(fps)

    @property
    def num_frames(self):
        return self.values.shape[0]

    @property
    def num_columns(self):
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def times(self):
        """Frame times in seconds."""
        return np.arange(self.num_frames) / self.fps

    def column(self):
        """The values as a single column; errors out for multi-column data."""
        if self.values.ndim == 1:
            return self.values
        if self.values.shape[1] == 1:
            return self.values[:, 0]
        raise TypeMismatch("expected a single-column activation, got %d columns"
                           % self.values.shape[1])

    def __len__(self):
        return self.num_frames

    def save(self, destination):
        """Write the binary container; returns the byte count written."""
        matrix = np.atleast_2d(self.values.T).T if self.values.ndim == 1 \
            else self.values
        matrix = self.values.reshape(self.num_frames, self.num_columns)
        data = _HEADER.pack(self.fps, self.num_frames, self.num_columns)
        data += matrix.astype("<f4").tobytes()
        if hasattr(destination, "write"):
            destination.write(data)
        else:
            with open(os.fspath(destination), "wb") as fh:
                fh.write(data)
        return len(data)

    @classmethod
    def load(cls, source):
        """Read an activation from the binary container."""
        if hasattr(source, "read"):
            data = source.read()
        else:
            with open(os.fspath(source), "rb") as fh:
                data = fh.read()
        if len(data) < _HEADER.size:
            raise ParseError("activation file too short for its header")
        fps, num_frames, num_columns = _HEADER.unpack_from(data)
        expected = num_frames * num_columns * 4
        payload = data[_HEADER.size:]
        if len(payload) != expected:
            raise ParseError("activation payload holds %d bytes, header "
                             "declares %d" % (len(payload), expected))
        values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        values = values.reshape(num_frames, num_columns)
        if num_columns == 1:
            values = values[:, 0]
        return cls(values, fps)

    def export_text(self, destination, delimiter=" "):
        """Write the values as text, one frame per line."""
        matrix = self.values.reshape(self.num_frames, self.num_columns)
        np.savetxt(destination, matrix, fmt="%.12g", delimiter=delimiter)


@register
class NormalizeProcessor(Processor):
    """Scales an activation so its maximum is one (zeros stay zeros)."""

    kind = "normalize"

    def process(self, data):
        if not isinstance(data, Activation):
            raise TypeMismatch("normalize expects an Activation")
        peak = data.values.max() if data.num_frames else 0.0
        if peak <= 0:
            return data
        return Activation(data.values / peak, data.fps)
