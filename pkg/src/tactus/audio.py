"""Audio loading, channel remixing, and temporally aligned framing.

RIFF/WAVE PCM files (8/16/24/32-bit integer, 32/64-bit float) are
decoded natively. Anything else, including sample-rate conversion, is
delegated to a user-configured external decoder command that must emit
a WAV file.

The framing model keeps frames *temporally aligned*: frame ``k`` of any
view over the same signal is centered on the reference sample
``r(k) = floor(k * hop_size + 0.5)``. The rounding is applied per frame,
so fractional hop sizes accumulate no drift, and reference positions
depend only on the hop size, never on the frame size.
"""

import math
import os
import shlex
import struct
import subprocess
import tempfile

import numpy as np

from .errors import (DecodeError, IndexOutOfRange, InvalidParameter,
                     TypeMismatch, UnsupportedFormat, UnsupportedRemix)
from .pipeline import Processor, register

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


def _read_wav(path):
    """Parse a RIFF/WAVE file into (samples, sample_rate, bit_depth)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat("%s: not a RIFF/WAVE file" % path)

    fmt = payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word aligned
    if fmt is None or len(fmt) < 16:
        raise DecodeError("%s: missing or short fmt chunk" % path)
    if payload is None:
        raise DecodeError("%s: missing data chunk" % path)

    format_tag, channels, sample_rate, _, _, bits = struct.unpack(
        "<HHIIHH", fmt[:16])
    if format_tag == _WAVE_FORMAT_EXTENSIBLE and len(fmt) >= 26:
        format_tag = struct.unpack("<H", fmt[24:26])[0]
    if channels < 1 or sample_rate < 1:
        raise DecodeError("%s: invalid fmt chunk" % path)

    if format_tag == _WAVE_FORMAT_PCM:
        if bits == 8:
            # 8-bit WAV is unsigned with a 128 offset
            samples = np.frombuffer(payload, dtype=np.uint8).astype(np.int16) - 128
        elif bits == 16:
            samples = np.frombuffer(payload, dtype="<i2")
        elif bits == 24:
            raw = np.frombuffer(payload, dtype=np.uint8)
            raw = raw[:len(raw) - len(raw) % 3].reshape(-1, 3).astype(np.int32)
            samples = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
            samples -= (samples & 0x800000) << 1  # sign-extend bit 23
        elif bits == 32:
            samples = np.frombuffer(payload, dtype="<i4")
        else:
            raise UnsupportedFormat("%s: unsupported PCM depth %d" % (path, bits))
    elif format_tag == _WAVE_FORMAT_IEEE_FLOAT:
        if bits == 32:
            samples = np.frombuffer(payload, dtype="<f4")
        elif bits == 64:
            samples = np.frombuffer(payload, dtype="<f8")
        else:
            raise UnsupportedFormat("%s: unsupported float depth %d" % (path, bits))
    else:
        raise UnsupportedFormat("%s: unsupported format tag 0x%04x"
                                % (path, format_tag))

    frames = len(samples) // channels
    samples = samples[:frames * channels]
    if channels > 1:
        samples = samples.reshape(frames, channels)
    return samples, int(sample_rate), int(bits)


class Signal:
    """Audio samples plus sampling metadata.

    Parameters
    ----------
    samples : ndarray
        1-D mono samples or a 2-D (samples, channels) buffer. Integer
        PCM and floating point data are both kept verbatim; nothing is
        rescaled at load time.
    sample_rate : int
        Sampling rate in Hz.
    source_bit_depth : int, optional
        Bits per sample of the decoded source; inferred from the dtype
        when omitted. Integer samples are later scaled to [-1, 1) by
        ``2 ** (source_bit_depth - 1)`` when a spectrum is computed.
    """

    def __init__(self, samples, sample_rate, source_bit_depth=None):
        samples = np.asarray(samples)
        if samples.ndim not in (1, 2):
            raise InvalidParameter("samples must be 1-D or 2-D")
        if not isinstance(sample_rate, (int, np.integer)) or sample_rate <= 0:
            raise InvalidParameter("sample_rate must be a positive integer")
        if source_bit_depth is None:
            source_bit_depth = samples.dtype.itemsize * 8
        samples = samples.copy()
        samples.flags.writeable = False
        self.samples = samples
        self.sample_rate = int(sample_rate)
        self.source_bit_depth = int(source_bit_depth)

    @property
    def num_channels(self):
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]

    @property
    def num_samples(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        """Length in seconds."""
        return self.num_samples / self.sample_rate

    def __len__(self):
        return self.num_samples

    def __repr__(self):
        return ("Signal(%d samples, %d Hz, %d channel(s), %d-bit source)"
                % (self.num_samples, self.sample_rate, self.num_channels,
                   self.source_bit_depth))


def remix(signal, target_channels):
    """Change the channel layout of a signal.

    Supported layouts are the identity and the downmix to mono, which
    averages across channels; integer means are truncated toward zero
    so the result stays bit-exactly reproducible.
    """
    if not isinstance(target_channels, (int, np.integer)) or target_channels < 1:
        raise UnsupportedRemix("target_channels must be a positive integer")
    if target_channels == signal.num_channels:
        return signal
    if target_channels != 1:
        raise UnsupportedRemix("cannot remix %d channels to %d"
                               % (signal.num_channels, target_channels))
    x = signal.samples
    if np.issubdtype(x.dtype, np.integer):
        total = x.sum(axis=1, dtype=np.int64)
        n = x.shape[1]
        mono = np.where(total >= 0, total // n, -((-total) // n)).astype(x.dtype)
    else:
        mono = x.mean(axis=1, dtype=np.float64).astype(x.dtype)
    return Signal(mono, signal.sample_rate, signal.source_bit_depth)


def _decode_external(path, decoder_cmd, target_sample_rate, target_channels):
    """Run the configured decoder command; it must write a WAV file.

    ``decoder_cmd`` is a template with the placeholders ``{input}``,
    ``{output}``, ``{sample_rate}`` and ``{channels}``. Placeholders are
    substituted per argument token, so paths with spaces are safe.
    """
    handle, out_path = tempfile.mkstemp(suffix=".wav")
    os.close(handle)
    subs = {
        "input": os.fspath(path),
        "output": out_path,
        "sample_rate": int(target_sample_rate or 0),
        "channels": int(target_channels or 0),
    }
    try:
        argv = [token.format(**subs) for token in shlex.split(decoder_cmd)]
    except (KeyError, IndexError, ValueError) as exc:
        os.unlink(out_path)
        raise InvalidParameter("bad decoder_cmd template: %s" % exc) from exc
    try:
        result = subprocess.run(argv, capture_output=True)
        if result.returncode != 0:
            raise DecodeError("external decoder failed (%d): %s"
                              % (result.returncode,
                                 result.stderr.decode("utf-8", "replace").strip()))
        return _read_wav(out_path)
    finally:
        if os.path.exists(out_path):
            os.unlink(out_path)


def load_signal(path, target_sample_rate=None, target_channels=None,
                decoder_cmd=None):
    """Load an audio file into a :class:`Signal`.

    Parameters
    ----------
    path : str
        Audio file. WAV PCM and IEEE-float files are decoded natively.
    target_sample_rate : int, optional
        Desired sampling rate. Conversion requires ``decoder_cmd``.
    target_channels : int, optional
        Desired channel count (see :func:`remix`).
    decoder_cmd : str, optional
        External decoder command template used for non-WAV input and
        sample-rate conversion; must emit a WAV file. Placeholders:
        ``{input}``, ``{output}``, ``{sample_rate}``, ``{channels}``.

    Returns
    -------
    Signal
        Sample values are preserved bit-exactly when no conversion was
        requested.
    """
    if not os.path.exists(path):
        raise FileNotFoundError("no such audio file: %s" % path)

    use_external = False
    samples = sample_rate = bits = None
    try:
        samples, sample_rate, bits = _read_wav(path)
    except UnsupportedFormat:
        if decoder_cmd is None:
            raise
        use_external = True
    if not use_external and target_sample_rate is not None \
            and target_sample_rate != sample_rate:
        if decoder_cmd is None:
            raise UnsupportedFormat(
                "sample-rate conversion %d -> %d needs an external decoder "
                "(decoder_cmd)" % (sample_rate, target_sample_rate))
        use_external = True
    if use_external:
        samples, sample_rate, bits = _decode_external(
            path, decoder_cmd, target_sample_rate, target_channels)
        if target_sample_rate is not None and sample_rate != target_sample_rate:
            raise DecodeError("decoder produced %d Hz, requested %d Hz"
                              % (sample_rate, target_sample_rate))

    signal = Signal(samples, sample_rate, bits)
    if target_channels is not None and target_channels != signal.num_channels:
        signal = remix(signal, target_channels)
    return signal


class FramedSignal:
    """Lazy view of a signal as overlapping, zero-padded frames.

    Every frame has exactly ``frame_size`` samples and is *centered* on
    its reference sample ``r(k) = floor(k * hop_size + 0.5)``; positions
    outside the signal read as zeros. The number of frames is
    ``ceil(len(signal) / hop_size)``, so every sample falls within at
    least one frame's reference interval.

    Parameters
    ----------
    signal : Signal
    frame_size : int
    hop_size : float, optional
        Frame spacing in samples; fractional values are allowed.
    fps : float, optional
        Frames per second; mutually exclusive with ``hop_size`` and
        converted via ``hop_size = sample_rate / fps``.
    """

    def __init__(self, signal, frame_size, hop_size=None, fps=None):
        if not isinstance(signal, Signal):
            raise TypeMismatch("expected a Signal, got %s" % type(signal).__name__)
        if not isinstance(frame_size, (int, np.integer)) or frame_size < 1:
            raise InvalidParameter("frame_size must be a positive integer")
        if (hop_size is None) == (fps is None):
            raise InvalidParameter("give exactly one of hop_size and fps")
        if fps is not None:
            if fps <= 0:
                raise InvalidParameter("fps must be positive")
            hop_size = signal.sample_rate / fps
        if hop_size <= 0:
            raise InvalidParameter("hop_size must be positive")
        self.signal = signal
        self.frame_size = int(frame_size)
        self.hop_size = float(hop_size)
        self.num_frames = int(math.ceil(len(signal) / self.hop_size))

    @property
    def fps(self):
        """Frames per second; ``fps * hop_size == sample_rate`` exactly."""
        return self.signal.sample_rate / self.hop_size

    def reference(self, index):
        """Reference (center) sample position of frame ``index``."""
        return int(math.floor(index * self.hop_size + 0.5))

    def __len__(self):
        return self.num_frames

    def frame(self, index):
        """Frame ``index`` as an array of exactly ``frame_size`` samples."""
        if not 0 <= index < self.num_frames:
            raise IndexOutOfRange("frame index %d outside [0, %d)"
                                  % (index, self.num_frames))
        x = self.signal.samples
        start = self.reference(index) - self.frame_size // 2
        stop = start + self.frame_size
        lo, hi = max(start, 0), min(stop, len(x))
        out = np.zeros((self.frame_size,) + x.shape[1:], dtype=x.dtype)
        if hi > lo:
            out[lo - start:hi - start] = x[lo:hi]
        return out

    def __getitem__(self, index):
        return self.frame(index)

    def __iter__(self):
        for index in range(self.num_frames):
            yield self.frame(index)

    def as_matrix(self):
        """All frames stacked into a (num_frames, frame_size) array.

        Only defined for mono signals.
        """
        if self.signal.samples.ndim != 1:
            raise TypeMismatch("as_matrix needs a mono signal; remix first")
        x = self.signal.samples
        n = len(x)
        starts = np.array([self.reference(k) - self.frame_size // 2
                           for k in range(self.num_frames)], dtype=np.int64)
        if not self.num_frames:
            return np.zeros((0, self.frame_size), dtype=x.dtype)
        idx = starts[:, None] + np.arange(self.frame_size)
        valid = (idx >= 0) & (idx < n)
        gathered = x[np.clip(idx, 0, max(n - 1, 0))]
        return np.where(valid, gathered, np.zeros((), dtype=x.dtype))


def frame_signal(signal, frame_size, hop_size):
    """Chop a signal into overlapping, temporally aligned frames."""
    return FramedSignal(signal, frame_size, hop_size=hop_size)


@register
class SignalLoaderProcessor(Processor):
    """Reads an audio file path into a :class:`Signal`."""

    kind = "signal_loader"

    def __init__(self, sample_rate=None, num_channels=1, decoder_cmd=None):
        if sample_rate is not None and sample_rate <= 0:
            raise InvalidParameter("sample_rate must be positive")
        if num_channels is not None and num_channels < 1:
            raise InvalidParameter("num_channels must be >= 1")
        self._sample_rate = sample_rate
        self._num_channels = num_channels
        self._decoder_cmd = decoder_cmd

    def params(self):
        return {"sample_rate": self._sample_rate,
                "num_channels": self._num_channels,
                "decoder_cmd": self._decoder_cmd}

    def process(self, data):
        if isinstance(data, Signal):
            signal = data
            if self._num_channels is not None \
                    and self._num_channels != signal.num_channels:
                signal = remix(signal, self._num_channels)
            return signal
        if not isinstance(data, (str, os.PathLike)):
            raise TypeMismatch("signal_loader expects a file path or Signal")
        return load_signal(data, target_sample_rate=self._sample_rate,
                           target_channels=self._num_channels,
                           decoder_cmd=self._decoder_cmd)


@register
class FramerProcessor(Processor):
    """Turns a :class:`Signal` into a :class:`FramedSignal`."""

    kind = "framer"

    def __init__(self, frame_size=2048, fps=100.0, hop_size=None):
        if frame_size < 1:
            raise InvalidParameter("frame_size must be >= 1")
        if hop_size is None and (fps is None or fps <= 0):
            raise InvalidParameter("fps must be positive")
        if hop_size is not None and hop_size <= 0:
            raise InvalidParameter("hop_size must be positive")
        self._frame_size = int(frame_size)
        self._fps = None if fps is None else float(fps)
        self._hop_size = None if hop_size is None else float(hop_size)

    def params(self):
        return {"frame_size": self._frame_size, "fps": self._fps,
                "hop_size": self._hop_size}

    def process(self, data):
        if not isinstance(data, Signal):
            raise TypeMismatch("framer expects a Signal")
        if self._hop_size is not None:
            return FramedSignal(data, self._frame_size, hop_size=self._hop_size)
        return FramedSignal(data, self._frame_size, fps=self._fps)
