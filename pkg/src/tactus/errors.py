"""Exception types shared across the library.

Most errors also subclass the closest builtin exception so callers can
catch either the library-specific type or the generic Python one.
"""


class TactusError(Exception):
    """Base class for all errors raised by this library."""


class InvalidParameter(TactusError, ValueError):
    """A parameter value is outside its documented range."""


class TypeMismatch(TactusError, TypeError):
    """A processor or operation received data of an unsupported kind."""


class DimensionMismatch(TactusError, ValueError):
    """Array shapes do not line up."""


class EmptyChain(InvalidParameter):
    """A composite processor needs at least one member."""


class UnregisteredProcessor(TactusError):
    """A pipeline document names a processor kind that is not registered."""


class UnserializableParameter(TactusError, TypeError):
    """A processor parameter cannot be represented in the pipeline format."""


class ParseError(TactusError, ValueError):
    """A document (pipeline, config, model, annotation) is malformed."""


class UnknownFormatVersion(ParseError):
    """The document declares a format version this build does not read."""


class UnsupportedFormat(TactusError):
    """The audio container or sample encoding cannot be decoded natively."""


class DecodeError(TactusError):
    """Decoding audio data (native or via the external decoder) failed."""


class UnsupportedRemix(InvalidParameter):
    """Only mono downmix and identity channel layouts are supported."""


class IndexOutOfRange(TactusError, IndexError):
    """Frame index outside ``[0, num_frames)``."""


class UnknownWindow(InvalidParameter):
    """Unrecognized analysis window name."""


class UnknownActivation(InvalidParameter):
    """Unrecognized activation function name."""


class DegenerateFilter(InvalidParameter):
    """A requested filter band covers no FFT bin."""


class UnknownLayerKind(ParseError):
    """A model file declares a layer kind this build does not implement."""


class ShapeMismatch(ParseError):
    """A tensor payload disagrees with its declared shape, or shapes do
    not chain."""


class ChecksumMismatch(ParseError):
    """The model file checksum does not match its tensor payloads."""


class IncompatibleLayerOrder(TactusError):
    """Network layers are stacked in an order that cannot be evaluated."""


class KernelTooLarge(DimensionMismatch):
    """A convolution kernel does not fit inside its input."""


class NoValidPath(TactusError):
    """Every state sequence has probability zero."""


class EmptyHistogram(InvalidParameter):
    """Tempo detection needs a non-empty histogram."""


class UnsortedInput(TactusError, ValueError):
    """Event lists passed to the evaluation metrics must be sorted."""


class EmptyDetections(InvalidParameter):
    """Tempo evaluation needs at least one detected tempo."""


class NoInputs(TactusError):
    """Batch mode resolved zero input files."""


class ValidationError(TactusError, ValueError):
    """A configuration file contains an invalid value."""


class UsageError(TactusError):
    """Bad command line invocation."""
