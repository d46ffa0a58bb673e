"""Spectral transforms: STFT, magnitude/filterbank/log spectrograms,
MFCCs, and chroma vectors.

Value-range independence: before the transform, integer samples are
scaled to [-1, 1) by ``2 ** (source_bit_depth - 1)`` while float samples
pass through, so the same waveform yields the same spectrogram no matter
how it was stored.

Phase correctness: with ``circular_shift`` (the default) each windowed,
zero-padded frame is rotated left by ``frame_size // 2`` so the frame
center sits at transform index 0; magnitudes are unaffected.
"""

import numpy as np
from scipy.fft import dct as _dct

from .audio import FramedSignal
from .errors import (DegenerateFilter, DimensionMismatch, InvalidParameter,
                     TypeMismatch, UnknownWindow)
from .pipeline import Processor, register


def window_function(kind, length):
    """Periodic (DFT-even) analysis window of the given length."""
    n = np.arange(length)
    if kind == "rectangular":
        return np.ones(length)
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)
    if kind == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / length)
    raise UnknownWindow("unknown window %r" % (kind,))


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _next_power_of_two(n):
    return 1 << (int(n) - 1).bit_length()


class STFT:
    """Complex short-time Fourier transform of a framed signal.

    Attributes
    ----------
    values : complex ndarray, shape (num_frames, num_bins)
        ``num_bins = fft_size / 2 + 1`` (real input, nonnegative
        frequencies only).
    frame_rate : float
        Frames per second of the underlying framing.
    bin_frequencies : ndarray
        ``k * sample_rate / fft_size`` for each bin.
    window : str
    circular_shift : bool
    """

    def __init__(self, values, frame_rate, bin_frequencies, window="hann",
                 circular_shift=True):
        values = np.asarray(values, dtype=np.complex128).copy()
        values.flags.writeable = False
        self.values = values
        self.frame_rate = float(frame_rate)
        self.bin_frequencies = np.asarray(bin_frequencies, dtype=np.float64)
        self.window = window
        self.circular_shift = bool(circular_shift)

    @property
    def num_frames(self):
        return self.values.shape[0]

    @property
    def num_bins(self):
        return self.values.shape[1]


class Spectrogram:
    """Real-valued spectrogram (magnitudes or any per-band transform of
    them) with its frame rate and band frequencies."""

    def __init__(self, values, frame_rate, bin_frequencies):
        values = np.asarray(values, dtype=np.float64).copy()
        if values.ndim != 2:
            raise InvalidParameter("spectrogram values must be 2-D")
        if values.shape[1] != len(bin_frequencies):
            raise DimensionMismatch("got %d columns but %d bin frequencies"
                                    % (values.shape[1], len(bin_frequencies)))
        values.flags.writeable = False
        self.values = values
        self.frame_rate = float(frame_rate)
        self.bin_frequencies = np.asarray(bin_frequencies, dtype=np.float64)

    @property
    def num_frames(self):
        return self.values.shape[0]

    @property
    def num_bins(self):
        return self.values.shape[1]


def stft(framed, window="hann", fft_size=None, circular_shift=True):
    """Short-time Fourier transform of a framed mono signal.

    Parameters
    ----------
    framed : FramedSignal
    window : {'hann', 'hamming', 'rectangular'}
    fft_size : int, optional
        Power of two >= frame_size; defaults to the next power of two.
        Frames are zero-padded up to this length.
    circular_shift : bool
        Rotate each frame so its center sits at transform index 0,
        giving phase referenced to the frame center.

    Returns
    -------
    STFT
    """
    if not isinstance(framed, FramedSignal):
        raise TypeMismatch("stft expects a FramedSignal")
    if framed.signal.samples.ndim != 1:
        raise TypeMismatch("stft needs a mono signal; remix first")
    frame_size = framed.frame_size
    if fft_size is None:
        fft_size = _next_power_of_two(frame_size)
    fft_size = int(fft_size)
    if fft_size < frame_size or not _is_power_of_two(fft_size):
        raise InvalidParameter("fft_size must be a power of two >= frame_size")
    win = window_function(window, frame_size)

    frames = framed.as_matrix().astype(np.float64)
    if np.issubdtype(framed.signal.samples.dtype, np.integer):
        frames /= 2.0 ** (framed.signal.source_bit_depth - 1)
    frames *= win
    if fft_size > frame_size:
        padded = np.zeros((frames.shape[0], fft_size))
        padded[:, :frame_size] = frames
        frames = padded
    if circular_shift:
        frames = np.roll(frames, -(frame_size // 2), axis=1)
    coefficients = np.fft.rfft(frames, axis=1)

    sample_rate = framed.signal.sample_rate
    bin_frequencies = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)
    return STFT(coefficients, framed.fps, bin_frequencies, window=window,
                circular_shift=circular_shift)


def magnitude(transform):
    """Magnitude spectrogram: elementwise modulus of the STFT."""
    if not isinstance(transform, STFT):
        raise TypeMismatch("magnitude expects an STFT")
    return Spectrogram(np.abs(transform.values), transform.frame_rate,
                       transform.bin_frequencies)


# ---------------------------------------------------------------------------
# filterbanks

def hertz_to_mel(f):
    """Mel value of a frequency in Hz."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hertz(m):
    """Frequency in Hz of a mel value."""
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


# critical-band boundaries and centers, 24 bands spanning 20 Hz - 15.5 kHz
BARK_BAND_EDGES = np.array([
    20, 100, 200, 300, 400, 510, 630, 770, 920, 1080, 1270, 1480, 1720,
    2000, 2320, 2700, 3150, 3700, 4400, 5300, 6400, 7700, 9500, 12000,
    15500], dtype=np.float64)
BARK_BAND_CENTERS = np.array([
    50, 150, 250, 350, 450, 570, 700, 840, 1000, 1170, 1370, 1600, 1850,
    2150, 2500, 2900, 3400, 4000, 4800, 5800, 7000, 8500, 10500, 13500],
    dtype=np.float64)

A4_REFERENCE_HZ = 440.0


class Filterbank:
    """Bank of triangular band filters sampled at the FFT bin centers.

    ``band_center_frequencies`` holds the nominal (scale-formula) center
    of each band; the filter weights peak at the FFT bin nearest that
    center. Rows are unit-sum when built with ``normalize=True``.
    """

    def __init__(self, weights, band_center_frequencies, kind):
        weights = np.asarray(weights, dtype=np.float64).copy()
        centers = np.asarray(band_center_frequencies, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != len(centers):
            raise DimensionMismatch("weights must be (num_bands, num_bins)")
        if np.any(weights < 0):
            raise InvalidParameter("filter weights must be nonnegative")
        if not np.all((weights > 0).any(axis=1)):
            raise DegenerateFilter("every band needs at least one nonzero bin")
        if np.any(np.diff(centers) <= 0):
            raise InvalidParameter("band centers must be strictly increasing")
        weights.flags.writeable = False
        self.weights = weights
        self.band_center_frequencies = centers
        self.kind = kind

    @property
    def num_bands(self):
        return self.weights.shape[0]

    @property
    def num_bins(self):
        return self.weights.shape[1]


def _nearest_bins(bin_frequencies, freqs):
    """Index of the FFT bin nearest each frequency (ties toward lower)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    pos = np.searchsorted(bin_frequencies, freqs)
    pos = np.clip(pos, 1, len(bin_frequencies) - 1)
    left, right = bin_frequencies[pos - 1], bin_frequencies[pos]
    return np.where(freqs - left <= right - freqs, pos - 1, pos)


def _check_band_range(bin_frequencies, fmin, fmax):
    bin_frequencies = np.asarray(bin_frequencies, dtype=np.float64)
    if bin_frequencies.ndim != 1 or len(bin_frequencies) < 2:
        raise InvalidParameter("need at least two bin frequencies")
    if not 0 <= fmin < fmax:
        raise InvalidParameter("need 0 <= fmin < fmax")
    if fmax > bin_frequencies[-1]:
        raise InvalidParameter("fmax %.1f Hz above the covered range %.1f Hz"
                               % (fmax, bin_frequencies[-1]))
    return bin_frequencies


def _triangular_filterbank(bin_frequencies, edge_lo, centers, edge_hi, kind,
                           normalize=True, unique_bins=True):
    """Build triangles spanning previous-center -> center -> next-center.

    Triangle corners are snapped to the nearest FFT bin, and the weights
    are linear between corner bins, so each band's maximum sits exactly
    on the bin nearest its nominal center. When the FFT resolution is
    too coarse, several centers can snap to the same bin; with
    ``unique_bins`` such duplicate bands are merged (keeping the first
    nominal center), otherwise this is an error.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.size == 0:
        raise DegenerateFilter("no band centers inside the requested range")
    num_bins = len(bin_frequencies)
    points = np.concatenate(([edge_lo], centers, [edge_hi]))
    bins = _nearest_bins(bin_frequencies,
                         np.clip(points, 0.0, bin_frequencies[-1]))
    center_bins = bins[1:-1]
    if unique_bins:
        keep = np.flatnonzero(np.r_[True, np.diff(center_bins) != 0])
        center_bins = center_bins[keep]
        centers = centers[keep]
    elif len(np.unique(center_bins)) != len(center_bins):
        raise DegenerateFilter(
            "FFT resolution too coarse to keep all bands distinct")

    lefts = np.concatenate(([bins[0]], center_bins[:-1]))
    rights = np.concatenate((center_bins[1:], [bins[-1]]))
    weights = np.zeros((len(center_bins), num_bins))
    for row, (left, center, right) in enumerate(
            zip(lefts, center_bins, rights)):
        if center > left:
            rise = np.arange(left + 1, center)
            weights[row, rise] = (rise - left) / (center - left)
        weights[row, center] = 1.0
        if right > center:
            fall = np.arange(center + 1, right)
            weights[row, fall] = (right - fall) / (right - center)
    if normalize:
        weights /= weights.sum(axis=1, keepdims=True)
    return Filterbank(weights, centers, kind)


def mel_filterbank(bin_frequencies, num_bands=40, fmin=20.0, fmax=17000.0,
                   normalize=True):
    """Triangular filters with centers equally spaced on the mel scale."""
    bin_frequencies = _check_band_range(bin_frequencies, fmin, fmax)
    if not isinstance(num_bands, (int, np.integer)) or num_bands < 1:
        raise InvalidParameter("num_bands must be a positive integer")
    grid = np.linspace(hertz_to_mel(fmin), hertz_to_mel(fmax), num_bands + 2)
    freqs = mel_to_hertz(grid)
    return _triangular_filterbank(bin_frequencies, freqs[0], freqs[1:-1],
                                  freqs[-1], "mel", normalize=normalize)


def bark_filterbank(bin_frequencies, fmin=20.0, fmax=15500.0, normalize=True):
    """Triangular filters over the critical bands inside [fmin, fmax]."""
    bin_frequencies = _check_band_range(bin_frequencies, fmin, fmax)
    inside = np.flatnonzero((BARK_BAND_EDGES[:-1] >= fmin)
                            & (BARK_BAND_EDGES[1:] <= fmax))
    if inside.size == 0:
        raise DegenerateFilter("no critical band inside [%.1f, %.1f] Hz"
                               % (fmin, fmax))
    centers = BARK_BAND_CENTERS[inside]
    edge_lo = BARK_BAND_EDGES[inside[0]]
    edge_hi = BARK_BAND_EDGES[inside[-1] + 1]
    return _triangular_filterbank(bin_frequencies, edge_lo, centers, edge_hi,
                                  "bark", normalize=normalize)


def log_filterbank(bin_frequencies, bands_per_octave=12, fmin=65.0,
                   fmax=17000.0, fref=A4_REFERENCE_HZ, normalize=True,
                   unique_bins=True):
    """Triangular filters with centers at ``fref * 2**(i / bands_per_octave)``.

    Consecutive nominal centers are an exact factor of
    ``2**(1 / bands_per_octave)`` apart.
    """
    bin_frequencies = _check_band_range(bin_frequencies, fmin, fmax)
    if not isinstance(bands_per_octave, (int, np.integer)) or bands_per_octave < 1:
        raise InvalidParameter("bands_per_octave must be a positive integer")
    if fref <= 0:
        raise InvalidParameter("fref must be positive")
    imin = int(np.ceil(bands_per_octave * np.log2(fmin / fref)))
    imax = int(np.floor(bands_per_octave * np.log2(fmax / fref)))
    if imax < imin:
        raise DegenerateFilter("no band centers inside [%.1f, %.1f] Hz"
                               % (fmin, fmax))
    exponents = np.arange(imin - 1, imax + 2)
    freqs = fref * 2.0 ** (exponents / bands_per_octave)
    return _triangular_filterbank(bin_frequencies, freqs[0], freqs[1:-1],
                                  freqs[-1], "logarithmic",
                                  normalize=normalize, unique_bins=unique_bins)


def build_filterbank(kind, bin_frequencies, num_bands=None,
                     bands_per_octave=None, fmin=None, fmax=None,
                     normalize=True):
    """Build a mel, bark, or logarithmic filterbank with per-kind defaults."""
    if kind == "mel":
        kwargs = {"num_bands": 40 if num_bands is None else num_bands,
                  "fmin": 20.0 if fmin is None else fmin,
                  "fmax": 17000.0 if fmax is None else fmax}
        return mel_filterbank(bin_frequencies, normalize=normalize, **kwargs)
    if kind == "bark":
        kwargs = {"fmin": 20.0 if fmin is None else fmin,
                  "fmax": 15500.0 if fmax is None else fmax}
        return bark_filterbank(bin_frequencies, normalize=normalize, **kwargs)
    if kind == "logarithmic":
        kwargs = {"bands_per_octave": 12 if bands_per_octave is None
                  else bands_per_octave,
                  "fmin": 65.0 if fmin is None else fmin,
                  "fmax": 17000.0 if fmax is None else fmax}
        return log_filterbank(bin_frequencies, normalize=normalize, **kwargs)
    raise InvalidParameter("unknown filterbank kind %r" % (kind,))


def apply_filterbank(spectrogram, filterbank):
    """Reduce a spectrogram to filter bands: ``values @ weights.T``."""
    if not isinstance(spectrogram, Spectrogram):
        raise TypeMismatch("apply_filterbank expects a Spectrogram")
    if spectrogram.num_bins != filterbank.num_bins:
        raise DimensionMismatch("spectrogram has %d bins, filterbank %d"
                                % (spectrogram.num_bins, filterbank.num_bins))
    values = spectrogram.values @ filterbank.weights.T
    return Spectrogram(values, spectrogram.frame_rate,
                       filterbank.band_center_frequencies)


def log_compress(spectrogram, mul=1.0, add=1.0):
    """Logarithmic compression: ``log10(mul * x + add)`` elementwise."""
    if not isinstance(spectrogram, Spectrogram):
        raise TypeMismatch("log_compress expects a Spectrogram")
    if add <= 0:
        raise InvalidParameter("add must be > 0")
    if mul < 0:
        raise InvalidParameter("mul must be >= 0")
    values = np.log10(mul * spectrogram.values + add)
    return Spectrogram(values, spectrogram.frame_rate,
                       spectrogram.bin_frequencies)


def mfcc(spectrogram, num_coefficients=13):
    """Cepstral coefficients of a (log) band spectrogram.

    Applies the orthonormal type-II DCT along the band axis and keeps
    the first ``num_coefficients`` values per frame.

    Returns
    -------
    ndarray, shape (num_frames, num_coefficients)
    """
    if not isinstance(spectrogram, Spectrogram):
        raise TypeMismatch("mfcc expects a Spectrogram")
    if not 1 <= num_coefficients <= spectrogram.num_bins:
        raise InvalidParameter("num_coefficients must be in [1, %d]"
                               % spectrogram.num_bins)
    coefficients = _dct(spectrogram.values, type=2, axis=1, norm="ortho")
    return coefficients[:, :num_coefficients]


def chroma(spectrogram, fmin=65.0, fmax=2100.0):
    """12-dimensional pitch-class profile.

    Applies a 12-bands-per-octave logarithmic filterbank over
    [fmin, fmax] and folds the bands into pitch classes; class 0 is A
    (the 440 Hz reference and its octaves). Requires enough FFT
    resolution to keep all semitone bands distinct.

    Returns
    -------
    ndarray, shape (num_frames, 12)
    """
    if not isinstance(spectrogram, Spectrogram):
        raise TypeMismatch("chroma expects a Spectrogram")
    bank = log_filterbank(spectrogram.bin_frequencies, bands_per_octave=12,
                          fmin=fmin, fmax=fmax, unique_bins=False)
    banded = spectrogram.values @ bank.weights.T
    semitones = np.round(
        12.0 * np.log2(bank.band_center_frequencies / A4_REFERENCE_HZ))
    classes = semitones.astype(int) % 12
    out = np.zeros((spectrogram.num_frames, 12))
    for pitch_class in range(12):
        members = classes == pitch_class
        if members.any():
            out[:, pitch_class] = banded[:, members].sum(axis=1)
    return out


def export_text(matrix, destination, delimiter=","):
    """Write a matrix as delimiter-separated values, one frame per row."""
    np.savetxt(destination, np.atleast_2d(np.asarray(matrix)), fmt="%.12g",
               delimiter=delimiter)


# ---------------------------------------------------------------------------
# processors

@register
class STFTProcessor(Processor):
    """FramedSignal -> STFT."""

    kind = "stft"

    def __init__(self, window="hann", fft_size=None, circular_shift=True):
        window_function(window, 2)  # validate the name early
        self._window = window
        self._fft_size = fft_size
        self._circular_shift = bool(circular_shift)

    def params(self):
        return {"window": self._window, "fft_size": self._fft_size,
                "circular_shift": self._circular_shift}

    def process(self, data):
        return stft(data, window=self._window, fft_size=self._fft_size,
                    circular_shift=self._circular_shift)


@register
class MagnitudeProcessor(Processor):
    """STFT -> magnitude Spectrogram."""

    kind = "magnitude"

    def process(self, data):
        return magnitude(data)


@register
class FilterbankProcessor(Processor):
    """Spectrogram -> band Spectrogram through a mel/bark/log filterbank.

    The filterbank itself depends on the incoming bin layout, so it is
    built per call; construction is cheap next to the transform.
    """

    kind = "filterbank"

    def __init__(self, filterbank_kind="mel", num_bands=40,
                 bands_per_octave=12, fmin=None, fmax=None, normalize=True):
        if filterbank_kind not in ("mel", "bark", "logarithmic"):
            raise InvalidParameter("unknown filterbank kind %r"
                                   % (filterbank_kind,))
        self._filterbank_kind = filterbank_kind
        self._num_bands = num_bands
        self._bands_per_octave = bands_per_octave
        self._fmin = fmin
        self._fmax = fmax
        self._normalize = bool(normalize)

    def params(self):
        return {"filterbank_kind": self._filterbank_kind,
                "num_bands": self._num_bands,
                "bands_per_octave": self._bands_per_octave,
                "fmin": self._fmin, "fmax": self._fmax,
                "normalize": self._normalize}

    def process(self, data):
        if not isinstance(data, Spectrogram):
            raise TypeMismatch("filterbank expects a Spectrogram")
        bank = build_filterbank(self._filterbank_kind, data.bin_frequencies,
                                num_bands=self._num_bands,
                                bands_per_octave=self._bands_per_octave,
                                fmin=self._fmin, fmax=self._fmax,
                                normalize=self._normalize)
        return apply_filterbank(data, bank)


@register
class LogCompressProcessor(Processor):
    """Spectrogram -> log10(mul * x + add)."""

    kind = "log_compress"

    def __init__(self, mul=1.0, add=1.0):
        if add <= 0:
            raise InvalidParameter("add must be > 0")
        if mul < 0:
            raise InvalidParameter("mul must be >= 0")
        self._mul = float(mul)
        self._add = float(add)

    def params(self):
        return {"mul": self._mul, "add": self._add}

    def process(self, data):
        return log_compress(data, mul=self._mul, add=self._add)


@register
class MfccProcessor(Processor):
    """Band Spectrogram -> cepstral coefficient matrix."""

    kind = "mfcc"

    def __init__(self, num_coefficients=13):
        if num_coefficients < 1:
            raise InvalidParameter("num_coefficients must be >= 1")
        self._num_coefficients = int(num_coefficients)

    def params(self):
        return {"num_coefficients": self._num_coefficients}

    def process(self, data):
        return mfcc(data, num_coefficients=self._num_coefficients)


@register
class ChromaProcessor(Processor):
    """Spectrogram -> pitch-class profile matrix."""

    kind = "chroma"

    def __init__(self, fmin=65.0, fmax=2100.0):
        if not 0 < fmin < fmax:
            raise InvalidParameter("need 0 < fmin < fmax")
        self._fmin = float(fmin)
        self._fmax = float(fmax)

    def params(self):
        return {"fmin": self._fmin, "fmax": self._fmax}

    def process(self, data):
        return chroma(data, fmin=self._fmin, fmax=self._fmax)
