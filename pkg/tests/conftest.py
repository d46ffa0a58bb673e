"""Shared fixtures: synthetic audio files written by an independent,
minimal WAV writer (deliberately not the library's own code)."""

import struct

import numpy as np
import pytest

SAMPLE_RATE = 44100


def write_wav(path, samples, sample_rate=SAMPLE_RATE, fmt="int16"):
    """Write a RIFF/WAVE file from scratch with struct packing."""
    samples = np.asarray(samples)
    if samples.ndim == 1:
        samples = samples[:, None]
    frames, channels = samples.shape
    if fmt == "uint8":
        payload = (samples.astype(np.int64) + 128).astype("<u1").tobytes()
        bits, tag = 8, 1
    elif fmt == "int16":
        payload = samples.astype("<i2").tobytes()
        bits, tag = 16, 1
    elif fmt == "int24":
        as32 = samples.astype("<i4").tobytes()
        raw = np.frombuffer(as32, dtype=np.uint8).reshape(-1, 4)
        payload = raw[:, :3].tobytes()  # little-endian: drop the high byte
        bits, tag = 24, 1
    elif fmt == "int32":
        payload = samples.astype("<i4").tobytes()
        bits, tag = 32, 1
    elif fmt == "float32":
        payload = samples.astype("<f4").tobytes()
        bits, tag = 32, 3
    else:
        raise ValueError(fmt)
    block = channels * bits // 8
    fmt_chunk = struct.pack("<HHIIHH", tag, channels, sample_rate,
                            sample_rate * block, block, bits)
    data = b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt_chunk) + 8 + len(payload))
    data += b"WAVE" + b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    data += b"data" + struct.pack("<I", len(payload)) + payload
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def click_track(duration=10.0, period=0.5, first=0.5, click_ms=1.0,
                amplitude=0.9, seed=1234):
    """Noise-burst click track; returns (float samples, click times)."""
    rng = np.random.default_rng(seed)
    total = int(round(duration * SAMPLE_RATE))
    x = np.zeros(total)
    click_len = int(round(click_ms / 1000.0 * SAMPLE_RATE))
    click = rng.uniform(-1.0, 1.0, click_len) * amplitude
    times = []
    t = first
    while t < duration - click_ms / 1000.0:
        start = int(round(t * SAMPLE_RATE))
        x[start:start + click_len] = click
        times.append(t)
        t += period
    return x, np.asarray(times)


def to_int16(x):
    return np.round(np.clip(x, -1.0, 1.0) * 32767).astype(np.int16)


@pytest.fixture(scope="session")
def click_wav(tmp_path_factory):
    """10 s click track, clicks every 0.5 s; returns (path, click times)."""
    path = tmp_path_factory.mktemp("audio") / "clicks.wav"
    x, times = click_track()
    write_wav(path, to_int16(x))
    return str(path), times


@pytest.fixture(scope="session")
def silence_wav(tmp_path_factory):
    path = tmp_path_factory.mktemp("audio") / "silence.wav"
    write_wav(path, np.zeros(5 * SAMPLE_RATE, dtype=np.int16))
    return str(path)


@pytest.fixture(scope="session")
def tone_wav(tmp_path_factory):
    """2 s, 440 Hz sine at half scale."""
    path = tmp_path_factory.mktemp("audio") / "tone.wav"
    t = np.arange(2 * SAMPLE_RATE) / SAMPLE_RATE
    write_wav(path, to_int16(0.5 * np.sin(2 * np.pi * 440.0 * t)))
    return str(path)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Five short, distinct click files for batch/reproducibility tests."""
    root = tmp_path_factory.mktemp("corpus")
    specs = [("a", 0.50, 0.20), ("b", 0.40, 0.10), ("c", 0.60, 0.30),
             ("d", 0.25, 0.15), ("e", 0.75, 0.05)]
    for name, period, first in specs:
        x, _ = click_track(duration=3.0, period=period, first=first,
                           seed=hash(name) % 2 ** 32)
        write_wav(root / (name + ".wav"), to_int16(x))
    return str(root)
