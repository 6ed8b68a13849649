"""Audio conditioning: PCM WAV I/O, 16 kHz resampling, loudness gain."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal
from scipy.io import wavfile

from .loudness import integrated_loudness, normalize_loudness

TARGET_RATE = 16000
TARGET_LUFS = -23.0


class AudioError(ValueError):
    pass


@dataclass
class ConditionedAudio:
    samples: np.ndarray  # float64 in [-1, 1] nominal range
    rate: int
    loudness_before: float
    loudness_after: float
    resampled: bool
    silent: bool  # warning flag: loudness was unmeasurable, gain skipped


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM or float32 WAV as float64; stereo is downmixed."""
    rate, data = wavfile.read(path)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported WAV sample format {data.dtype}")
    return samples, int(rate)


def write_wav(path, samples: np.ndarray, rate: int) -> None:
    wavfile.write(path, rate, np.asarray(samples, dtype=np.float32))


def resample_to_16k(samples: np.ndarray, rate_in: int) -> np.ndarray:
    """Polyphase windowed-sinc resampling; 16 kHz input passes through untouched."""
    if rate_in == TARGET_RATE:
        return samples
    frac = Fraction(TARGET_RATE, int(rate_in))
    return signal.resample_poly(samples, frac.numerator, frac.denominator)


def condition_audio(
    samples: np.ndarray,
    rate_in: int,
    target_lufs: float = TARGET_LUFS,
) -> ConditionedAudio:
    """Resample to 16 kHz, then apply gain to reach the target loudness.

    Digital silence (and any signal whose loudness cannot be measured, e.g.
    everything under the absolute gate) is returned unchanged with the
    `silent` warning flag set.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise AudioError("empty audio input")
    if rate_in < 8000:
        raise AudioError(f"input rate {rate_in} Hz is below the 8 kHz minimum")
    if samples.size / rate_in < 0.1:
        raise AudioError(
            f"audio too short: {samples.size / rate_in:.3f}s, need at least 0.1s"
        )
    resampled = rate_in != TARGET_RATE
    out = resample_to_16k(samples, rate_in)
    gained, before, silent = normalize_loudness(out, TARGET_RATE, target_lufs)
    after = before if silent else integrated_loudness(gained, TARGET_RATE)
    return ConditionedAudio(
        samples=gained,
        rate=TARGET_RATE,
        loudness_before=before,
        loudness_after=after,
        resampled=resampled,
        silent=silent,
    )
