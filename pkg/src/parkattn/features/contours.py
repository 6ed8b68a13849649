"""Frame-level acoustic contour extraction on conditioned 16 kHz audio.

Pipeline per utterance:

1. 25 ms frames at a 10 ms hop; per-frame log energy (dB).
2. Pitch via normalized autocorrelation over the 50-500 Hz lag range.  A
   frame is voiced when the best correlation clears the voicing threshold
   and the frame energy clears a relative floor; the chosen lag is the
   smallest one within `octave_ratio` of the global peak (guards against
   halving errors on strongly periodic signals), refined parabolically.
3. Voiced segments are f0>0 runs lasting at least `min_voiced_s`; pauses are
   the gaps of at least `min_pause_s` between consecutive voiced segments
   (for a fully unvoiced recording the whole file counts as one pause).
4. Formants from order-12 LPC on pre-emphasized, Hann-windowed voiced
   frames: F1 is the lowest well-damped root in 200-1200 Hz, F2 the next in
   600-3500 Hz above F1.
5. Glottal-cycle marks per voiced segment by peak tracking at the local
   pitch period, refined parabolically to sub-sample precision; consecutive
   periods and peak amplitudes feed jitter/shimmer-style statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import kernels


class ContourError(ValueError):
    pass


@dataclass
class ContourConfig:
    sample_rate: int = 16000
    win_s: float = 0.025
    hop_s: float = 0.010
    f0_min: float = 50.0
    f0_max: float = 500.0
    voicing_threshold: float = 0.45
    octave_ratio: float = 0.90
    energy_floor_db: float = -40.0  # relative to the loudest frame
    min_voiced_s: float = 0.030
    min_pause_s: float = 0.050
    f0_median_width: int = 3
    lpc_order: int = 12
    preemphasis: float = 0.97
    f1_range: tuple[float, float] = (200.0, 1200.0)
    f2_range: tuple[float, float] = (600.0, 3500.0)
    max_formant_bandwidth: float = 600.0


@dataclass
class AcousticContours:
    f0: np.ndarray  # per-frame Hz, 0 = unvoiced
    log_energy: np.ndarray  # per-frame dB
    frame_times: np.ndarray  # frame start times, seconds
    active: np.ndarray  # per-frame bool, energy above the relative floor
    voiced_segments: list[tuple[float, float]]
    pauses: list[tuple[float, float]]
    f1: np.ndarray  # per-frame Hz, NaN when unvoiced or not found
    f2: np.ndarray
    cycle_times: list[np.ndarray]  # per voiced segment, seconds (sub-sample)
    cycle_amps: list[np.ndarray]  # per voiced segment, waveform peak magnitude
    duration_s: float
    config: ContourConfig = field(repr=False)


def _frame_signal(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    n_frames = 1 + (len(x) - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def _parabolic_refine(y: np.ndarray, i: int) -> tuple[float, float]:
    """Refine a discrete peak at index i; returns (offset in [-1,1], value)."""
    if i <= 0 or i >= len(y) - 1:
        return 0.0, y[i]
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if abs(denom) < 1e-12:
        return 0.0, y[i]
    delta = 0.5 * (y[i - 1] - y[i + 1]) / denom
    if abs(delta) > 1.0:
        return 0.0, y[i]
    value = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * delta
    return delta, value


def _pick_lag(nacf_row: np.ndarray, lag_min: int, threshold: float, ratio: float):
    """Smallest-lag local peak within `ratio` of the global maximum."""
    best = nacf_row.max()
    if best < threshold:
        return None
    floor = ratio * best
    candidates = np.flatnonzero(nacf_row >= floor)
    for idx in candidates:
        if 0 < idx < len(nacf_row) - 1 and not (
            nacf_row[idx] >= nacf_row[idx - 1] and nacf_row[idx] >= nacf_row[idx + 1]
        ):
            continue
        delta, _ = _parabolic_refine(nacf_row, int(idx))
        return lag_min + idx + delta
    idx = int(np.argmax(nacf_row))
    delta, _ = _parabolic_refine(nacf_row, idx)
    return lag_min + idx + delta


def _median_smooth_runs(f0: np.ndarray, width: int) -> np.ndarray:
    if width < 3:
        return f0
    out = f0.copy()
    half = width // 2
    voiced = f0 > 0
    for i in np.flatnonzero(voiced):
        lo = max(0, i - half)
        hi = min(len(f0), i + half + 1)
        window = f0[lo:hi]
        window = window[window > 0]
        out[i] = np.median(window)
    return out


def _lpc_formants(frame: np.ndarray, cfg: ContourConfig) -> tuple[float, float]:
    fs = cfg.sample_rate
    emphasized = np.empty_like(frame)
    emphasized[0] = frame[0]
    emphasized[1:] = frame[1:] - cfg.preemphasis * frame[:-1]
    windowed = emphasized * np.hanning(len(emphasized))
    r = np.correlate(windowed, windowed, mode="full")[len(windowed) - 1 :]
    if r[0] <= 0:
        return np.nan, np.nan
    a, err = kernels.levinson(r[: cfg.lpc_order + 1].astype(np.float64), cfg.lpc_order)
    if err <= 0:
        return np.nan, np.nan
    roots = np.roots(a)
    roots = roots[np.imag(roots) > 0]
    freqs = np.angle(roots) * fs / (2.0 * np.pi)
    bandwidths = -np.log(np.abs(roots)) * fs / np.pi
    ok = bandwidths < cfg.max_formant_bandwidth
    freqs = np.sort(freqs[ok])
    f1 = np.nan
    f2 = np.nan
    for f in freqs:
        if np.isnan(f1) and cfg.f1_range[0] <= f <= cfg.f1_range[1]:
            f1 = f
        elif not np.isnan(f1) and cfg.f2_range[0] <= f <= cfg.f2_range[1] and f > f1:
            f2 = f
            break
    return f1, f2


def _cycle_marks(
    x: np.ndarray, start_t: float, end_t: float, f0_med: float, cfg: ContourConfig
) -> tuple[np.ndarray, np.ndarray]:
    fs = cfg.sample_rate
    start = int(round(start_t * fs))
    stop = min(int(round(end_t * fs)), len(x))
    period = fs / f0_med
    peaks = kernels.cycle_peaks(np.abs(x), start, stop, period)
    if peaks.size == 0:
        return np.empty(0), np.empty(0)
    times = np.empty(peaks.size)
    amps = np.empty(peaks.size)
    mags = np.abs(x)
    for i, p in enumerate(peaks):
        delta, value = _parabolic_refine(mags, int(p))
        times[i] = (p + delta) / fs
        amps[i] = value
    return times, amps


def extract_contours(
    samples: np.ndarray,
    config: Optional[ContourConfig] = None,
) -> AcousticContours:
    cfg = config or ContourConfig()
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    fs = cfg.sample_rate
    win = int(round(cfg.win_s * fs))
    hop = int(round(cfg.hop_s * fs))
    if len(x) < win:
        raise ContourError(
            f"audio shorter than one analysis window ({len(x)} < {win} samples)"
        )
    duration = len(x) / fs
    frames = _frame_signal(x, win, hop)
    n_frames = frames.shape[0]
    frame_times = np.arange(n_frames) * cfg.hop_s

    mean_sq = (frames * frames).mean(axis=1)
    log_energy = 10.0 * np.log10(mean_sq + 1e-12)
    active = log_energy > (log_energy.max() + cfg.energy_floor_db)

    lag_min = int(np.floor(fs / cfg.f0_max))
    lag_max = int(np.ceil(fs / cfg.f0_min))
    nacf = kernels.nacf_frames(np.ascontiguousarray(frames), lag_min, lag_max)

    f0 = np.zeros(n_frames)
    for i in range(n_frames):
        if not active[i]:
            continue
        lag = _pick_lag(nacf[i], lag_min, cfg.voicing_threshold, cfg.octave_ratio)
        if lag is None:
            continue
        hz = fs / lag
        if cfg.f0_min <= hz <= cfg.f0_max:
            f0[i] = hz
    f0 = _median_smooth_runs(f0, cfg.f0_median_width)

    # voiced runs -> segments with a minimum duration
    min_frames = max(1, int(np.ceil(cfg.min_voiced_s / cfg.hop_s)))
    segments: list[tuple[int, int]] = []
    i = 0
    while i < n_frames:
        if f0[i] > 0:
            j = i
            while j + 1 < n_frames and f0[j + 1] > 0:
                j += 1
            if j - i + 1 >= min_frames:
                segments.append((i, j))
            else:
                f0[i : j + 1] = 0.0
            i = j + 1
        else:
            i += 1
    # segment extents use the frame-center convention: a frame "owns" the
    # hop-sized span around its center, which keeps boundary error ~hop/2
    # instead of a full window length
    half_win = cfg.win_s / 2.0
    half_hop = cfg.hop_s / 2.0
    voiced_segments = [
        (
            max(0.0, frame_times[a] + half_win - half_hop),
            min(duration, frame_times[b] + half_win + half_hop),
        )
        for a, b in segments
    ]

    pauses: list[tuple[float, float]] = []
    if voiced_segments:
        for (_, prev_end), (next_start, _) in zip(voiced_segments, voiced_segments[1:]):
            if next_start - prev_end >= cfg.min_pause_s:
                pauses.append((prev_end, next_start))
    else:
        pauses.append((0.0, duration))

    f1 = np.full(n_frames, np.nan)
    f2 = np.full(n_frames, np.nan)
    for i in range(n_frames):
        if f0[i] > 0:
            f1[i], f2[i] = _lpc_formants(frames[i], cfg)

    cycle_times: list[np.ndarray] = []
    cycle_amps: list[np.ndarray] = []
    for (a, b), (start_t, end_t) in zip(segments, voiced_segments):
        seg_f0 = f0[a : b + 1]
        f0_med = float(np.median(seg_f0[seg_f0 > 0]))
        times, amps = _cycle_marks(x, start_t, end_t, f0_med, cfg)
        cycle_times.append(times)
        cycle_amps.append(amps)

    return AcousticContours(
        f0=f0,
        log_energy=log_energy,
        frame_times=frame_times,
        active=active,
        voiced_segments=voiced_segments,
        pauses=pauses,
        f1=f1,
        f2=f2,
        cycle_times=cycle_times,
        cycle_amps=cycle_amps,
        duration_s=duration,
        config=cfg,
    )
