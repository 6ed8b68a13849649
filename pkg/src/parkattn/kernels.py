"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection is controlled by the PARKATTN_NUMBA environment variable:
"1" forces numba (raises if unavailable), "0" forces the numpy fallback,
anything else (or unset) auto-detects.  The active backend is reported by
:func:`backend` and recorded in run manifests so results stay attributable.

benchmarks/bench_kernels.py compares both paths on representative sizes.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("PARKATTN_NUMBA", "auto").strip().lower()

if _REQUESTED == "0":
    _HAVE_NUMBA = False
else:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _REQUESTED == "1":
            raise
        _HAVE_NUMBA = False


def backend() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# DTW accumulated-cost table
# ---------------------------------------------------------------------------

def _dtw_table_py(dist):
    n, m = dist.shape
    acc = np.empty((n, m), dtype=np.float64)
    step = np.zeros((n, m), dtype=np.int8)  # 0=diag, 1=up (i-1), 2=left (j-1)
    acc[0, 0] = dist[0, 0]
    for j in range(1, m):
        acc[0, j] = acc[0, j - 1] + dist[0, j]
        step[0, j] = 2
    for i in range(1, n):
        acc[i, 0] = acc[i - 1, 0] + dist[i, 0]
        step[i, 0] = 1
        for j in range(1, m):
            diag = acc[i - 1, j - 1]
            up = acc[i - 1, j]
            left = acc[i, j - 1]
            # ties prefer the diagonal so self-alignment stays on it
            best = diag
            choice = 0
            if up < best:
                best = up
                choice = 1
            if left < best:
                best = left
                choice = 2
            acc[i, j] = dist[i, j] + best
            step[i, j] = choice
    return acc, step


# ---------------------------------------------------------------------------
# Normalized autocorrelation per analysis frame (pitch search)
# ---------------------------------------------------------------------------

def _nacf_frames_np(frames, lag_min, lag_max):
    n_frames, width = frames.shape
    n_lags = lag_max - lag_min + 1
    out = np.zeros((n_frames, n_lags), dtype=np.float64)
    nfft = 1
    while nfft < 2 * width:
        nfft *= 2
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    raw = np.fft.irfft(spec * np.conj(spec), n=nfft, axis=1)[:, :width]
    csum = np.cumsum(frames * frames, axis=1)
    total = csum[:, -1]
    for li in range(n_lags):
        lag = lag_min + li
        if lag >= width:
            continue
        e0 = csum[:, width - 1 - lag]
        e1 = total - (csum[:, lag - 1] if lag > 0 else 0.0)
        denom = np.sqrt(e0 * e1)
        ok = denom > 1e-12
        out[ok, li] = raw[ok, lag] / denom[ok]
    return out


# ---------------------------------------------------------------------------
# Glottal-cycle peak picking guided by a frame-level f0 contour
# ---------------------------------------------------------------------------

def _cycle_peaks_py(x, start, stop, period):
    """Track one waveform peak per pitch cycle inside [start, stop).

    `period` is the expected cycle length in samples.  Returns peak sample
    indices; the search window for each next peak is 0.75..1.35 periods ahead,
    which tolerates moderate jitter without skipping cycles.
    """
    n = x.shape[0]
    if stop > n:
        stop = n
    first_end = start + int(period * 1.5)
    if first_end > stop:
        first_end = stop
    if first_end - start < 3:
        return np.empty(0, dtype=np.int64)
    best = start
    best_val = np.abs(x[start])
    for t in range(start, first_end):
        v = np.abs(x[t])
        if v > best_val:
            best_val = v
            best = t
    peaks = [best]
    cur = best
    while True:
        lo = cur + int(period * 0.75)
        hi = cur + int(period * 1.35)
        if hi >= stop:
            break
        best = lo
        best_val = np.abs(x[lo])
        for t in range(lo, hi + 1):
            v = np.abs(x[t])
            if v > best_val:
                best_val = v
                best = t
        peaks.append(best)
        cur = best
    return np.asarray(peaks, dtype=np.int64)


def _cycle_peaks_nb(x, start, stop, period):
    n = x.shape[0]
    if stop > n:
        stop = n
    first_end = start + int(period * 1.5)
    if first_end > stop:
        first_end = stop
    if first_end - start < 3:
        return np.empty(0, dtype=np.int64)
    best = start
    best_val = abs(x[start])
    for t in range(start, first_end):
        v = abs(x[t])
        if v > best_val:
            best_val = v
            best = t
    peaks = np.empty(stop - start, dtype=np.int64)
    peaks[0] = best
    count = 1
    cur = best
    while True:
        lo = cur + int(period * 0.75)
        hi = cur + int(period * 1.35)
        if hi >= stop:
            break
        best = lo
        best_val = abs(x[lo])
        for t in range(lo, hi + 1):
            v = abs(x[t])
            if v > best_val:
                best_val = v
                best = t
        peaks[count] = best
        count += 1
        cur = best
    return peaks[:count]


# ---------------------------------------------------------------------------
# Levinson-Durbin recursion (LPC analysis)
# ---------------------------------------------------------------------------

def _levinson_py(r, order):
    a = np.zeros(order + 1, dtype=np.float64)
    a[0] = 1.0
    err = r[0]
    if err <= 0.0:
        return a, 0.0
    for k in range(order):
        acc = 0.0
        for j in range(k + 1):
            acc += a[j] * r[k + 1 - j]
        lam = -acc / err
        half = (k + 1) // 2 + 1
        for j in range(half):
            tmp = a[k + 1 - j] + lam * a[j]
            a[j] = a[j] + lam * a[k + 1 - j]
            a[k + 1 - j] = tmp
        err *= 1.0 - lam * lam
        if err <= 0.0:
            return a, 0.0
    return a, err


if _HAVE_NUMBA:
    dtw_table = njit(cache=True)(_dtw_table_py)
    cycle_peaks = njit(cache=True)(_cycle_peaks_nb)
    levinson = njit(cache=True)(_levinson_py)
else:
    dtw_table = _dtw_table_py
    cycle_peaks = _cycle_peaks_py
    levinson = _levinson_py

# the FFT-based autocorrelation beats a jitted direct sum (O(W log W) vs
# O(W * lags)), so both backends share it; benchmarks/bench_kernels.py shows
# the comparison that motivated this
nacf_frames = _nacf_frames_np
