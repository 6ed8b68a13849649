"""ITU-R BS.1770 integrated loudness and EBU R128 gain normalization.

Mono audio only (the corpus pipeline downmixes before this stage).  The
K-weighting pre-filter is the published 48 kHz coefficient pair when the
sample rate is exactly 48 kHz and is otherwise re-derived from the analog
prototype (high-shelf at 1681.97 Hz, +4 dB, then a 38.14 Hz high-pass).
Gating follows the standard: 400 ms blocks with 75% overlap, an absolute
gate at -70 LUFS and a relative gate 10 LU under the absolute-gated mean.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

BLOCK_S = 0.400
OVERLAP = 0.75
ABS_GATE_LUFS = -70.0
REL_GATE_LU = -10.0
_OFFSET = -0.691

_SOS_48K = np.array(
    [
        [
            1.53512485958697,
            -2.69169618940638,
            1.19839281085285,
            1.0,
            -1.69065929318241,
            0.73248077421585,
        ],
        [1.0, -2.0, 1.0, 1.0, -1.99004745483398, 0.99007225036621],
    ]
)


def k_weighting_sos(fs: float) -> np.ndarray:
    """Second-order sections of the two-stage K-weighting pre-filter."""
    if fs == 48000:
        return _SOS_48K
    # stage 1: spherical-head high shelf
    f0 = 1681.9744509555319
    gain_db = 3.99984385397
    q = 0.7071752369554193
    k = np.tan(np.pi * f0 / fs)
    vh = 10.0 ** (gain_db / 20.0)
    vb = vh ** 0.499666774155
    a0 = 1.0 + k / q + k * k
    stage1 = [
        (vh + vb * k / q + k * k) / a0,
        2.0 * (k * k - vh) / a0,
        (vh - vb * k / q + k * k) / a0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / q + k * k) / a0,
    ]
    # stage 2: RLB high-pass
    f0 = 38.13547087613982
    q = 0.5003270373253953
    k = np.tan(np.pi * f0 / fs)
    a0 = 1.0 + k / q + k * k
    stage2 = [
        1.0,
        -2.0,
        1.0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / q + k * k) / a0,
    ]
    return np.array([stage1, stage2])


def _block_mean_squares(samples: np.ndarray, fs: float) -> np.ndarray:
    """Mean square of the K-weighted signal per 400 ms gating block."""
    filtered = signal.sosfilt(k_weighting_sos(fs), samples)
    step = int(round(fs * BLOCK_S))
    hop = int(round(fs * BLOCK_S * (1.0 - OVERLAP)))
    if len(filtered) < step:
        return np.empty(0)
    n_blocks = 1 + (len(filtered) - step) // hop
    out = np.empty(n_blocks)
    sq = filtered * filtered
    csum = np.concatenate([[0.0], np.cumsum(sq)])
    for i in range(n_blocks):
        start = i * hop
        out[i] = (csum[start + step] - csum[start]) / step
    return out


def _lufs(mean_square: float) -> float:
    if mean_square <= 0.0:
        return -np.inf
    return _OFFSET + 10.0 * np.log10(mean_square)


def integrated_loudness(samples: np.ndarray, fs: float) -> float:
    """Gated integrated loudness in LUFS; -inf when no block passes the gates."""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    z = _block_mean_squares(samples, fs)
    if z.size == 0:
        return -np.inf
    block_l = np.array([_lufs(v) for v in z])
    passed = z[block_l > ABS_GATE_LUFS]
    if passed.size == 0:
        return -np.inf
    rel_threshold = _lufs(passed.mean()) + REL_GATE_LU
    keep = z[(block_l > ABS_GATE_LUFS) & (block_l > rel_threshold)]
    if keep.size == 0:
        return -np.inf
    return _lufs(keep.mean())


def normalize_loudness(
    samples: np.ndarray,
    fs: float,
    target_lufs: float = -23.0,
    max_iterations: int = 3,
) -> tuple[np.ndarray, float, bool]:
    """Scale `samples` so the integrated loudness hits the target.

    Gating means one gain application may land slightly off target (the set
    of gated blocks changes with level), so the measurement is iterated.
    Returns (gained samples, measured loudness before gain, warning flag);
    the warning is set and the audio returned unchanged when the loudness is
    unmeasurable (digital silence or everything below the absolute gate).
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    before = integrated_loudness(samples, fs)
    if not np.isfinite(before):
        return samples, before, True
    out = samples
    measured = before
    for _ in range(max_iterations):
        if abs(measured - target_lufs) < 0.02:
            break
        out = out * 10.0 ** ((target_lufs - measured) / 20.0)
        measured = integrated_loudness(out, fs)
    return out, before, False
