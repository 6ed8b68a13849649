"""Independent BS.1770 integrated-loudness meter used as a test oracle.

Deliberately shares no code with parkattn.features.loudness: the signal is
first brought to 48 kHz (where the standard publishes exact filter
coefficients), filtered by the two published biquads applied transposed-
direct-form via lfilter, and gated per the standard.  The production meter
instead derives coefficients parametrically at the native rate.
"""

import numpy as np
from scipy.signal import lfilter, resample_poly

# published 48 kHz K-weighting coefficients (stage 1 shelf, stage 2 high-pass)
B1 = [1.53512485958697, -2.69169618940638, 1.19839281085285]
A1 = [1.0, -1.69065929318241, 0.73248077421585]
B2 = [1.0, -2.0, 1.0]
A2 = [1.0, -1.99004745483398, 0.99007225036621]


def measure_lufs(samples, fs):
    samples = np.asarray(samples, dtype=np.float64)
    if fs != 48000:
        from fractions import Fraction

        frac = Fraction(48000, int(fs))
        samples = resample_poly(samples, frac.numerator, frac.denominator)
        fs = 48000
    weighted = lfilter(B2, A2, lfilter(B1, A1, samples))
    block = int(0.4 * fs)
    hop = int(0.1 * fs)
    if len(weighted) < block:
        return float("-inf")
    powers = []
    for start in range(0, len(weighted) - block + 1, hop):
        seg = weighted[start : start + block]
        powers.append(float(np.mean(seg * seg)))
    powers = np.array(powers)

    def lufs(p):
        return -0.691 + 10.0 * np.log10(p) if p > 0 else float("-inf")

    loud = np.array([lufs(p) for p in powers])
    above_abs = powers[loud > -70.0]
    if above_abs.size == 0:
        return float("-inf")
    rel_gate = lufs(above_abs.mean()) - 10.0
    kept = powers[(loud > -70.0) & (loud > rel_gate)]
    if kept.size == 0:
        return float("-inf")
    return lufs(kept.mean())
