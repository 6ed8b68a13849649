#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel on representative workloads under both backends in
subprocesses (the backend is fixed at import time by PARKATTN_NUMBA), prints
a per-kernel table, and checks the two backends agree numerically.

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import textwrap

WORKER = textwrap.dedent(
    """
    import json, time
    import numpy as np
    from parkattn import kernels

    rng = np.random.default_rng(0)
    results = {"backend": kernels.backend()}

    def bench(name, fn, repeats=5):
        fn()  # warmup / JIT compile
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = fn()
            best = min(best, time.perf_counter() - t0)
        results[name] = {"seconds": best, "checksum": checksum(out)}

    def checksum(out):
        if isinstance(out, tuple):
            return float(sum(np.asarray(o, dtype=np.float64).sum() for o in out))
        return float(np.asarray(out, dtype=np.float64).sum())

    dist = np.abs(rng.normal(size=(400, 400)))
    bench("dtw_table_400x400", lambda: kernels.dtw_table(dist))

    frames = rng.normal(size=(600, 400))
    bench("nacf_600_frames", lambda: kernels.nacf_frames(frames, 32, 320))

    wave = np.abs(np.sin(np.arange(16000 * 8) * 2 * np.pi * 150 / 16000)) + 0.01 * np.abs(
        rng.normal(size=16000 * 8)
    )
    bench("cycle_peaks_8s", lambda: kernels.cycle_peaks(wave, 0, wave.size, 106.7))

    r = np.correlate(rng.normal(size=400), rng.normal(size=400), mode="full")[399:]
    r[0] = np.abs(r).sum()
    bench("levinson_order12_x500", lambda: [kernels.levinson(r[:13], 12) for _ in range(500)][-1])

    print(json.dumps(results))
    """
)


def run_backend(flag: str) -> dict:
    env = dict(os.environ, PARKATTN_NUMBA=flag)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER], env=env, capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise SystemExit(f"worker failed under PARKATTN_NUMBA={flag}:\n{proc.stderr}")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    numba = run_backend("1")
    numpy_only = run_backend("0")
    print(f"{'kernel':<24} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name in numba:
        if name == "backend":
            continue
        t_nb = numba[name]["seconds"]
        t_np = numpy_only[name]["seconds"]
        agree = abs(numba[name]["checksum"] - numpy_only[name]["checksum"]) <= 1e-6 * max(
            1.0, abs(numpy_only[name]["checksum"])
        )
        flag = "" if agree else "  (MISMATCH)"
        print(f"{name:<24} {t_nb * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x{flag}")
        if not agree:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
