"""Time the compiled and pure-numpy kernel backends on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--threads 1] [--quick]

Prints one line per kernel with the best wall time of each backend, the
speed-up, and the max abs difference between their outputs.
"""

import argparse
import time

import numpy as np

from fracdiff import kernels
from fracdiff.fracops import l1_weights


def _cases(quick):
    rng = np.random.default_rng(0)
    n_modes, n_steps = (65, 1000) if quick else (257, 4000)
    lam = np.linspace(0.0, 50.0, n_modes)
    dt = 1e-3
    x = rng.standard_normal(200_000 if quick else 2_000_000) + 0j
    g = rng.standard_normal((n_modes, n_steps)) + 1j * rng.standard_normal((n_modes, n_steps))
    w = np.log1p(np.arange(n_steps, dtype=float))
    decay = np.exp(-lam * dt)
    wp = np.full(n_modes, dt / 2)
    b = l1_weights(0.7, n_steps + 1)
    c = dt**-0.7 / 1.1
    return {
        "neumaier_sum": lambda k: k.neumaier_sum(x),
        "causal_convolve": lambda k, t: k.causal_convolve(w, g, t),
        "l1_relaxation": lambda k, t: k.l1_relaxation(lam, b, c, n_steps, t),
        "exp_convolve": lambda k, t: k.exp_convolve(decay, wp, wp, g, t),
    }


def _best(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="small sizes, for smoke runs")
    args = ap.parse_args()

    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled backend not built; only the numpy fallback is available")
    print(f"{'kernel':<18}" + "".join(f"{n + ' [s]':>14}" for n in names) + f"{'speed-up':>10}{'max diff':>11}")
    for name, fn in _cases(args.quick).items():
        times, outs = [], []
        for backend in names:
            mod = kernels.get_backend(backend)
            call = (lambda: fn(mod)) if name == "neumaier_sum" else (lambda: fn(mod, args.threads))
            t, out = _best(call, args.repeat)
            times.append(t)
            outs.append(np.asarray(out))
        ratio = times[-1] / times[0] if len(times) > 1 else 1.0
        diff = float(np.max(np.abs(outs[0] - outs[-1])))
        print(f"{name:<18}" + "".join(f"{t:>14.4f}" for t in times) + f"{ratio:>9.1f}x{diff:>11.1e}")


if __name__ == "__main__":
    main()
