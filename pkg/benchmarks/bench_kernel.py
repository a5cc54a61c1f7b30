"""Compare the compiled and numpy integration kernels.

    python3 benchmarks/bench_kernel.py [--steps 1000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from symclone.kernel import BACKENDS
from symclone.dynamics import SCHEMES
from symclone.presets import PRESET_NAMES, get_preset


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--dt", type=float, default=1e-3)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print(f"{'preset':<22} {'backend':<9} {'time [s]':>10} {'steps/s':>12}  max|diff|")
    for name in PRESET_NAMES:
        p = get_preset(name)
        kh, hbar, x0 = p.hamiltonian.compile(), p.initial.space.hbar, p.initial.coords
        results = {}
        for backend, mod in sorted(BACKENDS.items()):
            def run(mod=mod):
                return mod.integrate(kh, hbar, x0, args.dt, args.steps, SCHEMES["yoshida4"], 1e-12, 50)

            results[backend] = (best_time(run, args.repeat), run()[0])
        ref = results["python"][1]
        for backend, (t, states) in results.items():
            diff = float(np.max(np.abs(states - ref)))
            print(f"{name:<22} {backend:<9} {t:>10.4f} {args.steps / t:>12.0f}  {diff:.1e}")
        if "compiled" in results:
            print(f"{'':<22} speedup {results['python'][0] / results['compiled'][0]:.0f}x")


if __name__ == "__main__":
    main()
