"""Time the hot kernels on the numba and pure-numpy backends.

    python benchmarks/bench_kernels.py [--repeat 5]

JIT compilation is excluded by a warm-up call before timing.
"""

import argparse
import time

import numpy as np

from sepdecide import _kernels
from sepdecide.concurrence import build_biconcurrence, build_family, extract_T
from sepdecide.oracles import gen_random_state, werner_state
from sepdecide.state import eigen_components
from sepdecide.xl import QuadraticSystem, expand_system, solve


def cases(rng):
    A = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
    T = A + A.transpose(0, 2, 1)
    es = expand_system(QuadraticSystem(T), 6)
    bounds = np.array(es.bounds)
    Tw = extract_T(build_biconcurrence(build_family(eigen_components(werner_state(0.6))))).matrices
    U0 = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    U, _ = np.linalg.qr(U0)
    s = gen_random_state((3, 3), 4, seed=3)
    Ts = extract_T(build_biconcurrence(build_family(eigen_components(s)))).matrices
    return {
        "fill r=4 N=3 D=6": lambda: expand_system(QuadraticSystem(T), 6),
        f"gauss eliminate {es.matrix.shape[0]}x{es.matrix.shape[1]}": lambda: _kernels.block_eliminate(es.matrix, bounds, 1e-10),
        "g0 value+grad K=8 r=4": lambda: _kernels.g0_value_grad(U, Tw),
        "descend 2000 steps K=8 r=4": lambda: _kernels.descend(U0, Tw, 2000, 0.0),
        "xl solve (3,3) rank 4": lambda: solve(QuadraticSystem(Ts)),
    }


def bench(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    saved = _kernels.get_backend()
    rows = {}
    for name in backends:
        _kernels.set_backend(name)
        for label, fn in cases(np.random.default_rng(0)).items():
            rows.setdefault(label, {})[name] = bench(fn, args.repeat)
    _kernels.set_backend(saved)
    print(f"{'kernel':40s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, t in rows.items():
        line = f"{label:40s}" + "".join(f"{1e3 * t[b]:10.3f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{t['numpy'] / t['numba']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
