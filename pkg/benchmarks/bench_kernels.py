"""Time the RK4 loop on compiled real systems, numba against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""
import argparse
import random
import time

import numpy as np

from superode import io
from superode.dynamics import _kernels, expand_to_real
from superode.dynamics.riccati import RiccatiSpec, riccati_system


def cases():
    yield "lienard (4 coords)", expand_to_real(io.load_system(io.data_path("lienard.json")).flow())
    yield "example2 (8 coords)", expand_to_real(io.load_system(io.data_path("example2.json")).flow())
    yield "free_lienard m=6 (72 coords)", expand_to_real(io.load_system(io.data_path("free_lienard.json")).flow(), 6)
    spec = RiccatiSpec.random(random.Random(0), 4)
    yield "riccati 4x4 (16 coords)", riccati_system(spec)


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    h = 1e-4
    print(f"backend in use: {_kernels.BACKEND}; {args.steps} RK4 steps, best of {args.repeat}")
    print(f"{'system':<30}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for label, R in cases():
        arrays = R.compiled()
        x0 = np.full(R.n, 0.1)
        t_np = best(lambda: _kernels._rk4_numpy(x0, h, args.steps, 1, *arrays), args.repeat)
        if _kernels.HAVE_NUMBA:
            _kernels.rk4_loop(x0, h, 2, 1, *arrays)  # compile outside the timing
            t_nb = best(lambda: _kernels.rk4_loop(x0, h, args.steps, 1, *arrays), args.repeat)
            a, _ = _kernels.rk4_loop(x0, h, args.steps, 1, *arrays)
            b, _ = _kernels._rk4_numpy(x0, h, args.steps, 1, *arrays)
            assert np.allclose(a, b, rtol=1e-10, atol=1e-12), label
            print(f"{label:<30}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{label:<30}{t_np:>12.4f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
